#include <doctest.h>

#include "tcsim/device.hpp"
#include "tcsim/errors.hpp"
#include "tcsim/units.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

using namespace tcsim;

namespace {

ModeSpec q0_like() {
    ModeSpec m;
    m.label = "Q0";
    m.kind = ModeKind::transmon;
    m.f_sweetspot_ghz = 5.295;
    m.anharmonicity_mhz = -275;
    return m;
}

// Independent evaluation of the arc closed form, kept deliberately separate
// from the implementation.
double arc_oracle(double f_ss, double ec, double asym, double phi) {
    double ej = (f_ss + ec) * (f_ss + ec) / (8.0 * ec);
    double d = std::sqrt(std::pow(std::cos(M_PI * phi), 2) +
                         asym * asym * std::pow(std::sin(M_PI * phi), 2));
    return std::sqrt(8.0 * ej * ec * d) - ec;
}

} // namespace

TEST_CASE("flux arc basics") {
    const ModeSpec m = q0_like();
    CHECK(mode_frequency_at_flux(m, 0.0) == doctest::Approx(5.295).epsilon(1e-12));
    // a = 0, phi = 0.5: junction fully frustrated, f = -E_C (up to the
    // floating-point residue of cos(pi/2))
    CHECK(std::abs(mode_frequency_at_flux(m, 0.5) + 0.275) < 1e-6);
    // independent closed-form evaluation at phi = 0.1
    CHECK(mode_frequency_at_flux(m, 0.1) ==
          doctest::Approx(arc_oracle(5.295, 0.275, 0.0, 0.1)).epsilon(1e-12));
}

TEST_CASE("flux arc periodicity and symmetry") {
    ModeSpec m = q0_like();
    m.squid_asymmetry = 0.3;
    m.flux_offset = 0.12;
    for (double phi : {-0.4, -0.1, 0.05, 0.3, 0.77}) {
        CHECK(mode_frequency_at_flux(m, phi) ==
              doctest::Approx(mode_frequency_at_flux(m, phi + 1.0)).epsilon(1e-12));
        CHECK(mode_frequency_at_flux(m, m.flux_offset + phi) ==
              doctest::Approx(mode_frequency_at_flux(m, m.flux_offset - phi)).epsilon(1e-12));
    }
}

TEST_CASE("energy derivation self-consistency") {
    const ModeSpec m = q0_like();
    CHECK(m.ec_ghz() == doctest::Approx(0.275));
    const double rebuilt = std::sqrt(8.0 * m.ej_ghz() * m.ec_ghz()) - m.ec_ghz();
    CHECK(std::abs(rebuilt - m.f_sweetspot_ghz) < 1e-6); // 1 kHz
}

TEST_CASE("flux_for_frequency inverts the arc") {
    const ModeSpec m = q0_like();
    CHECK(std::abs(flux_for_frequency(m, m.f_sweetspot_ghz)) < 1e-6);

    // bisection oracle target: forward map returns 5.0 GHz within 1 kHz
    const double phi = flux_for_frequency(m, 5.0);
    CHECK(std::abs(mode_frequency_at_flux(m, phi) - 5.0) < 1e-6);

    CHECK_THROWS_AS(flux_for_frequency(m, m.f_sweetspot_ghz + 0.1), OutOfArcRange);
    CHECK_THROWS_AS(flux_for_frequency(m, -0.5), OutOfArcRange);

    // round trip on the monotone branch, within 1e-6 flux quanta
    for (double p : {0.05, 0.17, 0.33, 0.45}) {
        const double f = mode_frequency_at_flux(m, p);
        CHECK(std::abs(flux_for_frequency(m, f) - p) < 1e-6);
    }
}

TEST_CASE("single-mode Hamiltonian spectrum") {
    DeviceGraph g;
    ModeSpec m = q0_like();
    m.f_sweetspot_ghz = 5.0;
    m.n_levels = 3;
    g.modes = {m};
    FrequencyMap f{{"Q0", 5.0}};
    auto h = build_hamiltonian(g, f);
    REQUIRE(h.rows() == 3);
    CHECK(radns_to_ghz(h(0, 0).real()) == doctest::Approx(0.0));
    CHECK(radns_to_ghz(h(1, 1).real()) == doctest::Approx(5.0));
    CHECK(radns_to_ghz(h(2, 2).real()) == doctest::Approx(9.725)); // 2w + alpha
}

TEST_CASE("decoupled graph spectrum is a Cartesian sum") {
    DeviceGraph g;
    ModeSpec a = q0_like();
    ModeSpec b = q0_like();
    b.label = "Q1";
    b.f_sweetspot_ghz = 5.218;
    b.anharmonicity_mhz = -285;
    g.modes = {a, b};
    FrequencyMap f{{"Q0", 5.295}, {"Q1", 5.218}};

    auto h = build_hamiltonian(g, f); // no edges: fully decoupled
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);

    DeviceGraph ga, gb;
    ga.modes = {a};
    gb.modes = {b};
    auto ha = build_hamiltonian(ga, f);
    auto hb = build_hamiltonian(gb, f);
    std::vector<double> sums;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            sums.push_back(ha(i, i).real() + hb(j, j).real());
    std::sort(sums.begin(), sums.end());
    for (int k = 0; k < 9; ++k)
        CHECK(es.eigenvalues()(k) == doctest::Approx(sums[static_cast<size_t>(k)]).epsilon(1e-12));
}

TEST_CASE("Hamiltonian hermiticity and dimension cap") {
    DeviceGraph g = load_device_file(std::string(TCSIM_DATA_DIR) + "/starfish5.dev");
    DeviceGraph sub = g.edge_subgraph(g.edges[0]);
    FrequencyMap f = sweetspot_frequencies(sub);
    auto h = build_hamiltonian(sub, f);
    CHECK((h - h.adjoint()).norm() / h.norm() < 1e-12);

    for (auto& m : sub.modes) m.n_levels = 7; // 343 > 243
    CHECK_THROWS_AS(build_hamiltonian(sub, sweetspot_frequencies(sub)), DimensionCap);
}

TEST_CASE("device file loader") {
    DeviceGraph g = load_device_file(std::string(TCSIM_DATA_DIR) + "/starfish5.dev");
    CHECK(g.modes.size() == 9);
    CHECK(g.edges.size() == 4);
    CHECK(g.noise.size() == 9);
    CHECK(g.mode("Q0").f_sweetspot_ghz == doctest::Approx(5.295));
    CHECK(g.mode("C04").kind == ModeKind::coupler);
    CHECK(g.edge("Q0", "Q2").coupler == "C02");
    CHECK(g.edge("Q2", "Q0").coupler == "C02");
    CHECK(g.noise.at("Q2").t1_us == doctest::Approx(68.2));
    CHECK_THROWS_AS(g.mode_index("Q9"), ValidationError);
}

TEST_CASE("mode validation") {
    ModeSpec m = q0_like();
    m.anharmonicity_mhz = 100;
    CHECK_THROWS_AS(m.validate(), ValidationError);
    m = q0_like();
    m.n_levels = 1;
    CHECK_THROWS_AS(m.validate(), ValidationError);
    m = q0_like();
    m.squid_asymmetry = 1.0;
    CHECK_THROWS_AS(m.validate(), ValidationError);
}

TEST_CASE("hybridized coherence") {
    DeviceGraph g = load_device_file(std::string(TCSIM_DATA_DIR) + "/starfish5.dev");
    DeviceGraph sub = g.edge_subgraph(g.edge("Q0", "Q1"));
    FrequencyMap f = sweetspot_frequencies(sub);

    SUBCASE("coupler at sweetspot: exponential, near-bare T2") {
        auto hc = hybridized_coherence(sub, f, "Q1");
        CHECK(hc.decay_shape == DecayShape::exponential);
        // weakly hybridized: effective T2 within 15% of the bare value
        CHECK(hc.t2_eff_us > 0.85 * g.noise.at("Q1").t2_echo_us);
    }

    SUBCASE("coupler ~300 MHz above Q1: gaussian-dominated") {
        f["C01"] = g.mode("Q1").f_sweetspot_ghz + 0.3;
        auto hc = hybridized_coherence(sub, f, "Q1");
        CHECK(hc.decay_shape == DecayShape::gaussian_dominated);
        CHECK(hc.sin2_theta > 0.01);
    }

    SUBCASE("equal bare T1 mixes to the same value") {
        DeviceGraph s2 = sub;
        auto n = s2.noise.at("Q1");
        n.t1_us = 40.0;
        s2.noise["Q1"] = n;
        auto nc = s2.noise.at("C01");
        nc.t1_us = 40.0;
        s2.noise["C01"] = nc;
        FrequencyMap f2 = sweetspot_frequencies(s2);
        f2["C01"] = 5.6; // strongly hybridized
        auto hc = hybridized_coherence(s2, f2, "Q1");
        CHECK(hc.t1_eff_us == doctest::Approx(40.0).epsilon(1e-6));
    }
}
