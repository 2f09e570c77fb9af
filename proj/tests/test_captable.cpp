#include <doctest.h>

#include "tcsim/captable.hpp"
#include "tcsim/errors.hpp"
#include "tcsim/units.hpp"

#include <cmath>
#include <fstream>
#include <random>

using namespace tcsim;

namespace {

// Synthetic ground truth: every matrix entry is multilinear in the geometry
// dimensions, entry (r, c) = base_rc + sum_d slope_rcd * t_d with t the
// normalized coordinate. Serves as the oracle the LUT must reproduce.
struct MultilinearOracle {
    int n_dims;
    int n_nodes;
    Eigen::MatrixXd base;
    std::vector<Eigen::MatrixXd> slope; // per dimension

    Eigen::MatrixXd eval(const std::vector<double>& t) const {
        Eigen::MatrixXd m = base;
        for (int d = 0; d < n_dims; ++d) m += t[static_cast<size_t>(d)] * slope[static_cast<size_t>(d)];
        return m;
    }
};

MultilinearOracle make_oracle(int n_dims, int n_nodes, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    MultilinearOracle o;
    o.n_dims = n_dims;
    o.n_nodes = n_nodes;
    o.base = Eigen::MatrixXd::Zero(n_nodes, n_nodes);
    for (int r = 0; r < n_nodes; ++r)
        for (int c = r; c < n_nodes; ++c) {
            const double v = r == c ? 60.0 + 10.0 * u(rng) : -2.0 + 0.5 * u(rng);
            o.base(r, c) = o.base(c, r) = v;
        }
    for (int d = 0; d < n_dims; ++d) {
        Eigen::MatrixXd s = Eigen::MatrixXd::Zero(n_nodes, n_nodes);
        for (int r = 0; r < n_nodes; ++r)
            for (int c = r; c < n_nodes; ++c) {
                const double v = (r == c ? 5.0 : 0.3) * u(rng);
                s(r, c) = s(c, r) = v;
            }
        o.slope.push_back(s);
    }
    return o;
}

GeometryLUT lut_from_oracle(const MultilinearOracle& o, double perturb_rel = 0.0,
                            unsigned seed = 7) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    GeometryLUT lut;
    for (int d = 0; d < o.n_dims; ++d) {
        lut.dim_names.push_back("d" + std::to_string(d));
        lut.corner_low.push_back(10.0 + d);
        lut.corner_high.push_back(20.0 + d);
    }
    for (int n = 0; n < o.n_nodes; ++n) lut.node_names.push_back("n" + std::to_string(n));
    const size_t n_corners = size_t{1} << o.n_dims;
    for (size_t c = 0; c < n_corners; ++c) {
        std::vector<double> t(static_cast<size_t>(o.n_dims));
        for (int d = 0; d < o.n_dims; ++d) t[static_cast<size_t>(d)] = (c >> d) & 1 ? 1.0 : 0.0;
        Eigen::MatrixXd m = o.eval(t);
        if (perturb_rel > 0.0) {
            for (int r = 0; r < o.n_nodes; ++r)
                for (int cc = r; cc < o.n_nodes; ++cc) {
                    const double f = 1.0 + perturb_rel * u(rng);
                    m(r, cc) *= f;
                    if (cc != r) m(cc, r) = m(r, cc);
                }
        }
        lut.corner_capacitances.push_back(m);
    }
    return lut;
}

std::vector<double> dims_at(const GeometryLUT& lut, const std::vector<double>& t) {
    std::vector<double> x;
    for (int d = 0; d < lut.n_dims(); ++d)
        x.push_back(lut.corner_low[static_cast<size_t>(d)] +
                    t[static_cast<size_t>(d)] *
                        (lut.corner_high[static_cast<size_t>(d)] - lut.corner_low[static_cast<size_t>(d)]));
    return x;
}

DesignLUTs make_design_luts() {
    DesignLUTs luts;
    luts.qubit_i = load_lut_file(std::string(TCSIM_DATA_DIR) + "/lut_qubit_i.lut");
    luts.coupler = load_lut_file(std::string(TCSIM_DATA_DIR) + "/lut_coupler.lut");
    luts.qubit_j = load_lut_file(std::string(TCSIM_DATA_DIR) + "/lut_qubit_j.lut");
    luts.free_dims = {{0, 0}, {1, 0}, {1, 1}}; // qubit pad, coupler gap, direct cap
    luts.josephson_ghz = {{"Qi", 14.0}, {"C", 18.0}, {"Qj", 14.0}};
    luts.qubit_i_node = "Qi";
    luts.coupler_node = "C";
    luts.qubit_j_node = "Qj";
    return luts;
}

} // namespace

TEST_CASE("interpolation reproduces corners exactly") {
    auto o = make_oracle(3, 2, 11);
    auto lut = lut_from_oracle(o);
    lut.validate();
    // all-low corner
    CHECK((interpolate(lut, lut.corner_low) - lut.corner_capacitances[0]).norm() == 0.0);
    // every corner by bitmask
    for (size_t c = 0; c < lut.corner_capacitances.size(); ++c) {
        std::vector<double> x;
        for (int d = 0; d < lut.n_dims(); ++d)
            x.push_back((c >> d) & 1 ? lut.corner_high[static_cast<size_t>(d)]
                                     : lut.corner_low[static_cast<size_t>(d)]);
        CHECK((interpolate(lut, x) - lut.corner_capacitances[c]).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("interpolation is exact on multilinear ground truth") {
    auto o = make_oracle(4, 3, 23);
    auto lut = lut_from_oracle(o);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 25; ++trial) {
        std::vector<double> t(4);
        for (auto& v : t) v = u(rng);
        const Eigen::MatrixXd want = o.eval(t);
        const Eigen::MatrixXd got = interpolate(lut, dims_at(lut, t));
        CHECK((got - want).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("0.3% corner perturbation stays within 0.3% at the midpoint") {
    auto o = make_oracle(3, 3, 31);
    auto lut = lut_from_oracle(o, 0.003);
    const std::vector<double> t(3, 0.5);
    const Eigen::MatrixXd want = o.eval(t);
    const Eigen::MatrixXd got = interpolate(lut, dims_at(lut, t));
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c)
            CHECK(std::abs(got(r, c) - want(r, c)) <= 0.003 * std::abs(want(r, c)) + 1e-12);
}

TEST_CASE("interpolation rejects out-of-box dimensions") {
    auto o = make_oracle(2, 2, 3);
    auto lut = lut_from_oracle(o);
    auto x = dims_at(lut, {0.5, 0.5});
    x[1] = lut.corner_high[1] + 0.1;
    CHECK_THROWS_AS(interpolate(lut, x), OutOfRange);
}

TEST_CASE("LUT validation") {
    auto o = make_oracle(2, 2, 3);
    auto lut = lut_from_oracle(o);
    SUBCASE("wrong corner count") {
        lut.corner_capacitances.pop_back();
        CHECK_THROWS_AS(lut.validate(), ValidationError);
    }
    SUBCASE("asymmetric corner") {
        lut.corner_capacitances[1](0, 1) += 1.0;
        CHECK_THROWS_AS(lut.validate(), ValidationError);
    }
    SUBCASE("inverted bounds") {
        std::swap(lut.corner_low[0], lut.corner_high[0]);
        CHECK_THROWS_AS(lut.validate(), ValidationError);
    }
}

TEST_CASE("assembly") {
    SUBCASE("zero cross blocks give a block-diagonal result") {
        Eigen::MatrixXd qi = Eigen::MatrixXd::Identity(1, 1) * 70.0;
        Eigen::MatrixXd c = Eigen::MatrixXd::Identity(1, 1) * 60.0;
        Eigen::MatrixXd qj = Eigen::MatrixXd::Identity(1, 1) * 72.0;
        auto a = assemble(qi, {"Qi"}, c, {"C"}, qj, {"Qj"});
        CHECK(a.node_names == std::vector<std::string>{"Qi", "C", "Qj"});
        CHECK(a.matrix(0, 0) == 70.0);
        CHECK(a.matrix(1, 1) == 60.0);
        CHECK(a.matrix(2, 2) == 72.0);
        CHECK(a.matrix(0, 1) == 0.0);
        CHECK(a.matrix(0, 2) == 0.0);
    }

    SUBCASE("shared boundary nodes accumulate and keep symmetry") {
        Eigen::MatrixXd qi(1, 1);
        qi << 70.0;
        Eigen::MatrixXd c(3, 3);
        c << 1.5, -1.4, -0.1, -1.4, 63.0, -1.4, -0.1, -1.4, 1.5;
        Eigen::MatrixXd qj(1, 1);
        qj << 70.0;
        auto a = assemble(qi, {"Qi"}, c, {"Qi", "C", "Qj"}, qj, {"Qj"});
        REQUIRE(a.node_names.size() == 3);
        CHECK(a.matrix(a.node_index("Qi"), a.node_index("Qi")) == doctest::Approx(71.5));
        CHECK(a.matrix(a.node_index("Qj"), a.node_index("Qj")) == doctest::Approx(71.5));
        CHECK((a.matrix - a.matrix.transpose()).norm() == 0.0);
        // comparison against the directly constructed full matrix
        Eigen::MatrixXd full(3, 3);
        full << 71.5, -1.4, -0.1, -1.4, 63.0, -1.4, -0.1, -1.4, 71.5;
        CHECK((a.matrix - full).cwiseAbs().maxCoeff() < 1e-12);
    }

    SUBCASE("qubit blocks sharing a node are rejected") {
        Eigen::MatrixXd one = Eigen::MatrixXd::Identity(1, 1);
        CHECK_THROWS_AS(assemble(one, {"X"}, one, {"C"}, one, {"X"}), LabelMismatch);
    }

    SUBCASE("label count must match block size") {
        Eigen::MatrixXd two = Eigen::MatrixXd::Identity(2, 2);
        Eigen::MatrixXd one = Eigen::MatrixXd::Identity(1, 1);
        CHECK_THROWS_AS(assemble(two, {"A"}, one, {"C"}, one, {"B"}), LabelMismatch);
    }
}

TEST_CASE("energies from capacitance") {
    SUBCASE("diagonal 70 fF gives about 0.277 GHz") {
        AssembledCapacitance cap;
        cap.matrix = Eigen::MatrixXd::Identity(1, 1) * 70.0;
        cap.node_names = {"Q"};
        auto en = energies_from_capacitance(cap);
        // arithmetic oracle: e^2 / (2 * 70 fF) / h
        const double e = 1.602176634e-19, h = 6.62607015e-34;
        const double oracle_ghz = e * e / (2.0 * 70e-15) / h * 1e-9;
        CHECK(en.e_c_ghz[0] == doctest::Approx(oracle_ghz).epsilon(1e-12));
        CHECK(en.e_c_ghz[0] == doctest::Approx(0.2767).epsilon(1e-3));
    }

    SUBCASE("identical decoupled nodes: equal charging, zero coupling") {
        AssembledCapacitance cap;
        cap.matrix = Eigen::MatrixXd::Identity(2, 2) * 65.0;
        cap.node_names = {"A", "B"};
        auto en = energies_from_capacitance(cap);
        CHECK(en.e_c_ghz[0] == en.e_c_ghz[1]);
        CHECK(en.e_coupling_ghz(0, 1) == 0.0);
    }

    SUBCASE("coupled pair matches the analytic 2x2 inverse") {
        AssembledCapacitance cap;
        cap.matrix.resize(2, 2);
        cap.matrix << 70.0, -3.0, -3.0, 80.0;
        cap.node_names = {"A", "B"};
        auto en = energies_from_capacitance(cap);
        const double det = 70.0 * 80.0 - 9.0;
        CHECK(en.e_c_ghz[0] == doctest::Approx(charging_energy_ghz_ff * 80.0 / det).epsilon(1e-12));
        CHECK(en.e_coupling_ghz(0, 1) ==
              doctest::Approx(2.0 * charging_energy_ghz_ff * 3.0 / det).epsilon(1e-12));
        CHECK(en.e_coupling_ghz(0, 1) == en.e_coupling_ghz(1, 0));
    }

    SUBCASE("singular matrix is rejected") {
        AssembledCapacitance cap;
        cap.matrix = Eigen::MatrixXd::Zero(2, 2);
        cap.node_names = {"A", "B"};
        CHECK_THROWS_AS(energies_from_capacitance(cap), SingularMatrix);
    }
}

TEST_CASE("coupling strength formula") {
    CHECK(coupling_strength_mhz(0.0, 14.0, 0.28, 14.0, 0.28) == 0.0);
    // doubling the coupling energy doubles g exactly
    const double g1 = coupling_strength_mhz(0.001, 14.0, 0.28, 18.0, 0.34);
    const double g2 = coupling_strength_mhz(0.002, 14.0, 0.28, 18.0, 0.34);
    CHECK(g2 == doctest::Approx(2.0 * g1).epsilon(1e-15));
    // closed form check
    const double want = ghz_to_mhz(0.001 / std::sqrt(2.0) *
                                   std::pow((14.0 / 0.28) * (18.0 / 0.34), 0.25));
    CHECK(g1 == doctest::Approx(want).epsilon(1e-15));
    // inversion to hit 6 MHz round-trips through the forward map
    const double e_needed = 6.0 / g1 * 0.001;
    CHECK(coupling_strength_mhz(e_needed, 14.0, 0.28, 18.0, 0.34) == doctest::Approx(6.0).epsilon(1e-12));
    CHECK_THROWS_AS(coupling_strength_mhz(0.001, -1.0, 0.28, 14.0, 0.28), ValidationError);
}

TEST_CASE("design LUT files load and forward-map sensibly") {
    auto luts = make_design_luts();
    CHECK(luts.coupler.n_dims() == 2);
    CHECK(luts.coupler.node_names == std::vector<std::string>{"Qi", "C", "Qj"});
    auto r = design_forward(luts, {70.0}, {1.75, 0.26}, {70.0});
    CHECK(r.e_c_ghz == doctest::Approx(0.269).epsilon(0.01));
    CHECK(r.g_qc_mhz == doctest::Approx(78.4).epsilon(0.01));
    CHECK(r.g_qq_mhz == doctest::Approx(11.76).epsilon(0.01));
}

TEST_CASE("design search") {
    auto luts = make_design_luts();

    SUBCASE("fixed point: targets from a known forward map are recovered") {
        auto known = design_forward(luts, {72.0}, {1.2, 0.1}, {70.0});
        DesignTargets t{known.g_qq_mhz, known.g_qc_mhz, known.e_c_ghz};
        auto r = design_search(luts, t);
        CHECK(std::abs(r.g_qq_mhz / t.g_qq_mhz - 1.0) <= 0.01);
        CHECK(std::abs(r.g_qc_mhz / t.g_qc_mhz - 1.0) <= 0.01);
        CHECK(std::abs(r.e_c_ghz / t.e_c_ghz - 1.0) <= 0.01);
        CHECK(r.residual <= 0.01);
    }

    SUBCASE("reference targets converge") {
        DesignTargets t{6.0, 70.0, 0.27};
        auto r = design_search(luts, t);
        CHECK(r.residual <= 0.01);
        CHECK(r.iterations < 200);
        // forward-map the returned dims independently
        auto check = design_forward(luts, r.dims_qubit_i, r.dims_coupler, r.dims_qubit_j);
        CHECK(std::abs(check.g_qq_mhz / 6.0 - 1.0) <= 0.011);
        CHECK(std::abs(check.g_qc_mhz / 70.0 - 1.0) <= 0.011);
        CHECK(std::abs(check.e_c_ghz / 0.27 - 1.0) <= 0.011);
    }

    SUBCASE("target outside the corner hull is Unreachable") {
        DesignTargets t{500.0, 70.0, 0.27};
        CHECK_THROWS_AS(design_search(luts, t), Unreachable);
    }
}

TEST_CASE("LUT loader rejects malformed text") {
    auto write_tmp = [](const std::string& text) {
        const std::string path = "tmp_captable_test.lut";
        std::ofstream out(path);
        out << text;
        return path;
    };
    SUBCASE("missing corner") {
        const auto p = write_tmp("[lut]\n"
                                 "dim_names = pad\ncorner_low = 1.0\ncorner_high = 2.0\nnodes = Q\n"
                                 "[corner 0]\nrow0 = 60.0\n");
        CHECK_THROWS_AS(load_lut_file(p), ValidationError);
    }
    SUBCASE("duplicate corner") {
        const auto p = write_tmp("[lut]\n"
                                 "dim_names = pad\ncorner_low = 1.0\ncorner_high = 2.0\nnodes = Q\n"
                                 "[corner 0]\nrow0 = 60.0\n[corner 0]\nrow0 = 61.0\n");
        CHECK_THROWS_AS(load_lut_file(p), ParseError);
    }
    SUBCASE("row length mismatch") {
        const auto p = write_tmp("[lut]\n"
                                 "dim_names = pad\ncorner_low = 1.0\ncorner_high = 2.0\nnodes = A, B\n"
                                 "[corner 0]\nrow0 = 60.0\nrow1 = 0.0, 60.0\n"
                                 "[corner 1]\nrow0 = 61.0, 0.0\nrow1 = 0.0, 61.0\n");
        CHECK_THROWS_AS(load_lut_file(p), ParseError);
    }
}
