#include "tcsim/device.hpp"
#include "tcsim/errors.hpp"
#include "tcsim/keyval.hpp"
#include "tcsim/units.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <iostream>
#include <set>

namespace tcsim {

void ModeSpec::validate() const {
    if (label.empty())
        throw ValidationError("mode label must not be empty");
    if (f_sweetspot_ghz <= 0.0)
        throw ValidationError("mode " + label + ": f_sweetspot must be > 0");
    if (anharmonicity_mhz >= 0.0)
        throw ValidationError("mode " + label + ": anharmonicity must be negative");
    if (squid_asymmetry < 0.0 || squid_asymmetry >= 1.0)
        throw ValidationError("mode " + label + ": squid_asymmetry must be in [0,1)");
    if (n_levels < 2)
        throw ValidationError("mode " + label + ": n_levels must be >= 2");
}

void DeviceGraph::validate() const {
    std::set<std::string> labels;
    for (const auto& m : modes) {
        m.validate();
        if (!labels.insert(m.label).second)
            throw ValidationError("duplicate mode label " + m.label);
    }
    for (const auto& e : edges) {
        if (e.qubit_a == e.qubit_b || e.qubit_a == e.coupler || e.qubit_b == e.coupler)
            throw ValidationError("edge " + e.qubit_a + "-" + e.qubit_b +
                                  ": endpoints and coupler must be distinct");
        for (const auto& lbl : {e.qubit_a, e.qubit_b, e.coupler})
            if (!labels.count(lbl))
                throw ValidationError("edge references unknown mode " + lbl);
        if (e.g_qc_a_mhz <= 0.0 || e.g_qc_b_mhz <= 0.0)
            throw ValidationError("edge " + e.qubit_a + "-" + e.qubit_b +
                                  ": qubit-coupler couplings must be > 0");
    }
    for (const auto& [lbl, ns] : noise) {
        if (!labels.count(lbl))
            throw ValidationError("noise entry references unknown mode " + lbl);
        // Measured tables can marginally violate the hierarchy; warn only.
        if (ns.t2_ramsey_us > ns.t2_echo_us || ns.t2_echo_us > 2.0 * ns.t1_us)
            std::cerr << "warning: mode " << lbl
                      << ": coherence times violate T2R <= T2E <= 2 T1\n";
    }
}

bool DeviceGraph::has_mode(const std::string& label) const {
    return std::any_of(modes.begin(), modes.end(),
                       [&](const ModeSpec& m) { return m.label == label; });
}

int DeviceGraph::mode_index(const std::string& label) const {
    for (size_t i = 0; i < modes.size(); ++i)
        if (modes[i].label == label) return static_cast<int>(i);
    throw ValidationError("unknown mode label " + label);
}

const ModeSpec& DeviceGraph::mode(const std::string& label) const {
    return modes[static_cast<size_t>(mode_index(label))];
}

const EdgeCoupling& DeviceGraph::edge(const std::string& qubit_a, const std::string& qubit_b) const {
    for (const auto& e : edges)
        if ((e.qubit_a == qubit_a && e.qubit_b == qubit_b) ||
            (e.qubit_a == qubit_b && e.qubit_b == qubit_a))
            return e;
    throw ValidationError("no edge between " + qubit_a + " and " + qubit_b);
}

DeviceGraph DeviceGraph::edge_subgraph(const EdgeCoupling& e) const {
    DeviceGraph g;
    for (const auto& lbl : {e.qubit_a, e.qubit_b, e.coupler}) {
        g.modes.push_back(mode(lbl));
        auto it = noise.find(lbl);
        if (it != noise.end()) g.noise[lbl] = it->second;
    }
    g.edges.push_back(e);
    return g;
}

double mode_frequency_at_flux(const ModeSpec& spec, double phi) {
    const double dphi = pi * (phi - spec.flux_offset);
    const double c = std::cos(dphi);
    const double s = std::sin(dphi);
    const double a = spec.squid_asymmetry;
    const double d = std::sqrt(c * c + a * a * s * s);
    const double ec = spec.ec_ghz();
    return std::sqrt(8.0 * spec.ej_ghz() * ec * d) - ec;
}

double flux_for_frequency(const ModeSpec& spec, double f_target_ghz) {
    const double f_max = spec.f_sweetspot_ghz;
    const double f_min = mode_frequency_at_flux(spec, spec.flux_offset + 0.5);
    if (f_target_ghz > f_max + 1e-12)
        throw OutOfArcRange("mode " + spec.label + ": target " + std::to_string(f_target_ghz) +
                            " GHz above sweetspot " + std::to_string(f_max) + " GHz");
    if (f_target_ghz < f_min)
        throw OutOfArcRange("mode " + spec.label + ": target " + std::to_string(f_target_ghz) +
                            " GHz below arc minimum " + std::to_string(f_min) + " GHz");
    // Arc is monotone decreasing on [offset, offset + 0.5]; bisect to 1 kHz.
    double lo = spec.flux_offset, hi = spec.flux_offset + 0.5;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (mode_frequency_at_flux(spec, mid) >= f_target_ghz)
            lo = mid;
        else
            hi = mid;
        if (hi - lo < 1e-15) break;
    }
    return 0.5 * (lo + hi);
}

FrequencyMap sweetspot_frequencies(const DeviceGraph& graph) {
    FrequencyMap f;
    for (const auto& m : graph.modes) f[m.label] = m.f_sweetspot_ghz;
    return f;
}

SpaceLayout space_layout(const DeviceGraph& graph) {
    SpaceLayout layout;
    for (const auto& m : graph.modes) {
        layout.dims.push_back(m.n_levels);
        layout.total_dim *= m.n_levels;
    }
    return layout;
}

int SpaceLayout::basis_index(const std::vector<int>& occupations) const {
    int idx = 0;
    for (size_t m = 0; m < dims.size(); ++m)
        idx = idx * dims[m] + occupations[m];
    return idx;
}

std::vector<int> SpaceLayout::occupations(int index) const {
    std::vector<int> occ(dims.size());
    for (size_t m = dims.size(); m-- > 0;) {
        occ[m] = index % dims[m];
        index /= dims[m];
    }
    return occ;
}

Eigen::MatrixXcd lowering_op(const SpaceLayout& layout, int mode_idx) {
    const int dim = layout.total_dim;
    Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(dim, dim);
    for (int i = 0; i < dim; ++i) {
        auto occ = layout.occupations(i);
        const int n = occ[static_cast<size_t>(mode_idx)];
        if (n == 0) continue;
        occ[static_cast<size_t>(mode_idx)] = n - 1;
        a(layout.basis_index(occ), i) = std::sqrt(static_cast<double>(n));
    }
    return a;
}

Eigen::MatrixXcd build_hamiltonian(const DeviceGraph& graph, const FrequencyMap& freqs,
                                   int dimension_cap) {
    const SpaceLayout layout = space_layout(graph);
    if (layout.total_dim > dimension_cap)
        throw DimensionCap("truncated dimension " + std::to_string(layout.total_dim) +
                           " exceeds cap " + std::to_string(dimension_cap));

    const int dim = layout.total_dim;
    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(dim, dim);

    // Diagonal part: w n + (alpha/2) n (n - 1) per mode.
    std::vector<double> w(graph.modes.size()), alpha(graph.modes.size());
    for (size_t m = 0; m < graph.modes.size(); ++m) {
        auto it = freqs.find(graph.modes[m].label);
        if (it == freqs.end())
            throw ValidationError("no frequency assigned to mode " + graph.modes[m].label);
        w[m] = ghz_to_radns(it->second);
        alpha[m] = ghz_to_radns(graph.modes[m].anharmonicity_mhz * 1e-3);
    }
    for (int i = 0; i < dim; ++i) {
        const auto occ = layout.occupations(i);
        double e = 0.0;
        for (size_t m = 0; m < occ.size(); ++m) {
            const double n = occ[m];
            e += w[m] * n + 0.5 * alpha[m] * n * (n - 1.0);
        }
        h(i, i) = e;
    }

    // Couplings g (a + a^+)(b + b^+), counter-rotating terms included.
    auto add_coupling = [&](int ma, int mb, double g_mhz) {
        if (g_mhz == 0.0) return;
        const double g = ghz_to_radns(g_mhz * 1e-3);
        const Eigen::MatrixXcd qa = lowering_op(layout, ma);
        const Eigen::MatrixXcd qb = lowering_op(layout, mb);
        const Eigen::MatrixXcd xa = qa + qa.adjoint();
        const Eigen::MatrixXcd xb = qb + qb.adjoint();
        h += g * xa * xb;
    };
    for (const auto& e : graph.edges) {
        const int ia = graph.mode_index(e.qubit_a);
        const int ib = graph.mode_index(e.qubit_b);
        const int ic = graph.mode_index(e.coupler);
        add_coupling(ia, ic, e.g_qc_a_mhz);
        add_coupling(ib, ic, e.g_qc_b_mhz);
        add_coupling(ia, ib, e.g_qq_mhz);
    }
    return h;
}

HybridizedCoherence hybridized_coherence(const DeviceGraph& graph, const FrequencyMap& freqs,
                                         const std::string& transmon) {
    const ModeSpec& q = graph.mode(transmon);
    if (q.kind != ModeKind::transmon)
        throw ValidationError(transmon + " is not a transmon");

    // Locate the single adjacent coupler and its coupling strength.
    const EdgeCoupling* edge = nullptr;
    double g_qc = 0.0;
    for (const auto& e : graph.edges) {
        if (e.qubit_a == transmon) { edge = &e; g_qc = e.g_qc_a_mhz; break; }
        if (e.qubit_b == transmon) { edge = &e; g_qc = e.g_qc_b_mhz; break; }
    }
    if (!edge)
        throw ValidationError(transmon + " has no adjacent coupler");
    const ModeSpec& c = graph.mode(edge->coupler);

    // Two-mode subsystem: transmon + coupler, direct coupling only.
    DeviceGraph two;
    two.modes = {q, c};
    const SpaceLayout layout = space_layout(two);
    FrequencyMap f2;
    f2[q.label] = freqs.at(q.label);
    f2[c.label] = freqs.at(c.label);
    Eigen::MatrixXcd h = build_hamiltonian(two, f2); // no edges yet: diagonal
    {
        const double g = ghz_to_radns(g_qc * 1e-3);
        const Eigen::MatrixXcd qa = lowering_op(layout, 0);
        const Eigen::MatrixXcd qb = lowering_op(layout, 1);
        h += g * (qa + qa.adjoint()) * (qb + qb.adjoint());
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
    const int i10 = layout.basis_index({1, 0});
    const int i01 = layout.basis_index({0, 1});
    int best = 0;
    double best_ov = -1.0;
    for (int k = 0; k < layout.total_dim; ++k) {
        const double ov = std::norm(es.eigenvectors()(i10, k));
        if (ov > best_ov) { best_ov = ov; best = k; }
    }
    // Renormalize over the two-state manifold: counter-rotating terms leak a
    // little weight into |21>-like components which is irrelevant here.
    const double w10 = std::norm(es.eigenvectors()(i10, best));
    const double w01 = std::norm(es.eigenvectors()(i01, best));
    const double cos2 = w10 / (w10 + w01);
    const double sin2 = w01 / (w10 + w01);

    const NoiseSpec& nq = graph.noise.at(q.label);
    const NoiseSpec& nc = graph.noise.at(c.label);

    const double g1 = cos2 / nq.t1_us + sin2 / nc.t1_us; // 1/us
    auto pure_dephasing = [](const NoiseSpec& n) {
        return std::max(0.0, 1.0 / n.t2_echo_us - 0.5 / n.t1_us);
    };
    const double gphi_white = cos2 * pure_dephasing(nq) + sin2 * pure_dephasing(nc);

    // Coupler 1/f flux-noise rate ~ amplitude * |df/dPhi| at the bias point.
    const double f_c = freqs.at(c.label);
    double gflux = 0.0;
    if (nc.flux_noise_amp > 0.0) {
        const double phi = flux_for_frequency(c, std::min(f_c, c.f_sweetspot_ghz));
        const double dphi = 1e-6;
        const double slope = (mode_frequency_at_flux(c, phi + dphi) -
                              mode_frequency_at_flux(c, phi - dphi)) / (2.0 * dphi); // GHz/Phi0
        // rad/ns per Phi0 * amp -> 1/us (factor 1e3 ns/us)
        gflux = sin2 * nc.flux_noise_amp * std::abs(ghz_to_radns(slope)) * 1e3;
    }

    HybridizedCoherence out;
    out.sin2_theta = sin2;
    out.t1_eff_us = 1.0 / g1;
    out.t2_eff_us = 1.0 / (0.5 * g1 + gphi_white + gflux);
    out.decay_shape = (gflux > gphi_white) ? DecayShape::gaussian_dominated
                                           : DecayShape::exponential;
    return out;
}

DeviceGraph load_device_file(const std::string& path) {
    const KeyValueFile f = parse_keyval_file(path);
    DeviceGraph g;
    for (const auto& s : f.sections) {
        if (s.kind.empty() && s.entries.empty()) continue;
        if (s.kind == "mode") {
            if (s.args.size() != 1)
                throw ParseError(path, s.line, "[mode] expects one label");
            ModeSpec m;
            m.label = s.args[0];
            const std::string kind = s.get_string("kind");
            if (kind == "transmon") m.kind = ModeKind::transmon;
            else if (kind == "coupler") m.kind = ModeKind::coupler;
            else throw ParseError(path, s.line, "kind must be transmon or coupler");
            m.f_sweetspot_ghz = s.get_double("f_sweetspot_ghz");
            m.anharmonicity_mhz = s.get_double("anharmonicity_mhz");
            m.squid_asymmetry = s.get_double_or("squid_asymmetry", 0.0);
            m.flux_offset = s.get_double_or("flux_offset", 0.0);
            m.n_levels = s.get_int_or("n_levels", 3);
            g.modes.push_back(std::move(m));
        } else if (s.kind == "edge") {
            if (s.args.size() != 3)
                throw ParseError(path, s.line, "[edge] expects qubit_a qubit_b coupler");
            EdgeCoupling e;
            e.qubit_a = s.args[0];
            e.qubit_b = s.args[1];
            e.coupler = s.args[2];
            e.g_qq_mhz = s.get_double("g_qq_mhz");
            e.g_qc_a_mhz = s.get_double("g_qc_a_mhz");
            e.g_qc_b_mhz = s.get_double("g_qc_b_mhz");
            g.edges.push_back(std::move(e));
        } else if (s.kind == "noise") {
            if (s.args.size() != 1)
                throw ParseError(path, s.line, "[noise] expects one mode label");
            NoiseSpec n;
            n.t1_us = s.get_double("t1_us");
            n.t2_ramsey_us = s.get_double("t2_ramsey_us");
            n.t2_echo_us = s.get_double("t2_echo_us");
            n.flux_noise_amp = s.get_double_or("flux_noise_amp", 0.0);
            g.noise[s.args[0]] = n;
        } else if (!s.kind.empty()) {
            throw ParseError(path, s.line, "unknown section [" + s.kind + "] in device file");
        }
    }
    g.validate();
    return g;
}

} // namespace tcsim
