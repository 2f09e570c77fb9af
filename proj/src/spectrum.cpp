#include "tcsim/spectrum.hpp"
#include "tcsim/errors.hpp"
#include "tcsim/parallel.hpp"
#include "tcsim/units.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>

namespace tcsim {

DressedLabeling dressed_labeling(const Eigen::MatrixXcd& hamiltonian, const SpaceLayout& layout,
                                 const std::vector<std::vector<int>>& targets) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(hamiltonian);
    const auto& vecs = es.eigenvectors();
    const auto& vals = es.eigenvalues();

    std::vector<std::vector<int>> labels = targets;
    if (labels.empty())
        for (int i = 0; i < layout.total_dim; ++i) labels.push_back(layout.occupations(i));

    // Greedy bijection by descending overlap.
    struct Cand { double overlap; int label; int eig; };
    std::vector<Cand> cands;
    cands.reserve(labels.size() * static_cast<size_t>(layout.total_dim));
    for (size_t t = 0; t < labels.size(); ++t) {
        const int row = layout.basis_index(labels[t]);
        for (int k = 0; k < layout.total_dim; ++k)
            cands.push_back({std::norm(vecs(row, k)), static_cast<int>(t), k});
    }
    std::sort(cands.begin(), cands.end(),
              [](const Cand& a, const Cand& b) { return a.overlap > b.overlap; });

    std::vector<bool> label_done(labels.size(), false);
    std::vector<bool> eig_done(static_cast<size_t>(layout.total_dim), false);
    DressedLabeling out;
    size_t assigned = 0;
    for (const auto& c : cands) {
        if (label_done[static_cast<size_t>(c.label)] || eig_done[static_cast<size_t>(c.eig)])
            continue;
        label_done[static_cast<size_t>(c.label)] = true;
        eig_done[static_cast<size_t>(c.eig)] = true;
        DressedState ds;
        ds.eigenindex = c.eig;
        ds.energy_ghz = radns_to_ghz(vals(c.eig));
        ds.overlap = c.overlap;
        if (ds.overlap <= 0.5) out.ambiguous = true;
        out.states[labels[static_cast<size_t>(c.label)]] = ds;
        if (++assigned == labels.size()) break;
    }
    return out;
}

namespace {

std::vector<int> computational_occ(const DeviceGraph& graph, const EdgeCoupling& edge,
                                   int n_a, int n_b) {
    std::vector<int> occ(graph.modes.size(), 0);
    occ[static_cast<size_t>(graph.mode_index(edge.qubit_a))] = n_a;
    occ[static_cast<size_t>(graph.mode_index(edge.qubit_b))] = n_b;
    return occ;
}

} // namespace

double xi_zz_khz(const DeviceGraph& graph, const EdgeCoupling& edge, const FrequencyMap& freqs) {
    const SpaceLayout layout = space_layout(graph);
    const Eigen::MatrixXcd h = build_hamiltonian(graph, freqs);
    const std::vector<std::vector<int>> targets = {
        computational_occ(graph, edge, 0, 0), computational_occ(graph, edge, 0, 1),
        computational_occ(graph, edge, 1, 0), computational_occ(graph, edge, 1, 1)};
    const DressedLabeling lab = dressed_labeling(h, layout, targets);
    if (lab.ambiguous)
        throw AmbiguousLabeling("computational-state labeling ambiguous for edge " +
                                edge.qubit_a + "-" + edge.qubit_b);
    const double e00 = lab.at(targets[0]).energy_ghz;
    const double e01 = lab.at(targets[1]).energy_ghz;
    const double e10 = lab.at(targets[2]).energy_ghz;
    const double e11 = lab.at(targets[3]).energy_ghz;
    return ghz_to_khz(e11 - e10 - e01 + e00);
}

namespace {

struct GapSample {
    double gap_mhz = 0.0;
    double j_signed_mhz = 0.0;
    double span_overlap = 0.0; // combined weight of the top-2 eigenstates on span{a,b}
};

// Gap between the two eigenstates most supported on span{|a>,|b>}, plus a
// signed effective coupling from the Loewdin-orthonormalized 2x2 projection.
GapSample gap_sample(const DeviceGraph& graph, const FrequencyMap& freqs,
                     const SpaceLayout& layout, const std::vector<int>& occ_a,
                     const std::vector<int>& occ_b) {
    const Eigen::MatrixXcd h = build_hamiltonian(graph, freqs);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
    const auto& vecs = es.eigenvectors();
    const auto& vals = es.eigenvalues();
    const int ia = layout.basis_index(occ_a);
    const int ib = layout.basis_index(occ_b);

    int k1 = -1, k2 = -1;
    double w1 = -1.0, w2 = -1.0;
    for (int k = 0; k < layout.total_dim; ++k) {
        const double w = std::norm(vecs(ia, k)) + std::norm(vecs(ib, k));
        if (w > w1) { w2 = w1; k2 = k1; w1 = w; k1 = k; }
        else if (w > w2) { w2 = w; k2 = k; }
    }

    GapSample out;
    out.gap_mhz = ghz_to_mhz(radns_to_ghz(std::abs(vals(k1) - vals(k2))));
    out.span_overlap = 0.5 * (w1 + w2);

    // 2x2 effective Hamiltonian in the bare {a,b} basis.
    Eigen::Matrix2cd b;
    b << vecs(ia, k1), vecs(ia, k2), vecs(ib, k1), vecs(ib, k2);
    Eigen::Vector2cd e(vals(k1), vals(k2));
    Eigen::Matrix2cd heff = b * e.asDiagonal() * b.adjoint();
    Eigen::Matrix2cd s = b * b.adjoint();
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> ses(s);
    Eigen::Matrix2cd s_inv_sqrt = ses.operatorInverseSqrt();
    Eigen::Matrix2cd horth = s_inv_sqrt * heff * s_inv_sqrt;
    out.j_signed_mhz = ghz_to_mhz(radns_to_ghz(horth(0, 1).real()));
    return out;
}

} // namespace

GapScan minimum_gap(const DeviceGraph& graph, const FrequencyMap& freqs,
                    const std::string& sweep_mode, const std::vector<int>& occ_a,
                    const std::vector<int>& occ_b, double f_lo_ghz, double f_hi_ghz,
                    int n_coarse) {
    const SpaceLayout layout = space_layout(graph);
    auto gap_at = [&](double f) {
        FrequencyMap fm = freqs;
        fm[sweep_mode] = f;
        return gap_sample(graph, fm, layout, occ_a, occ_b).gap_mhz;
    };

    int imin = 0;
    double gmin = std::numeric_limits<double>::infinity();
    std::vector<double> fs(static_cast<size_t>(n_coarse));
    for (int i = 0; i < n_coarse; ++i) {
        fs[static_cast<size_t>(i)] =
            f_lo_ghz + (f_hi_ghz - f_lo_ghz) * i / static_cast<double>(n_coarse - 1);
        const double g = gap_at(fs[static_cast<size_t>(i)]);
        if (g < gmin) { gmin = g; imin = i; }
    }
    if (imin == 0 || imin == n_coarse - 1)
        throw NoCrossingInWindow("gap minimum at sweep endpoint while sweeping " + sweep_mode);

    // Golden-section refinement between the neighbors of the coarse minimum.
    double a = fs[static_cast<size_t>(imin - 1)], b = fs[static_cast<size_t>(imin + 1)];
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    double g1 = gap_at(x1), g2 = gap_at(x2);
    while (b - a > 1e-6) {
        if (g1 < g2) { b = x2; x2 = x1; g2 = g1; x1 = b - gr * (b - a); g1 = gap_at(x1); }
        else { a = x1; x1 = x2; g1 = g2; x2 = a + gr * (b - a); g2 = gap_at(x2); }
    }
    GapScan out;
    out.f_at_min_ghz = 0.5 * (a + b);
    out.min_gap_mhz = gap_at(out.f_at_min_ghz);
    return out;
}

double exchange_coupling_mhz(const DeviceGraph& graph, const EdgeCoupling& edge,
                             const FrequencyMap& freqs, Manifold manifold) {
    const SpaceLayout layout = space_layout(graph);
    std::vector<int> occ_a, occ_b;
    double f_res; // bare resonance estimate for the sweep window
    const double f_b = freqs.at(edge.qubit_b);
    if (manifold == Manifold::one_excitation) {
        occ_a = computational_occ(graph, edge, 1, 0);
        occ_b = computational_occ(graph, edge, 0, 1);
        f_res = f_b;
    } else {
        const ModeSpec& mb = graph.mode(edge.qubit_b);
        if (mb.n_levels < 3)
            throw ValidationError("two-excitation manifold needs n_levels >= 3 on " + mb.label);
        occ_a = computational_occ(graph, edge, 1, 1);
        occ_b = computational_occ(graph, edge, 0, 2);
        f_res = f_b + mb.anharmonicity_mhz * 1e-3;
    }

    const double window = 0.15; // GHz, generous vs dressed shifts and J itself
    const GapScan scan = minimum_gap(graph, freqs, edge.qubit_a, occ_a, occ_b,
                                     f_res - window, f_res + window, 41);

    // Sign from the effective 2x2 coupling at the located minimum.
    FrequencyMap fm = freqs;
    fm[edge.qubit_a] = scan.f_at_min_ghz;
    const GapSample s = gap_sample(graph, fm, layout, occ_a, occ_b);
    if (s.span_overlap < 0.5)
        throw AmbiguousLabeling("avoided-crossing states poorly resolved for edge " +
                                edge.qubit_a + "-" + edge.qubit_b);
    const double mag = 0.5 * scan.min_gap_mhz;
    return std::copysign(mag, s.j_signed_mhz == 0.0 ? 1.0 : s.j_signed_mhz);
}

namespace {

// Bisection for a zero crossing of fn between (x0, y0) and (x1, y1), to
// 0.1 MHz in coupler frequency. Returns the refined frequency.
template <typename Fn>
double bisect_null(Fn&& fn, double x0, double y0, double x1, double y1) {
    for (int i = 0; i < 100 && x1 - x0 > 1e-4; ++i) {
        const double xm = 0.5 * (x0 + x1);
        double ym;
        try {
            ym = fn(xm);
        } catch (const NumericalError&) {
            // Masked midpoint: shrink toward the smaller-magnitude side.
            if (std::abs(y0) < std::abs(y1)) x1 = xm;
            else x0 = xm;
            continue;
        }
        if ((ym >= 0.0) == (y0 >= 0.0)) { x0 = xm; y0 = ym; }
        else { x1 = xm; y1 = ym; }
    }
    return 0.5 * (x0 + x1);
}

template <typename Fn>
NullingPoint locate_null(const std::vector<double>& xs, const std::vector<double>& ys,
                         const std::vector<bool>& masked, Fn&& fn) {
    NullingPoint np;
    for (size_t i = 0; i + 1 < xs.size(); ++i) {
        if (masked[i] || masked[i + 1]) continue;
        if (ys[i] == 0.0 && ys[i + 1] == 0.0) continue; // degenerate flat curve
        if ((ys[i] >= 0.0) != (ys[i + 1] >= 0.0)) {
            np.f_ghz = bisect_null(fn, xs[i], ys[i], xs[i + 1], ys[i + 1]);
            np.valid = true;
            return np;
        }
    }
    return np;
}

} // namespace

InteractionProfile interaction_profile(const DeviceGraph& graph, const EdgeCoupling& edge,
                                       double f_lo_ghz, double f_hi_ghz, int n_points,
                                       int jobs) {
    if (n_points < 2)
        throw ValidationError("interaction_profile needs at least 2 points");
    const ModeSpec& cs = graph.mode(edge.coupler);
    const double arc_min = mode_frequency_at_flux(cs, cs.flux_offset + 0.5);
    if (f_hi_ghz > cs.f_sweetspot_ghz + 1e-9 || f_lo_ghz < arc_min)
        throw ValidationError("profile window [" + std::to_string(f_lo_ghz) + ", " +
                              std::to_string(f_hi_ghz) + "] GHz outside coupler arc of " +
                              cs.label);

    const DeviceGraph sub = graph.edge_subgraph(edge);
    const EdgeCoupling& sedge = sub.edges[0];
    const FrequencyMap base = sweetspot_frequencies(sub);

    InteractionProfile prof;
    prof.coupler_freqs_ghz.resize(static_cast<size_t>(n_points));
    prof.xi_zz_khz.resize(static_cast<size_t>(n_points));
    prof.j1_mhz.resize(static_cast<size_t>(n_points));
    prof.j2_mhz.resize(static_cast<size_t>(n_points));
    prof.masked.assign(static_cast<size_t>(n_points), false);
    for (int i = 0; i < n_points; ++i)
        prof.coupler_freqs_ghz[static_cast<size_t>(i)] =
            f_lo_ghz + (f_hi_ghz - f_lo_ghz) * i / static_cast<double>(n_points - 1);

    std::vector<char> mask(static_cast<size_t>(n_points), 0);
    par_for(static_cast<size_t>(n_points), jobs, [&](size_t i) {
        FrequencyMap fm = base;
        fm[sedge.coupler] = prof.coupler_freqs_ghz[i];
        try {
            prof.xi_zz_khz[i] = xi_zz_khz(sub, sedge, fm);
            prof.j1_mhz[i] = exchange_coupling_mhz(sub, sedge, fm, Manifold::one_excitation);
            prof.j2_mhz[i] = exchange_coupling_mhz(sub, sedge, fm, Manifold::two_excitation);
        } catch (const NumericalError&) {
            mask[i] = 1;
            prof.xi_zz_khz[i] = prof.j1_mhz[i] = prof.j2_mhz[i] =
                std::numeric_limits<double>::quiet_NaN();
        }
    });
    for (int i = 0; i < n_points; ++i) prof.masked[static_cast<size_t>(i)] = mask[static_cast<size_t>(i)] != 0;

    auto eval_zz = [&](double fc) {
        FrequencyMap fm = base;
        fm[sedge.coupler] = fc;
        return xi_zz_khz(sub, sedge, fm);
    };
    auto eval_j = [&](Manifold m) {
        return [&, m](double fc) {
            FrequencyMap fm = base;
            fm[sedge.coupler] = fc;
            return exchange_coupling_mhz(sub, sedge, fm, m);
        };
    };
    prof.zz_null = locate_null(prof.coupler_freqs_ghz, prof.xi_zz_khz, prof.masked, eval_zz);
    prof.j1_null = locate_null(prof.coupler_freqs_ghz, prof.j1_mhz, prof.masked,
                               eval_j(Manifold::one_excitation));
    prof.j2_null = locate_null(prof.coupler_freqs_ghz, prof.j2_mhz, prof.masked,
                               eval_j(Manifold::two_excitation));
    return prof;
}

bool straddling_check(const DeviceGraph& graph, const EdgeCoupling& edge) {
    const ModeSpec& a = graph.mode(edge.qubit_a);
    const ModeSpec& b = graph.mode(edge.qubit_b);
    auto inside = [](const ModeSpec& outer, const ModeSpec& inner) {
        const double f01 = outer.f_sweetspot_ghz;
        const double f12 = f01 + outer.anharmonicity_mhz * 1e-3;
        return inner.f_sweetspot_ghz >= f12 && inner.f_sweetspot_ghz <= f01;
    };
    return inside(a, b) || inside(b, a);
}

} // namespace tcsim
