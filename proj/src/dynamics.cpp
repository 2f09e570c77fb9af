#include "tcsim/dynamics.hpp"
#include "tcsim/errors.hpp"
#include "tcsim/parallel.hpp"
#include "tcsim/units.hpp"

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/KroneckerProduct>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <map>
#include <random>

namespace tcsim {

namespace {

using Complex = std::complex<double>;
const Complex I1(0.0, 1.0);

void check_waveforms(const DeviceGraph& graph, const WaveformMap& waveforms) {
    if (waveforms.empty())
        throw ValidationError("evolution needs at least one waveform");
    const auto& first = waveforms.begin()->second;
    for (const auto& [label, w] : waveforms) {
        (void)graph.mode_index(label); // existence check
        w.validate();
        if (w.samples.size() != first.samples.size() || std::abs(w.dt_ns - first.dt_ns) > 1e-12)
            throw ValidationError("waveforms must share dt and duration (mode " + label + ")");
    }
}

// Midpoint-rule bare frequencies for sample interval k.
FrequencyMap interval_freqs(const FrequencyMap& idle, const WaveformMap& waveforms, size_t k) {
    FrequencyMap fm = idle;
    for (const auto& [label, w] : waveforms)
        fm[label] = 0.5 * (w.samples[k] + w.samples[k + 1]);
    return fm;
}

Eigen::MatrixXcd matrix_exp_unitary(const Eigen::MatrixXcd& h, double dt) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
    const Eigen::VectorXd& vals = es.eigenvalues();
    Eigen::VectorXcd phases(vals.size());
    for (Eigen::Index i = 0; i < vals.size(); ++i) phases(i) = std::exp(-I1 * vals(i) * dt);
    return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

struct Dissipator {
    // Pre-assembled per-channel operators in the full space.
    std::vector<Eigen::MatrixXcd> lower;   // sqrt(gamma1) * a_m
    std::vector<Eigen::MatrixXcd> dephase; // sqrt(2 gamma_phi) * n_m

    Eigen::MatrixXcd apply(const Eigen::MatrixXcd& rho) const {
        Eigen::MatrixXcd d = Eigen::MatrixXcd::Zero(rho.rows(), rho.cols());
        auto lindblad = [&](const Eigen::MatrixXcd& l) {
            const Eigen::MatrixXcd ll = l.adjoint() * l;
            d += l * rho * l.adjoint() - 0.5 * (ll * rho + rho * ll);
        };
        for (const auto& l : lower) lindblad(l);
        for (const auto& l : dephase) lindblad(l);
        return d;
    }
};

Dissipator build_dissipator(const DeviceGraph& graph, const SpaceLayout& layout,
                            const std::map<std::string, NoiseSpec>& noise) {
    Dissipator dis;
    for (size_t m = 0; m < graph.modes.size(); ++m) {
        const auto it = noise.find(graph.modes[m].label);
        if (it == noise.end()) continue;
        const NoiseSpec& ns = it->second;
        const Eigen::MatrixXcd a = lowering_op(layout, static_cast<int>(m));
        if (ns.t1_us > 0.0) {
            const double gamma1 = 1.0 / us_to_ns(ns.t1_us);
            dis.lower.push_back(std::sqrt(gamma1) * a);
        }
        // Free (un-echoed) evolution dephases at the Ramsey rate; fall back
        // to the echo time when no Ramsey time is given.
        const double t2 = ns.t2_ramsey_us > 0.0 ? ns.t2_ramsey_us : ns.t2_echo_us;
        if (t2 > 0.0) {
            double gphi = 1.0 / us_to_ns(t2);
            if (ns.t1_us > 0.0) gphi -= 0.5 / us_to_ns(ns.t1_us);
            if (gphi > 0.0) dis.dephase.push_back(std::sqrt(2.0 * gphi) * (a.adjoint() * a));
        }
    }
    return dis;
}

Eigen::MatrixXcd run_density(const DeviceGraph& graph, const FrequencyMap& idle,
                             const WaveformMap& waveforms, const Eigen::MatrixXcd& rho0,
                             const Dissipator& dis, int substeps, int dimension_cap) {
    const auto& first = waveforms.begin()->second;
    const size_t n_intervals = first.samples.size() - 1;
    const double dt = first.dt_ns / substeps;
    Eigen::MatrixXcd rho = rho0;
    for (size_t k = 0; k < n_intervals; ++k) {
        const Eigen::MatrixXcd h =
            build_hamiltonian(graph, interval_freqs(idle, waveforms, k), dimension_cap);
        const Eigen::MatrixXcd u = matrix_exp_unitary(h, dt);
        for (int s = 0; s < substeps; ++s) {
            rho = u * rho * u.adjoint();
            rho += dt * dis.apply(rho);
        }
    }
    return rho;
}

} // namespace

Eigen::MatrixXcd evolve_unitary(const DeviceGraph& graph, const FrequencyMap& idle,
                                const WaveformMap& waveforms, const EvolutionOptions& opts) {
    check_waveforms(graph, waveforms);
    const auto& first = waveforms.begin()->second;
    const size_t n_intervals = first.samples.size() - 1;
    const SpaceLayout layout = space_layout(graph);
    Eigen::MatrixXcd u = Eigen::MatrixXcd::Identity(layout.total_dim, layout.total_dim);
    for (size_t k = 0; k < n_intervals; ++k) {
        const Eigen::MatrixXcd h =
            build_hamiltonian(graph, interval_freqs(idle, waveforms, k), opts.dimension_cap);
        u = matrix_exp_unitary(h, first.dt_ns) * u;
    }
    return u;
}

Eigen::MatrixXcd evolve_density(const DeviceGraph& graph, const FrequencyMap& idle,
                                const WaveformMap& waveforms, const Eigen::MatrixXcd& rho0,
                                const std::map<std::string, NoiseSpec>& noise,
                                const EvolutionOptions& opts) {
    check_waveforms(graph, waveforms);
    const SpaceLayout layout = space_layout(graph);
    if (rho0.rows() != layout.total_dim || rho0.cols() != layout.total_dim)
        throw ValidationError("initial density matrix does not match the space dimension");
    const Dissipator dis = build_dissipator(graph, layout, noise);

    int substeps = std::max(1, opts.dissipator_substeps);
    Eigen::MatrixXcd rho = run_density(graph, idle, waveforms, rho0, dis, substeps,
                                       opts.dimension_cap);
    if (!opts.adaptive) return rho;
    while (true) {
        if (2 * substeps > opts.max_substeps)
            throw NonConvergedStep("open-system evolution did not converge within " +
                                   std::to_string(opts.max_substeps) + " substeps per sample");
        const Eigen::MatrixXcd finer = run_density(graph, idle, waveforms, rho0, dis,
                                                   2 * substeps, opts.dimension_cap);
        const double delta = (finer - rho).cwiseAbs().maxCoeff();
        rho = finer;
        substeps *= 2;
        if (delta < opts.convergence_tol) return rho;
    }
}

namespace {

struct ComputationalFrame {
    // Phase-fixed dressed eigenvectors of the four computational states, in
    // (qubit_a, qubit_b) order {00, 01, 10, 11}, full-space columns.
    Eigen::MatrixXcd vectors; // dim x 4
};

ComputationalFrame computational_frame(const DeviceGraph& graph, const EdgeCoupling& edge,
                                       const FrequencyMap& idle, int dimension_cap) {
    const SpaceLayout layout = space_layout(graph);
    const Eigen::MatrixXcd h = build_hamiltonian(graph, idle, dimension_cap);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);

    auto occ_of = [&](int na, int nb) {
        std::vector<int> occ(graph.modes.size(), 0);
        occ[static_cast<size_t>(graph.mode_index(edge.qubit_a))] = na;
        occ[static_cast<size_t>(graph.mode_index(edge.qubit_b))] = nb;
        return occ;
    };
    const std::vector<std::vector<int>> targets = {occ_of(0, 0), occ_of(0, 1), occ_of(1, 0),
                                                   occ_of(1, 1)};
    const DressedLabeling lab = dressed_labeling(h, layout, targets);
    if (lab.ambiguous)
        throw AmbiguousLabeling("computational frame ambiguous at the idle bias");

    ComputationalFrame frame;
    frame.vectors.resize(layout.total_dim, 4);
    for (int t = 0; t < 4; ++t) {
        const int eig = lab.at(targets[static_cast<size_t>(t)]).eigenindex;
        Eigen::VectorXcd v = es.eigenvectors().col(eig);
        // Fix the gauge: bare component real and positive.
        const Complex pivot = v(layout.basis_index(targets[static_cast<size_t>(t)]));
        if (std::abs(pivot) > 0.0) v *= std::conj(pivot) / std::abs(pivot);
        frame.vectors.col(t) = v;
    }
    return frame;
}

double wrap_deg(double x) {
    x = std::fmod(x + 180.0, 360.0);
    if (x <= 0.0) x += 360.0;
    return x - 180.0;
}

CZMetrics metrics_from_block(const Eigen::Matrix4cd& m) {
    CZMetrics out;
    const Complex d00 = m(0, 0), d01 = m(1, 1), d10 = m(2, 2), d11 = m(3, 3);
    out.conditional_phase_deg =
        wrap_deg((std::arg(d11) - std::arg(d10) - std::arg(d01) + std::arg(d00)) * 180.0 / pi);
    out.phase_a_deg = wrap_deg(std::arg(d10 * std::conj(d00)) * 180.0 / pi);
    out.phase_b_deg = wrap_deg(std::arg(d01 * std::conj(d00)) * 180.0 / pi);

    const double amp0 = std::abs(d10 * std::conj(d00));
    const double amp1 = std::abs(d11 * std::conj(d01));
    out.missing_fraction = std::clamp(1.0 - amp1 / std::max(amp0, 1e-12), 0.0, 1.0);
    out.leakage_l1 = std::clamp(1.0 - m.squaredNorm() / 4.0, 0.0, 1.0);

    // Average gate fidelity of the (possibly leaky) coherent block after
    // virtual single-qubit phase corrections.
    Eigen::Vector4cd corr;
    const double pa = out.phase_a_deg * pi / 180.0, pb = out.phase_b_deg * pi / 180.0;
    corr << 1.0, std::exp(-I1 * pb), std::exp(-I1 * pa), std::exp(-I1 * (pa + pb));
    const Eigen::Matrix4cd mc = corr.asDiagonal() * m;
    Eigen::Vector4d cz;
    cz << 1.0, 1.0, 1.0, -1.0;
    const Complex tr_u = (cz.cast<Complex>().asDiagonal() * mc).trace();
    const double f_avg = (mc.squaredNorm() + std::norm(tr_u)) / 20.0;
    out.gate_error = std::clamp(1.0 - f_avg, 0.0, 1.0);
    return out;
}

} // namespace

CZPulse make_cz_pulse(const DeviceGraph& graph, const EdgeCoupling& edge, double theta_f_rad,
                      double t_p_ns, double sample_dt_ns) {
    const ModeSpec& qa = graph.mode(edge.qubit_a);
    const ModeSpec& qb = graph.mode(edge.qubit_b);
    const ModeSpec& cp = graph.mode(edge.coupler);
    const bool a_high = qa.f_sweetspot_ghz >= qb.f_sweetspot_ghz;

    CZPulse pulse;
    pulse.spec.g_qc_mhz = a_high ? edge.g_qc_a_mhz : edge.g_qc_b_mhz;
    pulse.spec.f_q_high_ghz = std::max(qa.f_sweetspot_ghz, qb.f_sweetspot_ghz);
    pulse.spec.theta_i_rad =
        coupler_frequency_to_theta(cp.f_sweetspot_ghz, pulse.spec.g_qc_mhz, pulse.spec.f_q_high_ghz);
    pulse.spec.theta_f_rad = theta_f_rad;
    pulse.spec.t_p_ns = t_p_ns;
    pulse.spec.sample_dt_ns = sample_dt_ns;
    pulse.waveforms[edge.coupler] = fast_adiabatic_coupler_waveform(pulse.spec);
    return pulse;
}

CZMetrics conditional_oscillation(const DeviceGraph& graph, const EdgeCoupling& edge,
                                  const CZPulse& pulse, const EvolutionOptions& opts) {
    const DeviceGraph sub = graph.edge_subgraph(edge);
    const EdgeCoupling& sedge = sub.edges[0];
    const FrequencyMap idle = sweetspot_frequencies(sub);
    const Eigen::MatrixXcd u = evolve_unitary(sub, idle, pulse.waveforms, opts);
    const ComputationalFrame frame = computational_frame(sub, sedge, idle, opts.dimension_cap);
    const Eigen::Matrix4cd m = frame.vectors.adjoint() * u * frame.vectors;
    return metrics_from_block(m);
}

CZMetrics gate_error_and_leakage(const BlockChannel& channel, double phase_a_deg,
                                 double phase_b_deg) {
    if (channel.outputs.size() != 16 || channel.leak_per_basis.size() != 4)
        throw ValidationError("block channel needs 16 outputs and 4 leakage entries");
    const double pa = phase_a_deg * pi / 180.0, pb = phase_b_deg * pi / 180.0;
    Eigen::Vector4cd corr;
    corr << 1.0, std::exp(-I1 * pb), std::exp(-I1 * pa), std::exp(-I1 * (pa + pb));
    const Eigen::Matrix4cd v = corr.asDiagonal();
    Eigen::Vector4d cz;
    cz << 1.0, 1.0, 1.0, -1.0;

    Complex fe = 0.0;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            const Eigen::Matrix4cd out = v * channel.outputs[static_cast<size_t>(4 * i + j)] *
                                         v.adjoint();
            fe += cz(i) * cz(j) * out(i, j);
        }
    const double f_e = std::clamp(fe.real() / 16.0, 0.0, 1.0);
    const double f_avg = (4.0 * f_e + 1.0) / 5.0;

    CZMetrics out;
    out.phase_a_deg = phase_a_deg;
    out.phase_b_deg = phase_b_deg;
    out.gate_error = std::clamp(1.0 - f_avg, 0.0, 1.0);
    double l1 = 0.0;
    for (double l : channel.leak_per_basis) l1 += l;
    out.leakage_l1 = std::clamp(l1 / 4.0, 0.0, 1.0);
    return out;
}

CZMetrics cz_gate_metrics(const DeviceGraph& graph, const EdgeCoupling& edge, const CZPulse& pulse,
                          const std::map<std::string, NoiseSpec>* noise,
                          const EvolutionOptions& opts) {
    const CZMetrics coherent = conditional_oscillation(graph, edge, pulse, opts);
    if (!noise) return coherent;

    const DeviceGraph sub = graph.edge_subgraph(edge);
    const EdgeCoupling& sedge = sub.edges[0];
    const FrequencyMap idle = sweetspot_frequencies(sub);
    const ComputationalFrame frame = computational_frame(sub, sedge, idle, opts.dimension_cap);

    BlockChannel channel;
    channel.outputs.resize(16);
    channel.leak_per_basis.resize(4);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            const Eigen::MatrixXcd rho0 = frame.vectors.col(i) * frame.vectors.col(j).adjoint();
            const Eigen::MatrixXcd rho = evolve_density(sub, idle, pulse.waveforms, rho0, *noise,
                                                        opts);
            channel.outputs[static_cast<size_t>(4 * i + j)] =
                frame.vectors.adjoint() * rho * frame.vectors;
            if (i == j)
                channel.leak_per_basis[static_cast<size_t>(i)] = std::clamp(
                    1.0 - channel.outputs[static_cast<size_t>(4 * i + j)].trace().real(), 0.0, 1.0);
        }

    CZMetrics out = gate_error_and_leakage(channel, coherent.phase_a_deg, coherent.phase_b_deg);
    out.conditional_phase_deg = coherent.conditional_phase_deg;
    out.missing_fraction = coherent.missing_fraction;
    return out;
}

CZCalibration calibrate_cz(const DeviceGraph& graph, const EdgeCoupling& edge, double t_p_ns,
                           double theta_lo_rad, double theta_hi_rad, int n_scan,
                           double sample_dt_ns) {
    if (!(theta_lo_rad < theta_hi_rad) || n_scan < 3)
        throw ValidationError("calibrate_cz needs theta_lo < theta_hi and n_scan >= 3");
    int evals = 0;
    auto phase_at = [&](double theta_f) {
        ++evals;
        const CZPulse p = make_cz_pulse(graph, edge, theta_f, t_p_ns, sample_dt_ns);
        return conditional_oscillation(graph, edge, p).conditional_phase_deg;
    };

    // Unwrapped scan: the conditional phase grows monotonically in magnitude
    // with theta_f; find the bracket where it passes +-180 (the same point
    // modulo 360).
    std::vector<double> thetas(static_cast<size_t>(n_scan)), unwrapped(static_cast<size_t>(n_scan));
    double prev_raw = 0.0;
    for (int i = 0; i < n_scan; ++i) {
        thetas[static_cast<size_t>(i)] =
            theta_lo_rad + (theta_hi_rad - theta_lo_rad) * i / static_cast<double>(n_scan - 1);
        const double raw = phase_at(thetas[static_cast<size_t>(i)]);
        unwrapped[static_cast<size_t>(i)] =
            i == 0 ? raw : unwrapped[static_cast<size_t>(i - 1)] + wrap_deg(raw - prev_raw);
        prev_raw = raw;
    }

    int bracket = -1;
    double target = 0.0;
    for (int i = 0; i + 1 < n_scan; ++i) {
        const double u0 = unwrapped[static_cast<size_t>(i)], u1 = unwrapped[static_cast<size_t>(i + 1)];
        for (double t : {180.0, -180.0}) {
            if ((u0 - t) * (u1 - t) <= 0.0 && u0 != u1) {
                bracket = i;
                target = t;
                break;
            }
        }
        if (bracket >= 0) break;
    }
    if (bracket < 0)
        throw NoBracket("conditional phase never crosses 180 degrees over the theta_f scan");

    // Bisection on the wrapped distance to the target (180 == -180 mod 360).
    double lo = thetas[static_cast<size_t>(bracket)], hi = thetas[static_cast<size_t>(bracket + 1)];
    double glo = wrap_deg(unwrapped[static_cast<size_t>(bracket)] - target);
    double theta_root = 0.5 * (lo + hi);
    for (int it = 0; it < 60; ++it) {
        theta_root = 0.5 * (lo + hi);
        const double g = wrap_deg(phase_at(theta_root) - target);
        if (std::abs(g) < 0.02) break;
        if ((g >= 0.0) == (glo >= 0.0)) { lo = theta_root; glo = g; }
        else hi = theta_root;
    }

    CZCalibration cal;
    cal.pulse = make_cz_pulse(graph, edge, theta_root, t_p_ns, sample_dt_ns);
    cal.metrics = conditional_oscillation(graph, edge, cal.pulse);
    cal.evaluations = evals;
    return cal;
}

// ---------------------------------------------------------------------------
// Randomized benchmarking
// ---------------------------------------------------------------------------

namespace {

std::vector<Eigen::Matrix2cd> clifford_group() {
    const double s2 = 1.0 / std::sqrt(2.0);
    Eigen::Matrix2cd h, s;
    h << s2, s2, s2, -s2;
    s << 1.0, 0.0, 0.0, I1;

    auto canonical_key = [](const Eigen::Matrix2cd& m) {
        // Remove the global phase: rotate so the largest element is real
        // positive, then quantize.
        int br = 0, bc = 0;
        double best = -1.0;
        for (int r = 0; r < 2; ++r)
            for (int c = 0; c < 2; ++c)
                if (std::abs(m(r, c)) > best) { best = std::abs(m(r, c)); br = r; bc = c; }
        const Complex ph = m(br, bc) / std::abs(m(br, bc));
        std::array<long long, 8> key{};
        int k = 0;
        for (int r = 0; r < 2; ++r)
            for (int c = 0; c < 2; ++c) {
                const Complex v = m(r, c) * std::conj(ph);
                key[static_cast<size_t>(k++)] = std::llround(v.real() * 1e6);
                key[static_cast<size_t>(k++)] = std::llround(v.imag() * 1e6);
            }
        return key;
    };

    std::vector<Eigen::Matrix2cd> group = {Eigen::Matrix2cd::Identity()};
    std::vector<std::array<long long, 8>> keys = {canonical_key(group[0])};
    for (size_t i = 0; i < group.size(); ++i) {
        for (const auto& g : {h, s}) {
            const Eigen::Matrix2cd cand = g * group[i];
            const auto key = canonical_key(cand);
            if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
                keys.push_back(key);
                group.push_back(cand);
            }
        }
    }
    return group; // 24 elements
}

// Elementwise single-mode dissipator on a 3-level density matrix.
void apply_mode_noise(Eigen::MatrixXcd& rho, const std::vector<Eigen::MatrixXcd>& ops,
                      double t_ns, int substeps) {
    if (ops.empty()) return;
    const double dt = t_ns / substeps;
    for (int s = 0; s < substeps; ++s) {
        Eigen::MatrixXcd d = Eigen::MatrixXcd::Zero(rho.rows(), rho.cols());
        for (const auto& l : ops) {
            const Eigen::MatrixXcd ll = l.adjoint() * l;
            d += l * rho * l.adjoint() - 0.5 * (ll * rho + rho * ll);
        }
        rho += dt * d;
    }
}

struct RBFit {
    double p = 1.0, a = 0.0, b = 0.0, sse = 0.0;
};

RBFit fit_decay(const std::vector<int>& lengths, const std::vector<double>& y) {
    auto sse_at = [&](double p, double& a_out, double& b_out) {
        // Least squares for A, B in A p^m + B.
        double sxx = 0.0, sx = 0.0, sxy = 0.0, sy = 0.0;
        const double n = static_cast<double>(lengths.size());
        for (size_t i = 0; i < lengths.size(); ++i) {
            const double x = std::pow(p, lengths[i]);
            sxx += x * x;
            sx += x;
            sxy += x * y[i];
            sy += y[i];
        }
        const double det = sxx * n - sx * sx;
        double a, b;
        if (std::abs(det) < 1e-14) { a = 0.0; b = sy / n; }
        else { a = (sxy * n - sx * sy) / det; b = (sxx * sy - sx * sxy) / det; }
        double sse = 0.0;
        for (size_t i = 0; i < lengths.size(); ++i) {
            const double r = a * std::pow(p, lengths[i]) + b - y[i];
            sse += r * r;
        }
        a_out = a;
        b_out = b;
        return sse;
    };

    RBFit best;
    double span = 0.0;
    for (double v : y) span = std::max(span, std::abs(v - y[0]));
    if (span < 1e-9) {
        best.p = 1.0;
        best.a = 0.0;
        best.b = y[0];
        return best;
    }

    best.sse = 1e300;
    // Coarse scan over log(1 - p), then golden refinement.
    for (int i = 0; i <= 400; ++i) {
        const double one_minus_p = std::pow(10.0, -10.0 + 10.0 * i / 400.0);
        double a, b;
        const double sse = sse_at(1.0 - one_minus_p, a, b);
        if (sse < best.sse) { best = {1.0 - one_minus_p, a, b, sse}; }
    }
    double lo = std::log10(std::max(1e-12, (1.0 - best.p) / 3.0));
    double hi = std::log10(std::min(0.999, (1.0 - best.p) * 3.0));
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
    double a, b;
    double g1 = sse_at(1.0 - std::pow(10.0, x1), a, b);
    double g2 = sse_at(1.0 - std::pow(10.0, x2), a, b);
    for (int it = 0; it < 60; ++it) {
        if (g1 < g2) { hi = x2; x2 = x1; g2 = g1; x1 = hi - gr * (hi - lo); g1 = sse_at(1.0 - std::pow(10.0, x1), a, b); }
        else { lo = x1; x1 = x2; g1 = g2; x2 = lo + gr * (hi - lo); g2 = sse_at(1.0 - std::pow(10.0, x2), a, b); }
    }
    const double p = 1.0 - std::pow(10.0, 0.5 * (lo + hi));
    double af, bf;
    const double sse = sse_at(p, af, bf);
    if (sse < best.sse) best = {p, af, bf, sse};
    return best;
}

} // namespace

RBResult single_qubit_rb(const NoiseSpec& noise, double gate_time_ns, int n_seq,
                         const std::vector<int>& lengths, unsigned long long seed,
                         bool simultaneous, double xi_zz_khz) {
    if (lengths.empty() || n_seq < 1)
        throw ValidationError("RB needs at least one sequence and one length");
    for (size_t i = 1; i < lengths.size(); ++i)
        if (lengths[i] <= lengths[i - 1])
            throw ValidationError("RB lengths must be ascending");

    const auto group = clifford_group();
    auto embed = [&](const Eigen::Matrix2cd& c) {
        Eigen::Matrix3cd g = Eigen::Matrix3cd::Identity();
        g.topLeftCorner<2, 2>() = c;
        return g;
    };

    // Per-mode noise operators on 3 levels.
    std::vector<Eigen::MatrixXcd> mode_ops;
    {
        Eigen::Matrix3cd a = Eigen::Matrix3cd::Zero();
        a(0, 1) = 1.0;
        a(1, 2) = std::sqrt(2.0);
        if (noise.t1_us > 0.0) mode_ops.push_back(std::sqrt(1.0 / us_to_ns(noise.t1_us)) * a);
        if (noise.t2_echo_us > 0.0) {
            double gphi = 1.0 / us_to_ns(noise.t2_echo_us);
            if (noise.t1_us > 0.0) gphi -= 0.5 / us_to_ns(noise.t1_us);
            if (gphi > 0.0)
                mode_ops.push_back(std::sqrt(2.0 * gphi) *
                                   Eigen::MatrixXcd(Eigen::Vector3cd(0.0, 1.0, 2.0).asDiagonal()));
        }
    }

    const int dim = simultaneous ? 9 : 3;
    std::vector<Eigen::MatrixXcd> noise_ops;
    if (simultaneous) {
        const Eigen::Matrix3cd id = Eigen::Matrix3cd::Identity();
        for (const auto& op : mode_ops) {
            noise_ops.push_back(Eigen::kroneckerProduct(op, id).eval());
            noise_ops.push_back(Eigen::kroneckerProduct(id, op).eval());
        }
    } else {
        noise_ops = mode_ops;
    }

    // ZZ phase between gates (diagonal in the product basis).
    Eigen::VectorXcd zz_phase = Eigen::VectorXcd::Ones(dim);
    if (simultaneous && xi_zz_khz != 0.0) {
        const double xi_ghz = xi_zz_khz * 1e-6;
        for (int i = 0; i < dim; ++i) {
            const int na = i / 3, nb = i % 3;
            zz_phase(i) = std::exp(-I1 * two_pi * xi_ghz * static_cast<double>(na * nb) *
                                   gate_time_ns);
        }
    }

    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<size_t> pick(0, group.size() - 1);

    auto find_inverse = [&](const Eigen::Matrix2cd& prod) {
        size_t best = 0;
        double best_fit = -1.0;
        for (size_t k = 0; k < group.size(); ++k) {
            const double f = std::abs((group[k] * prod).trace()) / 2.0;
            if (f > best_fit) { best_fit = f; best = k; }
        }
        return best;
    };

    RBResult out;
    out.lengths = lengths;
    out.survival.assign(lengths.size(), 0.0);
    for (int s = 0; s < n_seq; ++s) {
        for (size_t li = 0; li < lengths.size(); ++li) {
            Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(dim, dim);
            rho(0, 0) = 1.0;
            Eigen::Matrix2cd prod_t = Eigen::Matrix2cd::Identity();
            Eigen::Matrix2cd prod_s = Eigen::Matrix2cd::Identity();
            auto apply_gate = [&](size_t kt, size_t ks) {
                Eigen::MatrixXcd g;
                if (simultaneous)
                    g = Eigen::kroneckerProduct(embed(group[kt]), embed(group[ks])).eval();
                else
                    g = embed(group[kt]);
                rho = g * rho * g.adjoint();
                if (simultaneous && xi_zz_khz != 0.0)
                    rho = zz_phase.asDiagonal() * rho * zz_phase.conjugate().asDiagonal();
                apply_mode_noise(rho, noise_ops, gate_time_ns, 8);
            };
            for (int m = 0; m < lengths[li]; ++m) {
                const size_t kt = pick(rng);
                const size_t ks = simultaneous ? pick(rng) : 0;
                apply_gate(kt, ks);
                prod_t = group[kt] * prod_t;
                if (simultaneous) prod_s = group[ks] * prod_s;
            }
            apply_gate(find_inverse(prod_t), simultaneous ? find_inverse(prod_s) : 0);
            double surv = 0.0;
            if (simultaneous)
                for (int nb = 0; nb < 3; ++nb) surv += rho(nb, nb).real(); // target in |0>, any spectator
            else
                surv = rho(0, 0).real();
            out.survival[li] += surv;
        }
    }
    for (auto& v : out.survival) v /= n_seq;

    for (size_t i = 1; i < out.survival.size(); ++i)
        if (out.survival[i] > out.survival[i - 1] + 0.05)
            throw FitFailure("RB decay is non-monotone beyond tolerance");

    const RBFit fit = fit_decay(lengths, out.survival);
    out.p = fit.p;
    out.a = fit.a;
    out.b = fit.b;
    out.r = (1.0 - fit.p) / 2.0;
    return out;
}

// ---------------------------------------------------------------------------
// Measurement-induced exchange
// ---------------------------------------------------------------------------

ChevronMap readout_stark_chevron(const DeviceGraph& graph, const EdgeCoupling& edge,
                                 const ReadoutParams& readout, Manifold manifold,
                                 const std::vector<double>& coupler_freqs_ghz,
                                 const std::vector<double>& amps, int jobs) {
    if (readout.kappa_mhz <= 0.0 || readout.dt_ns <= 0.0 || readout.duration_ns <= 0.0)
        throw ValidationError("readout model needs kappa > 0, dt > 0, duration > 0");
    const DeviceGraph sub = graph.edge_subgraph(edge);
    const EdgeCoupling& sedge = sub.edges[0];
    const FrequencyMap base = sweetspot_frequencies(sub);

    const ModeSpec& qa = sub.mode(sedge.qubit_a);
    const ModeSpec& qb = sub.mode(sedge.qubit_b);
    // Bare detuning of the manifold's two states; the Stark shift moves the
    // measured qubit (qubit_a) downward for negative chi.
    const double delta0 = manifold == Manifold::one_excitation
                              ? qa.f_sweetspot_ghz - qb.f_sweetspot_ghz
                              : qa.f_sweetspot_ghz - qb.f_sweetspot_ghz -
                                    qb.anharmonicity_mhz * 1e-3;

    const double chi_ghz = readout.chi_mhz * 1e-3;
    const double kappa = two_pi * readout.kappa_mhz * 1e-3; // rad/ns
    const double ring_down = 5.0 / kappa;

    ChevronMap map;
    map.coupler_freqs_ghz = coupler_freqs_ghz;
    map.amps = amps;
    map.transfer.assign(coupler_freqs_ghz.size(), std::vector<double>(amps.size(), 0.0));

    par_for(coupler_freqs_ghz.size(), jobs, [&](size_t fi) {
        FrequencyMap fm = base;
        fm[sedge.coupler] = coupler_freqs_ghz[fi];
        double j_ghz = 0.0;
        try {
            j_ghz = exchange_coupling_mhz(sub, sedge, fm, manifold) * 1e-3;
        } catch (const NumericalError&) {
            j_ghz = 0.0; // unresolved crossing: treat as uncoupled
        }

        // Initial/readout eigenbasis at nbar = 0.
        const double om0 = std::sqrt(0.25 * delta0 * delta0 + j_ghz * j_ghz);
        Eigen::Matrix2cd basis; // columns: upper-like, lower-like eigenvectors
        {
            // H0/2pi = [[delta0, j], [j, 0]]; eigenvector for eigenvalue
            // delta0/2 + om0 (the |10>-like state for delta0 > 0).
            const double e_plus = 0.5 * delta0 + om0;
            Eigen::Vector2d v1(j_ghz, e_plus - delta0);
            if (v1.norm() < 1e-15) v1 = Eigen::Vector2d(1.0, 0.0);
            v1.normalize();
            Eigen::Vector2d v2(-v1(1), v1(0));
            if (std::abs(v1(0)) < std::abs(v1(1))) std::swap(v1, v2); // v1 = |10>-like
            basis.col(0) = v1.cast<Complex>();
            basis.col(1) = v2.cast<Complex>();
        }

        for (size_t ai = 0; ai < amps.size(); ++ai) {
            const double n_max = readout.n_photon_scale * amps[ai] * amps[ai];
            Eigen::Matrix2cd rho = basis.col(0) * basis.col(0).adjoint();
            const int n_steps =
                static_cast<int>(std::ceil((readout.duration_ns + ring_down) / readout.dt_ns));
            for (int k = 0; k < n_steps; ++k) {
                const double t = (k + 0.5) * readout.dt_ns;
                double nbar;
                if (t <= readout.duration_ns) {
                    const double rise = 1.0 - std::exp(-0.5 * kappa * t);
                    nbar = n_max * rise * rise;
                } else {
                    const double rise = 1.0 - std::exp(-0.5 * kappa * readout.duration_ns);
                    nbar = n_max * rise * rise * std::exp(-kappa * (t - readout.duration_ns));
                }
                const double delta = delta0 + 2.0 * chi_ghz * nbar;
                // U = exp(-i H dt), H = pi*delta*(I + sz) + 2 pi j sx (rad/ns).
                const double wz = pi * delta, wx = two_pi * j_ghz;
                const double om = std::sqrt(wz * wz + wx * wx);
                Eigen::Matrix2cd u;
                if (om < 1e-15) {
                    u = Eigen::Matrix2cd::Identity();
                } else {
                    const double c = std::cos(om * readout.dt_ns), s = std::sin(om * readout.dt_ns);
                    u << Complex(c, -s * wz / om), Complex(0.0, -s * wx / om),
                        Complex(0.0, -s * wx / om), Complex(c, s * wz / om);
                }
                u *= std::exp(-I1 * wz * readout.dt_ns); // global phase, kept for clarity
                rho = u * rho * u.adjoint();
                // Measurement-induced dephasing of the two-state coherence.
                const double chi_ang = two_pi * chi_ghz;
                const double gamma_m = 8.0 * chi_ang * chi_ang * nbar / kappa;
                const double damp = std::exp(-gamma_m * readout.dt_ns);
                rho(0, 1) *= damp;
                rho(1, 0) *= damp;
            }
            const double transfer = (basis.col(1).adjoint() * rho * basis.col(1))(0, 0).real();
            map.transfer[fi][ai] = std::clamp(transfer, 0.0, 1.0);
        }
    });
    return map;
}

// ---------------------------------------------------------------------------
// Ramsey with embedded CZ excursions
// ---------------------------------------------------------------------------

RamseyResult ramsey_with_cz(const DeviceGraph& graph, const std::string& qubit, int n_cz,
                            double excursion_mhz, double t_cz_ns, double ramsey_time_ns,
                            double detuning_mhz) {
    if (n_cz < 0 || t_cz_ns < 0.0 || ramsey_time_ns <= 0.0 || excursion_mhz < 0.0)
        throw ValidationError("ramsey_with_cz: invalid parameters");
    const ModeSpec& spec = graph.mode(qubit);
    const auto nit = graph.noise.find(qubit);
    if (nit == graph.noise.end())
        throw ValidationError("no noise entry for qubit " + qubit);
    const NoiseSpec& noise = nit->second;

    const double t_exc = n_cz * t_cz_ns;
    const double t_total = ramsey_time_ns + t_exc;

    // White dephasing over the whole sequence.
    double amp = noise.t2_ramsey_us > 0.0 ? std::exp(-t_total / us_to_ns(noise.t2_ramsey_us)) : 1.0;

    // Quasi-static 1/f flux noise at the excursion bias: Gaussian factor
    // exp(-(2 pi slope sigma_phi t_exc)^2 / 2), zero slope at the sweetspot.
    double slope = 0.0;
    if (excursion_mhz > 0.0 && t_exc > 0.0) {
        const double f_exc = spec.f_sweetspot_ghz - mhz_to_ghz(excursion_mhz);
        const double phi = flux_for_frequency(spec, f_exc);
        const double h = 1e-6;
        slope = std::abs(mode_frequency_at_flux(spec, phi + h) -
                         mode_frequency_at_flux(spec, phi - h)) /
                (2.0 * h); // GHz per flux quantum
        const double sigma_phase = two_pi * slope * noise.flux_noise_amp * t_exc;
        amp *= std::exp(-0.5 * sigma_phase * sigma_phase);
    }

    RamseyResult out;
    out.fringe_amplitude = amp;
    const double phase_rad =
        two_pi * (mhz_to_ghz(detuning_mhz) * ramsey_time_ns + mhz_to_ghz(excursion_mhz) * t_exc);
    out.fringe_phase_deg = std::remainder(phase_rad * 180.0 / pi, 360.0);

    const int n_points = 101;
    out.times_ns.resize(n_points);
    out.signal.resize(n_points);
    for (int i = 0; i < n_points; ++i) {
        const double t = ramsey_time_ns * i / (n_points - 1);
        const double a_t = amp * (noise.t2_ramsey_us > 0.0
                                      ? std::exp((ramsey_time_ns - t) / us_to_ns(noise.t2_ramsey_us))
                                      : 1.0);
        const double ph = two_pi * (mhz_to_ghz(detuning_mhz) * t + mhz_to_ghz(excursion_mhz) * t_exc);
        out.times_ns[static_cast<size_t>(i)] = t;
        out.signal[static_cast<size_t>(i)] = 0.5 + 0.5 * std::min(1.0, a_t) * std::cos(ph);
    }
    return out;
}

} // namespace tcsim
