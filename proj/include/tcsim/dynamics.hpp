#pragma once

#include "tcsim/device.hpp"
#include "tcsim/pulses.hpp"
#include "tcsim/spectrum.hpp"

#include <map>
#include <string>
#include <vector>

namespace tcsim {

using WaveformMap = std::map<std::string, PulseWaveform>;

struct EvolutionOptions {
    // Open-system runs split every waveform sample into this many dissipator
    // substeps; the unitary part is exact per sample regardless.
    int dissipator_substeps = 2;
    bool adaptive = true; // double substeps until the convergence contract holds
    int max_substeps = 256;
    double convergence_tol = 1e-6;
    int dimension_cap = default_dimension_cap;
};

// Coherent propagator over the full truncated space. Modes named in the
// waveform map follow their sampled bare frequency (midpoint rule per
// interval); all other modes stay at `idle`. Unitary to 1e-8 by construction.
Eigen::MatrixXcd evolve_unitary(const DeviceGraph& graph, const FrequencyMap& idle,
                                const WaveformMap& waveforms,
                                const EvolutionOptions& opts = {});

// Open-system density-matrix evolution: exact unitary per sample interleaved
// with explicit Euler steps of the T1 / pure-dephasing dissipator. Free
// evolution is un-echoed, so T_phi^-1 = T2_ramsey^-1 - (2 T1)^-1 (falling
// back to T2_echo when no Ramsey time is set). Adaptive substep doubling until the
// final state changes by less than convergence_tol; throws NonConvergedStep
// past max_substeps. Trace-preserving to 1e-8.
Eigen::MatrixXcd evolve_density(const DeviceGraph& graph, const FrequencyMap& idle,
                                const WaveformMap& waveforms, const Eigen::MatrixXcd& rho0,
                                const std::map<std::string, NoiseSpec>& noise,
                                const EvolutionOptions& opts = {});

struct CZMetrics {
    double conditional_phase_deg = 0.0; // in (-180, 180]
    double phase_a_deg = 0.0;           // single-qubit phase corrections
    double phase_b_deg = 0.0;
    double missing_fraction = 0.0;
    double leakage_l1 = 0.0;
    double gate_error = 0.0;
};

// Fast-adiabatic CZ drive: the coupler idles at its sweetspot (theta_i) and
// excursions to theta_f, parameterized against the higher-frequency qubit.
struct CZPulse {
    FastAdiabaticSpec spec;
    WaveformMap waveforms; // keyed by the coupler label
};

CZPulse make_cz_pulse(const DeviceGraph& graph, const EdgeCoupling& edge, double theta_f_rad,
                      double t_p_ns, double sample_dt_ns = 0.5);

// Two-branch conditional-oscillation analysis of the coherent propagator:
// conditional phase, single-qubit phases, missing fraction (one minus the
// spectator-excited oscillation amplitude rescaled by the ground branch),
// computational-block leakage, and the coherent gate error after virtual
// single-qubit phase corrections.
CZMetrics conditional_oscillation(const DeviceGraph& graph, const EdgeCoupling& edge,
                                  const CZPulse& pulse, const EvolutionOptions& opts = {});

// Full channel metrics. With noise == nullptr this equals the coherent
// analysis; otherwise the 16 computational basis operators are propagated
// through the open-system evolution and the average gate fidelity follows
// from the entanglement fidelity, F_avg = (4 F_e + 1) / 5.
CZMetrics cz_gate_metrics(const DeviceGraph& graph, const EdgeCoupling& edge, const CZPulse& pulse,
                          const std::map<std::string, NoiseSpec>* noise,
                          const EvolutionOptions& opts = {});

// Channel metrics for an explicitly given computational-block map: inputs
// |i><j| -> outputs[4*i + j] (4x4 blocks, computational ordering
// {00, 01, 10, 11} as (qubit_a, qubit_b)). Virtual phase corrections
// phase_a/phase_b are applied before comparing against the ideal CZ.
struct BlockChannel {
    std::vector<Eigen::Matrix4cd> outputs; // 16 entries
    std::vector<double> leak_per_basis;    // population outside the block, 4 entries
};

CZMetrics gate_error_and_leakage(const BlockChannel& channel, double phase_a_deg,
                                 double phase_b_deg);

struct CZCalibration {
    CZPulse pulse;
    CZMetrics metrics;
    int evaluations = 0;
};

// Scans theta_f over [theta_lo, theta_hi], unwraps the conditional phase and
// bisects the +-180 degree crossing to within 0.02 degrees. Throws NoBracket
// when the scan never crosses.
CZCalibration calibrate_cz(const DeviceGraph& graph, const EdgeCoupling& edge, double t_p_ns,
                           double theta_lo_rad, double theta_hi_rad, int n_scan = 21,
                           double sample_dt_ns = 0.5);

struct RBResult {
    double r = 0.0; // error per Clifford
    double p = 1.0; // fitted depolarizing parameter
    double a = 0.0, b = 0.0;
    std::vector<int> lengths;
    std::vector<double> survival; // sequence-averaged per length
};

// Single-qubit randomized benchmarking on a 3-level mode with T1 / dephasing
// noise per gate. With simultaneous = true a second mode runs its own random
// Clifford stream and a ZZ phase exp(-i 2 pi xi n_a n_b t_gate) acts between
// gates, emulating simultaneous benchmarking under residual coupling.
RBResult single_qubit_rb(const NoiseSpec& noise, double gate_time_ns, int n_seq,
                         const std::vector<int>& lengths, unsigned long long seed,
                         bool simultaneous = false, double xi_zz_khz = 0.0);

struct ReadoutParams {
    double chi_mhz = -1.0;      // dispersive shift (free model knob)
    double kappa_mhz = 2.0;     // cavity linewidth (free model knob)
    double duration_ns = 500.0; // square readout pulse length
    double n_photon_scale = 40.0; // photons at unit amplitude
    double dt_ns = 1.0;
};

struct ChevronMap {
    std::vector<double> coupler_freqs_ghz;
    std::vector<double> amps;
    std::vector<std::vector<double>> transfer; // [freq][amp], probabilities
};

// Measurement-induced exchange: readout photons Stark-shift the measured
// qubit (delta_f = 2 chi nbar(t), square-drive ring-up) through the spectator
// resonance of the chosen manifold; the two-state subproblem coupled by the
// spectrum's J at each coupler bias gives the transfer probability, with
// measurement-induced dephasing 8 chi^2 nbar / kappa on the coherence.
ChevronMap readout_stark_chevron(const DeviceGraph& graph, const EdgeCoupling& edge,
                                 const ReadoutParams& readout, Manifold manifold,
                                 const std::vector<double>& coupler_freqs_ghz,
                                 const std::vector<double>& amps, int jobs = 1);

struct RamseyResult {
    double fringe_amplitude = 0.0;
    double fringe_phase_deg = 0.0;
    std::vector<double> times_ns;
    std::vector<double> signal;
};

// Ramsey fringe with n_cz CZ-length excursions embedded: white dephasing at
// the idle bias plus a quasi-static 1/f flux-noise Gaussian factor scaled by
// the arc slope at the excursion bias (zero at the sweetspot).
RamseyResult ramsey_with_cz(const DeviceGraph& graph, const std::string& qubit, int n_cz,
                            double excursion_mhz, double t_cz_ns, double ramsey_time_ns,
                            double detuning_mhz);

} // namespace tcsim
