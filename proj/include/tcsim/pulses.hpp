#pragma once

#include "tcsim/device.hpp"

#include <string>
#include <vector>

namespace tcsim {

enum class WaveformKind { coupler_frequency, qubit_frequency, flux_amplitude };

// Uniformly sampled control trajectory. Samples sit on node times k*dt,
// k = 0..N, so endpoints are represented exactly; duration = (N)*dt.
struct PulseWaveform {
    std::vector<double> samples; // GHz for frequency kinds, dimensionless for flux
    double dt_ns = 0.5;
    WaveformKind kind = WaveformKind::coupler_frequency;

    double duration_ns() const { return dt_ns * static_cast<double>(samples.size() - 1); }
    void validate() const;
};

// Fast-adiabatic pulse parameters. theta parametrizes the coupler-qubit
// mixing angle arctan(g_qc / (f_c - f_q)); the trajectory starts and ends at
// theta_i and reaches theta_f at the pulse midpoint.
struct FastAdiabaticSpec {
    double theta_i_rad = 0.0;
    double theta_f_rad = 0.0;
    double t_p_ns = 60.0;
    double sample_dt_ns = 0.5;
    double g_qc_mhz = 70.0;
    double f_q_high_ghz = 0.0; // reference (higher-frequency) qubit

    void validate() const;
};

// theta(t) = theta_i + (theta_f - theta_i)/2 * [1 - cos(2 pi t / t_p)],
// sampled on node times. Endpoint and midpoint identities hold exactly.
std::vector<double> theta_trajectory(const FastAdiabaticSpec& spec);

// f_c = f_q + g_qc / tan(theta); strictly decreasing on (0, pi/2).
double theta_to_coupler_frequency(double theta_rad, double g_qc_mhz, double f_q_ghz);
// Inverse: theta = arctan(g_qc / (f_c - f_q)), valid for f_c > f_q.
double coupler_frequency_to_theta(double f_c_ghz, double g_qc_mhz, double f_q_ghz);

// Full coupler-frequency waveform for the spec.
PulseWaveform fast_adiabatic_coupler_waveform(const FastAdiabaticSpec& spec);

// Constant qubit-frequency waveform (the square pulse applied to the
// lower-frequency qubit during a CZ; zero detuning is the common case).
PulseWaveform square_qubit_waveform(double f_ghz, double t_p_ns, double sample_dt_ns);

// Samplewise flux-arc inversion: coupler-frequency waveform -> flux
// amplitude relative to the sweetspot offset. Throws OutOfArcRange with the
// offending sample index.
PulseWaveform frequency_to_amplitude(const PulseWaveform& waveform, const ModeSpec& spec);
// Forward map for round-trip checks.
PulseWaveform amplitude_to_frequency(const PulseWaveform& waveform, const ModeSpec& spec);

// Parametric dynamical distortion: step response gain * (1 + sum a_k
// exp(-t / tau_k)), realized as exact first-order recursions.
struct DistortionTerm {
    double amplitude = 0.0; // dimensionless, |a| < 1 for physical models
    double tau_ns = 0.0;
};

struct DistortionModel {
    std::vector<DistortionTerm> terms;
    double gain = 1.0;

    void validate() const;
};

PulseWaveform apply_distortion(const PulseWaveform& waveform, const DistortionModel& model);
// Exact discrete inverse filter; apply_distortion(predistort(w)) == w to
// 1e-9 relative per sample. Throws UnstableInverse when the inverse
// recursion diverges.
PulseWaveform predistort(const PulseWaveform& waveform, const DistortionModel& model);

} // namespace tcsim
