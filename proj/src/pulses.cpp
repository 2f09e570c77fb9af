#include "tcsim/pulses.hpp"
#include "tcsim/errors.hpp"
#include "tcsim/units.hpp"

#include <cmath>

namespace tcsim {

void PulseWaveform::validate() const {
    if (samples.size() < 2)
        throw ValidationError("waveform needs at least 2 samples");
    if (dt_ns <= 0.0)
        throw ValidationError("waveform dt must be > 0");
    for (double s : samples)
        if (!std::isfinite(s))
            throw ValidationError("waveform contains a non-finite sample");
}

void FastAdiabaticSpec::validate() const {
    if (!(theta_i_rad > 0.0 && theta_i_rad <= theta_f_rad && theta_f_rad < pi / 2.0))
        throw ValidationError("fast-adiabatic spec requires 0 < theta_i <= theta_f < pi/2");
    if (t_p_ns <= 0.0)
        throw ValidationError("t_p must be > 0");
    if (sample_dt_ns <= 0.0)
        throw ValidationError("sample_dt must be > 0");
    const double ratio = t_p_ns / sample_dt_ns;
    if (std::abs(ratio - std::round(ratio)) > 1e-9)
        throw ValidationError("sample_dt must divide t_p");
}

std::vector<double> theta_trajectory(const FastAdiabaticSpec& spec) {
    spec.validate();
    const int n = static_cast<int>(std::round(spec.t_p_ns / spec.sample_dt_ns));
    std::vector<double> theta(static_cast<size_t>(n) + 1);
    for (int k = 0; k <= n; ++k) {
        const double t = spec.sample_dt_ns * k;
        theta[static_cast<size_t>(k)] =
            spec.theta_i_rad +
            0.5 * (spec.theta_f_rad - spec.theta_i_rad) * (1.0 - std::cos(two_pi * t / spec.t_p_ns));
    }
    return theta;
}

double theta_to_coupler_frequency(double theta_rad, double g_qc_mhz, double f_q_ghz) {
    if (!(theta_rad > 0.0 && theta_rad < pi / 2.0))
        throw ValidationError("theta must lie in (0, pi/2)");
    return f_q_ghz + mhz_to_ghz(g_qc_mhz) / std::tan(theta_rad);
}

double coupler_frequency_to_theta(double f_c_ghz, double g_qc_mhz, double f_q_ghz) {
    const double delta = f_c_ghz - f_q_ghz;
    if (delta <= 0.0)
        throw ValidationError("coupler must sit above the reference qubit");
    return std::atan(mhz_to_ghz(g_qc_mhz) / delta);
}

PulseWaveform fast_adiabatic_coupler_waveform(const FastAdiabaticSpec& spec) {
    const auto theta = theta_trajectory(spec);
    PulseWaveform w;
    w.dt_ns = spec.sample_dt_ns;
    w.kind = WaveformKind::coupler_frequency;
    w.samples.reserve(theta.size());
    for (double th : theta)
        w.samples.push_back(theta_to_coupler_frequency(th, spec.g_qc_mhz, spec.f_q_high_ghz));
    return w;
}

PulseWaveform square_qubit_waveform(double f_ghz, double t_p_ns, double sample_dt_ns) {
    const int n = static_cast<int>(std::round(t_p_ns / sample_dt_ns));
    PulseWaveform w;
    w.dt_ns = sample_dt_ns;
    w.kind = WaveformKind::qubit_frequency;
    w.samples.assign(static_cast<size_t>(n) + 1, f_ghz);
    return w;
}

PulseWaveform frequency_to_amplitude(const PulseWaveform& waveform, const ModeSpec& spec) {
    waveform.validate();
    PulseWaveform out;
    out.dt_ns = waveform.dt_ns;
    out.kind = WaveformKind::flux_amplitude;
    out.samples.reserve(waveform.samples.size());
    for (size_t i = 0; i < waveform.samples.size(); ++i) {
        try {
            out.samples.push_back(flux_for_frequency(spec, waveform.samples[i]) - spec.flux_offset);
        } catch (const OutOfArcRange& e) {
            throw OutOfArcRange("sample " + std::to_string(i) + ": " + e.what());
        }
    }
    return out;
}

PulseWaveform amplitude_to_frequency(const PulseWaveform& waveform, const ModeSpec& spec) {
    waveform.validate();
    PulseWaveform out;
    out.dt_ns = waveform.dt_ns;
    out.kind = WaveformKind::coupler_frequency;
    out.samples.reserve(waveform.samples.size());
    for (double a : waveform.samples)
        out.samples.push_back(mode_frequency_at_flux(spec, spec.flux_offset + a));
    return out;
}

void DistortionModel::validate() const {
    for (const auto& t : terms) {
        if (t.tau_ns <= 0.0)
            throw ValidationError("distortion tau must be > 0");
        if (std::abs(t.amplitude) >= 1.0)
            throw ValidationError("distortion amplitude must satisfy |a| < 1");
    }
}

// Forward filter: y[n] = gain * (x[n] + sum_k a_k (x[n] - lp_k[n])) with
// lp_k[n] = alpha_k lp_k[n-1] + (1 - alpha_k) x[n]. A unit step produces
// gain * (1 + a_k alpha_k^(n+1) ...) ~ gain * (1 + a e^(-t/tau)): overshoot
// decaying to the plateau.
PulseWaveform apply_distortion(const PulseWaveform& waveform, const DistortionModel& model) {
    waveform.validate();
    PulseWaveform out = waveform;
    const size_t nt = model.terms.size();
    std::vector<double> alpha(nt), lp(nt, 0.0);
    for (size_t k = 0; k < nt; ++k)
        alpha[k] = std::exp(-waveform.dt_ns / model.terms[k].tau_ns);
    for (size_t n = 0; n < waveform.samples.size(); ++n) {
        const double x = waveform.samples[n];
        double y = x;
        for (size_t k = 0; k < nt; ++k) {
            lp[k] = alpha[k] * lp[k] + (1.0 - alpha[k]) * x;
            y += model.terms[k].amplitude * (x - lp[k]);
        }
        out.samples[n] = model.gain * y;
    }
    return out;
}

PulseWaveform predistort(const PulseWaveform& waveform, const DistortionModel& model) {
    waveform.validate();
    if (model.gain == 0.0)
        throw UnstableInverse("zero gain is not invertible");
    const size_t nt = model.terms.size();
    std::vector<double> alpha(nt);
    double denom = 1.0;
    for (size_t k = 0; k < nt; ++k) {
        alpha[k] = std::exp(-waveform.dt_ns / model.terms[k].tau_ns);
        denom += model.terms[k].amplitude * alpha[k];
    }
    if (std::abs(denom) < 1e-12)
        throw UnstableInverse("inverse filter has a vanishing leading coefficient");

    auto run = [&](const std::vector<double>& y, std::vector<double>& x) {
        std::vector<double> lp(nt, 0.0);
        for (size_t n = 0; n < y.size(); ++n) {
            // y[n]/gain = x[n] (1 + sum a_k alpha_k) - sum a_k alpha_k lp_k[n-1]
            double rhs = y[n] / model.gain;
            for (size_t k = 0; k < nt; ++k)
                rhs += model.terms[k].amplitude * alpha[k] * lp[k];
            const double xn = rhs / denom;
            for (size_t k = 0; k < nt; ++k)
                lp[k] = alpha[k] * lp[k] + (1.0 - alpha[k]) * xn;
            x[n] = xn;
        }
    };

    // Stability probe: the inverse impulse response must not diverge.
    {
        std::vector<double> impulse(2048, 0.0);
        impulse[0] = 1.0;
        std::vector<double> resp(impulse.size());
        run(impulse, resp);
        double peak = 0.0;
        for (double v : resp) peak = std::max(peak, std::abs(v));
        if (!std::isfinite(peak) || peak > 1e6)
            throw UnstableInverse("inverse filter pole outside the unit circle");
    }

    PulseWaveform out = waveform;
    run(waveform.samples, out.samples);
    return out;
}

} // namespace tcsim
