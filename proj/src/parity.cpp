#include "tcsim/parity.hpp"
#include "tcsim/errors.hpp"
#include "tcsim/parallel.hpp"
#include "tcsim/units.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace tcsim {

namespace {

void check_prob(double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0))
        throw ValidationError(std::string(name) + " must be a probability in [0, 1]");
}

} // namespace

void ErrorChannelSet::validate() const {
    check_prob(p1, "p1");
    check_prob(p2, "p2");
    check_prob(l1_cz, "l1_cz");
    check_prob(eps_ro, "eps_ro");
    check_prob(p_leak_meas, "p_leak_meas");
    check_prob(seepage, "seepage");
    check_prob(j2_exchange_prob, "j2_exchange_prob");
    if (t_exposure_ns < 0.0)
        throw ValidationError("t_exposure must be non-negative");
}

void ParityExperiment::validate() const {
    if (n_rounds < 2)
        throw ValidationError("parity experiment needs n_rounds >= 2");
    if (n_shots < 1)
        throw ValidationError("parity experiment needs n_shots >= 1");
    if (t_cz_ns <= 0.0)
        throw ValidationError("t_cz must be > 0");
    err.validate();
}

namespace {

// Deterministic uniform double in [0, 1) from the engine's raw output.
inline double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline bool bernoulli(std::mt19937_64& rng, double p) {
    if (p <= 0.0) return false;
    if (p >= 1.0) return true;
    return uniform01(rng) < p;
}

inline bool random_bit(std::mt19937_64& rng) { return (rng() & 1ULL) != 0ULL; }

struct DerivedProbs {
    double p_data = 0.0;      // persistent parity flip per data qubit per round
    double p_flip_cz = 0.0;   // transient ancilla flip per CZ
    double p_flip_1q = 0.0;   // transient ancilla flip per basis rotation
    double p_scramble = 0.0;  // outcome scrambling from the coherent phase kick
};

DerivedProbs derive(const ParityExperiment& exp) {
    DerivedProbs d;
    // Depolarizing accounting: 8 of the 15 two-qubit Paulis act as Z or Y on
    // the given qubit; 2 of 3 single-qubit Paulis flip the X-basis outcome.
    d.p_data = (8.0 / 15.0) * exp.err.p2 + (2.0 / 3.0) * exp.err.p1;
    d.p_flip_cz = (8.0 / 15.0) * exp.err.p2;
    d.p_flip_1q = (2.0 / 3.0) * exp.err.p1;
    double phi = 0.0;
    if (exp.toggle == ToggleMode::every_round)
        phi = two_pi * (exp.err.xi_zz_spectator_khz * 1e-6) * exp.err.t_exposure_ns;
    else if (exp.toggle == ToggleMode::odd_rounds_detuning)
        phi = 2.0 * two_pi * mhz_to_ghz(exp.detuning_mhz) * exp.t_cz_ns; // two CZs per round
    const double s = std::sin(0.5 * phi);
    d.p_scramble = s * s;
    return d;
}

} // namespace

ParityRunResult run_parity(const ParityExperiment& exp, int jobs) {
    exp.validate();
    const DerivedProbs probs = derive(exp);
    const size_t n_rounds = static_cast<size_t>(exp.n_rounds);
    const size_t n_shots = static_cast<size_t>(exp.n_shots);

    // Per-shot rows; reduced serially afterwards so aggregation is
    // order-independent across jobs.
    std::vector<std::uint8_t> defects(n_shots * n_rounds, 0);
    std::vector<std::uint8_t> leaks(n_shots * n_rounds, 0);

    par_for(n_shots, jobs, [&](size_t shot) {
        std::seed_seq ss{static_cast<std::uint32_t>(exp.seed), static_cast<std::uint32_t>(exp.seed >> 32),
                         static_cast<std::uint32_t>(shot), static_cast<std::uint32_t>(shot >> 32)};
        std::mt19937_64 rng(ss);

        bool parity = false;
        bool leaked = false;
        bool prev_declared = false;
        for (size_t r = 1; r <= n_rounds; ++r) {
            const bool odd_round = (r % 2) == 1;
            const bool spectator_excited = exp.toggle == ToggleMode::every_round && odd_round;
            const bool detuned_round = exp.toggle == ToggleMode::odd_rounds_detuning && odd_round;

            if (r == 1) parity = random_bit(rng); // projective first measurement

            // Persistent data errors flip the tracked parity.
            for (int q = 0; q < 2; ++q)
                if (bernoulli(rng, probs.p_data)) parity = !parity;

            // Ancilla leakage bookkeeping: seepage first, then the two CZs,
            // then the measurement-induced channel.
            if (leaked && bernoulli(rng, exp.err.seepage)) leaked = false;
            if (!leaked && bernoulli(rng, exp.err.l1_cz)) leaked = true;
            if (!leaked && bernoulli(rng, exp.err.l1_cz)) leaked = true;
            if (!leaked && bernoulli(rng, exp.err.p_leak_meas)) leaked = true;

            bool declared;
            if (leaked) {
                declared = random_bit(rng);
            } else {
                declared = parity;
                if (bernoulli(rng, probs.p_flip_cz)) declared = !declared;
                if (bernoulli(rng, probs.p_flip_cz)) declared = !declared;
                if (bernoulli(rng, probs.p_flip_1q)) declared = !declared;
                if (bernoulli(rng, probs.p_flip_1q)) declared = !declared;
                if ((spectator_excited || detuned_round) && bernoulli(rng, probs.p_scramble))
                    declared = random_bit(rng);
                if (spectator_excited && bernoulli(rng, exp.err.j2_exchange_prob))
                    declared = random_bit(rng);
                if (bernoulli(rng, exp.err.eps_ro)) declared = !declared;
            }

            leaks[shot * n_rounds + (r - 1)] = leaked ? 1 : 0;
            if (r >= 2)
                defects[shot * n_rounds + (r - 1)] = declared != prev_declared ? 1 : 0;
            prev_declared = declared;
        }
    });

    ParityRunResult out;
    out.defect_rate.assign(n_rounds + 1, 0.0);
    out.leak_population.assign(n_rounds + 1, 0.0);
    for (size_t shot = 0; shot < n_shots; ++shot)
        for (size_t r = 1; r <= n_rounds; ++r) {
            out.defect_rate[r] += defects[shot * n_rounds + (r - 1)];
            out.leak_population[r] += leaks[shot * n_rounds + (r - 1)];
        }
    for (size_t r = 1; r <= n_rounds; ++r) {
        out.defect_rate[r] /= static_cast<double>(n_shots);
        out.leak_population[r] /= static_cast<double>(n_shots);
    }
    return out;
}

BiasCurve defect_rate_vs_bias(const ParityExperiment& tmpl, const std::vector<BiasPoint>& grid,
                              int jobs) {
    BiasCurve curve;
    curve.points = grid;
    curve.defect_final_toggled.resize(grid.size());
    curve.defect_final_untoggled.resize(grid.size());
    curve.slope_toggled.resize(grid.size());

    for (size_t i = 0; i < grid.size(); ++i) {
        ParityExperiment exp = tmpl;
        exp.err.xi_zz_spectator_khz = grid[i].xi_zz_khz;
        exp.err.j2_exchange_prob = grid[i].j2_exchange_prob;
        exp.seed = tmpl.seed + i;

        exp.toggle = ToggleMode::every_round;
        const ParityRunResult toggled = run_parity(exp, jobs);
        exp.toggle = ToggleMode::none;
        const ParityRunResult untoggled = run_parity(exp, jobs);

        const size_t last = static_cast<size_t>(exp.n_rounds);
        curve.defect_final_toggled[i] = toggled.defect_rate[last];
        curve.defect_final_untoggled[i] = untoggled.defect_rate[last];

        // Least-squares slope of the toggled defect rate over rounds 2..n.
        double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0, n = 0.0;
        for (size_t r = 2; r <= last; ++r) {
            const double x = static_cast<double>(r);
            const double y = toggled.defect_rate[r];
            sx += x; sy += y; sxx += x * x; sxy += x * y; n += 1.0;
        }
        curve.slope_toggled[i] = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    }
    return curve;
}

DetuningCurves emulated_zz_detuning(const ParityExperiment& tmpl,
                                    const std::vector<double>& detunings_mhz, int jobs) {
    DetuningCurves out;
    out.detunings_mhz = detunings_mhz;
    for (size_t i = 0; i < detunings_mhz.size(); ++i) {
        ParityExperiment exp = tmpl;
        exp.toggle = ToggleMode::odd_rounds_detuning;
        exp.detuning_mhz = detunings_mhz[i];
        const ParityRunResult res = run_parity(exp, jobs);
        out.defect_rate.push_back(res.defect_rate);
    }
    return out;
}

AmplitudeSweep readout_amplitude_sweep(const ParityExperiment& tmpl,
                                       const std::vector<double>& amps,
                                       const std::vector<double>& eps_ro,
                                       const std::vector<double>& p_leak_meas, int jobs) {
    if (amps.size() != eps_ro.size() || amps.size() != p_leak_meas.size() || amps.empty())
        throw ValidationError("amplitude sweep needs matching, non-empty grids");
    AmplitudeSweep out;
    out.amps = amps;
    for (size_t i = 0; i < amps.size(); ++i) {
        ParityExperiment exp = tmpl;
        exp.err.eps_ro = eps_ro[i];
        exp.err.p_leak_meas = p_leak_meas[i];
        const ParityRunResult res = run_parity(exp, jobs);
        out.defect_rate.push_back(res.defect_rate);
        out.defect_final.push_back(res.defect_rate[static_cast<size_t>(exp.n_rounds)]);
    }
    out.argmin = static_cast<size_t>(
        std::min_element(out.defect_final.begin(), out.defect_final.end()) -
        out.defect_final.begin());
    return out;
}

} // namespace tcsim
