#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace tcsim {

// Stochastic error channels for the repeated weight-2 parity check. All
// probabilities are per occurrence of the respective operation.
struct ErrorChannelSet {
    double p1 = 0.0;                  // single-qubit gate depolarizing error
    double p2 = 0.0;                  // two-qubit gate depolarizing error
    double l1_cz = 0.0;               // ancilla leakage per CZ
    double eps_ro = 0.0;              // readout assignment error
    double p_leak_meas = 0.0;         // measurement-induced leakage
    double seepage = 0.0;             // per-round return probability from leaked
    double xi_zz_spectator_khz = 0.0; // residual ZZ to the toggled spectator
    double j2_exchange_prob = 0.0;    // per-measurement corruption when spectator excited
    double t_exposure_ns = 120.0;     // spectator-coupled window per round (2 CZs)

    void validate() const; // throws ValidationError
};

enum class ToggleMode { none, every_round, odd_rounds_detuning };

struct ParityExperiment {
    int n_rounds = 100;
    int n_shots = 10000;
    ToggleMode toggle = ToggleMode::none;
    double detuning_mhz = 0.0; // ancilla detuning, odd_rounds_detuning mode
    double t_cz_ns = 60.0;
    ErrorChannelSet err;
    std::uint64_t seed = 1;

    void validate() const; // throws ValidationError
};

struct ParityRunResult {
    // Indexed by round r = 1..n_rounds ([0] unused). Defects are defined for
    // r >= 2; defect_rate[1] is always 0 (the projective first round is
    // excluded from statistics).
    std::vector<double> defect_rate;
    std::vector<double> leak_population; // ancilla leaked fraction at measurement r
};

// Runs the stochastic parity-check circuit: per round the ancilla picks up
// transient flips from gate depolarizing, readout error and the coherent
// spectator ZZ kick (phase phi = 2 pi xi t_exposure scrambles the declared
// outcome with probability sin^2(phi/2)); data errors persistently flip the
// tracked parity; a leaked ancilla declares uniformly random outcomes until
// seepage returns it. Deterministic for fixed seed via per-shot derived
// seeds; shots run concurrently when jobs > 1.
ParityRunResult run_parity(const ParityExperiment& exp, int jobs = 1);

struct BiasPoint {
    double bias_ghz = 0.0;
    double xi_zz_khz = 0.0;
    double j2_exchange_prob = 0.0;
};

struct BiasCurve {
    std::vector<BiasPoint> points;
    std::vector<double> defect_final_toggled;   // defect rate at the last round
    std::vector<double> defect_final_untoggled;
    std::vector<double> slope_toggled; // least-squares defect-vs-round slope, 1/round
};

// Maps each coupler bias to its spectator error channels and runs the
// toggled and untoggled experiments.
BiasCurve defect_rate_vs_bias(const ParityExperiment& tmpl, const std::vector<BiasPoint>& grid,
                              int jobs = 1);

struct DetuningCurves {
    std::vector<double> detunings_mhz;
    std::vector<std::vector<double>> defect_rate; // [detuning][round]
};

// Emulated ZZ: ancilla detuning phase 2 pi df t_cz per CZ on odd rounds
// replaces the spectator kick.
DetuningCurves emulated_zz_detuning(const ParityExperiment& tmpl,
                                    const std::vector<double>& detunings_mhz, int jobs = 1);

struct AmplitudeSweep {
    std::vector<double> amps;
    std::vector<double> defect_final;
    std::vector<std::vector<double>> defect_rate; // [amp][round]
    std::size_t argmin = 0;
};

// Readout-amplitude tradeoff: eps_ro and p_leak_meas are supplied per
// amplitude (low amplitude raises assignment error, high amplitude raises
// measurement-induced leakage); reports the defect-minimizing amplitude.
AmplitudeSweep readout_amplitude_sweep(const ParityExperiment& tmpl,
                                       const std::vector<double>& amps,
                                       const std::vector<double>& eps_ro,
                                       const std::vector<double>& p_leak_meas, int jobs = 1);

} // namespace tcsim
