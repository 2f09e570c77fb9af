// Benchmark comparing the serial reference path (jobs = 1) against the
// OpenMP-parallel path for the two data-parallel kernels: the interaction
// sweep and the parity-check Monte Carlo. Also verifies that both paths
// produce identical results.

#include "tcsim/device.hpp"
#include "tcsim/parallel.hpp"
#include "tcsim/parity.hpp"
#include "tcsim/spectrum.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>

using namespace tcsim;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

template <typename Fn>
double timed(Fn&& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    return seconds_since(t0);
}

} // namespace

int main(int argc, char** argv) {
    const std::string device_path = argc > 1 ? argv[1] : "data/starfish5.dev";
    const int jobs = hardware_jobs();
    std::printf("hardware jobs: %d\n", jobs);

    const DeviceGraph graph = load_device_file(device_path);
    const EdgeCoupling& edge = graph.edges.front();
    const DeviceGraph sub = graph.edge_subgraph(edge);

    // Kernel 1: interaction profile (eigensolves over a frequency grid).
    const double f_b = sub.mode(edge.qubit_b).f_sweetspot_ghz;
    const double f_lo = f_b + 0.35, f_hi = sub.mode(edge.coupler).f_sweetspot_ghz;
    InteractionProfile serial_prof, parallel_prof;
    const double t_serial_prof = timed([&] {
        serial_prof = interaction_profile(sub, sub.edges[0], f_lo, f_hi, 81, 1);
    });
    const double t_parallel_prof = timed([&] {
        parallel_prof = interaction_profile(sub, sub.edges[0], f_lo, f_hi, 81, jobs);
    });
    double max_diff = 0.0;
    for (size_t i = 0; i < serial_prof.xi_zz_khz.size(); ++i)
        max_diff = std::max(max_diff,
                            std::fabs(serial_prof.xi_zz_khz[i] - parallel_prof.xi_zz_khz[i]));
    std::printf("interaction_profile (81 pts): serial %.3f s, parallel %.3f s, "
                "speedup %.2fx, max |diff| %.3g kHz\n",
                t_serial_prof, t_parallel_prof, t_serial_prof / t_parallel_prof, max_diff);

    // Kernel 2: parity Monte Carlo (independent shots).
    ParityExperiment exp;
    exp.n_rounds = 100;
    exp.n_shots = 200000;
    exp.err.p2 = 0.005;
    exp.err.p1 = 0.001;
    exp.err.eps_ro = 0.01;
    exp.err.l1_cz = 0.001;
    exp.err.seepage = 0.02;
    ParityRunResult serial_par, parallel_par;
    const double t_serial_par = timed([&] { serial_par = run_parity(exp, 1); });
    const double t_parallel_par = timed([&] { parallel_par = run_parity(exp, jobs); });
    double par_diff = 0.0;
    for (size_t r = 1; r < serial_par.defect_rate.size(); ++r)
        par_diff = std::max(par_diff,
                            std::fabs(serial_par.defect_rate[r] - parallel_par.defect_rate[r]));
    std::printf("run_parity (2e5 shots x 100 rounds): serial %.3f s, parallel %.3f s, "
                "speedup %.2fx, max |diff| %.3g\n",
                t_serial_par, t_parallel_par, t_serial_par / t_parallel_par, par_diff);

    if (max_diff != 0.0 || par_diff != 0.0) {
        std::printf("FAIL: serial and parallel paths disagree\n");
        return 1;
    }
    std::printf("serial and parallel paths agree exactly\n");
    return 0;
}
