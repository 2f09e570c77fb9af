#pragma once

#include "tcsim/device.hpp"

#include <map>
#include <optional>
#include <vector>

namespace tcsim {

// Maximum-overlap assignment of bare occupation labels to dressed
// eigenstates. A label is ambiguous when its best overlap drops to 0.5 or
// below (near an avoided crossing).
struct DressedState {
    int eigenindex = -1;
    double energy_ghz = 0.0; // non-angular
    double overlap = 0.0;
};

struct DressedLabeling {
    std::map<std::vector<int>, DressedState> states;
    bool ambiguous = false;

    const DressedState& at(const std::vector<int>& occ) const { return states.at(occ); }
};

// Labels the requested bare states (all states when targets is empty).
// The assignment is a bijection: each eigenstate is claimed at most once,
// resolved greedily by descending overlap.
DressedLabeling dressed_labeling(const Eigen::MatrixXcd& hamiltonian, const SpaceLayout& layout,
                                 const std::vector<std::vector<int>>& targets = {});

// Residual ZZ between the edge's qubits with every other mode (couplers
// included) in its ground state:
//   xi_zz = E11 - E10 - E01 + E00   (dressed energies, kHz).
// Positive xi_zz raises |11>. Throws AmbiguousLabeling near avoided
// crossings of the four computational states.
double xi_zz_khz(const DeviceGraph& graph, const EdgeCoupling& edge, const FrequencyMap& freqs);

enum class Manifold { one_excitation, two_excitation };

// Minimum dressed splitting between two bare configurations while sweeping
// one mode's bare frequency across a window. Coarse scan plus golden-section
// refinement of the gap.
struct GapScan {
    double f_at_min_ghz = 0.0;
    double min_gap_mhz = 0.0;
};

GapScan minimum_gap(const DeviceGraph& graph, const FrequencyMap& freqs,
                    const std::string& sweep_mode, const std::vector<int>& occ_a,
                    const std::vector<int>& occ_b, double f_lo_ghz, double f_hi_ghz,
                    int n_coarse = 41);

// Exchange coupling J = Delta_min / 2 for the edge, in MHz.
//   one_excitation: |01> - |10> crossing, sweeping qubit_a through qubit_b.
//   two_excitation: |11> - |02> crossing (the extra excitation on the
//   lower-frequency qubit), sweeping qubit_a.
// Throws NoCrossingInWindow when the gap minimum sits at a sweep endpoint.
double exchange_coupling_mhz(const DeviceGraph& graph, const EdgeCoupling& edge,
                             const FrequencyMap& freqs, Manifold manifold);

struct NullingPoint {
    double f_ghz = 0.0;
    bool valid = false; // bracketed by a sign change and refined
};

struct InteractionProfile {
    std::vector<double> coupler_freqs_ghz;
    std::vector<double> xi_zz_khz;
    std::vector<double> j1_mhz;
    std::vector<double> j2_mhz;
    std::vector<bool> masked; // ambiguous-labeling samples
    NullingPoint zz_null;
    NullingPoint j1_null;
    NullingPoint j2_null;
};

// Samples xi_zz, J1, J2 across a coupler-frequency window and refines each
// null by bisection to 0.1 MHz. Ambiguous samples are masked (curve gaps)
// rather than failing the sweep. Grid evaluation is data-parallel over
// points; jobs = 1 selects the serial reference path.
InteractionProfile interaction_profile(const DeviceGraph& graph, const EdgeCoupling& edge,
                                       double f_lo_ghz, double f_hi_ghz, int n_points,
                                       int jobs = 1);

// True iff one qubit's 0-1 transition lies within the other's [1-2, 0-1]
// band (inclusive at the boundaries).
bool straddling_check(const DeviceGraph& graph, const EdgeCoupling& edge);

} // namespace tcsim
