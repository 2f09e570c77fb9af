#pragma once

#include <Eigen/Dense>

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace tcsim {

enum class ModeKind { transmon, coupler };

// One transmon or tunable coupler. Frequencies in GHz, anharmonicity in MHz
// (negative), flux in units of the flux quantum.
struct ModeSpec {
    std::string label;
    ModeKind kind = ModeKind::transmon;
    double f_sweetspot_ghz = 0.0;
    double anharmonicity_mhz = 0.0;
    double squid_asymmetry = 0.0; // d in [0,1); 0 = symmetric SQUID
    double flux_offset = 0.0;     // flux quanta; arc maximum sits here
    int n_levels = 3;

    double ec_ghz() const { return -anharmonicity_mhz * 1e-3; }
    // Transmon approximation: f01 = sqrt(8 EJ EC) - EC at the sweetspot.
    double ej_ghz() const {
        const double ec = ec_ghz();
        const double s = f_sweetspot_ghz + ec;
        return s * s / (8.0 * ec);
    }

    void validate() const; // throws ValidationError
};

struct NoiseSpec {
    double t1_us = 0.0;
    double t2_ramsey_us = 0.0;
    double t2_echo_us = 0.0;
    double flux_noise_amp = 0.0; // 1/f amplitude, flux quanta
};

struct EdgeCoupling {
    std::string qubit_a;
    std::string qubit_b;
    std::string coupler;
    double g_qq_mhz = 0.0;
    double g_qc_a_mhz = 0.0;
    double g_qc_b_mhz = 0.0;
};

struct DeviceGraph {
    std::vector<ModeSpec> modes;
    std::vector<EdgeCoupling> edges;
    std::map<std::string, NoiseSpec> noise;

    void validate() const;
    int mode_index(const std::string& label) const; // throws ValidationError
    const ModeSpec& mode(const std::string& label) const;
    const EdgeCoupling& edge(const std::string& qubit_a, const std::string& qubit_b) const;
    bool has_mode(const std::string& label) const;

    // Subgraph containing only the two qubits and coupler of one edge
    // (with their noise entries). Used for per-edge spectral scans.
    DeviceGraph edge_subgraph(const EdgeCoupling& e) const;
};

using FrequencyMap = std::map<std::string, double>; // label -> GHz

// Symmetric/asymmetric SQUID flux arc:
//   f(phi) = sqrt(8 EJ EC d(phi)) - EC,
//   d(phi) = sqrt(cos^2(pi dphi) + a^2 sin^2(pi dphi)), dphi = phi - offset.
// Total in phi; maximal at the offset, periodic in 1 flux quantum.
double mode_frequency_at_flux(const ModeSpec& spec, double phi);

// Inverse of the arc on the monotone branch [offset, offset + 0.5).
// Throws OutOfArcRange if f_target is above the sweetspot or below the
// arc minimum. Result satisfies the forward map within 1 kHz.
double flux_for_frequency(const ModeSpec& spec, double f_target_ghz);

// Sweetspot frequencies for every mode in the graph.
FrequencyMap sweetspot_frequencies(const DeviceGraph& graph);

// Tensor-product layout of the truncated multi-mode space, mode order =
// graph order.
struct SpaceLayout {
    std::vector<int> dims;
    int total_dim = 1;

    int basis_index(const std::vector<int>& occupations) const;
    std::vector<int> occupations(int index) const;
};

SpaceLayout space_layout(const DeviceGraph& graph);

// Lowering operator of one mode embedded in the full space.
Eigen::MatrixXcd lowering_op(const SpaceLayout& layout, int mode_idx);

inline constexpr int default_dimension_cap = 243;

// Multi-mode Hamiltonian in rad/ns:
//   sum_m [ w_m a_m^+ a_m + (alpha_m/2) a_m^+ a_m^+ a_m a_m ]
// + sum couplings g (a + a^+)(b + b^+)   (counter-rotating terms kept).
// Each edge contributes three couplings: qa-c, qb-c and the direct qa-qb.
// Throws DimensionCap when the truncated dimension exceeds the cap.
Eigen::MatrixXcd build_hamiltonian(const DeviceGraph& graph, const FrequencyMap& freqs,
                                   int dimension_cap = default_dimension_cap);

enum class DecayShape { exponential, gaussian_dominated };

struct HybridizedCoherence {
    double t1_eff_us = 0.0;
    double t2_eff_us = 0.0;
    DecayShape decay_shape = DecayShape::exponential;
    double sin2_theta = 0.0; // coupler weight of the qubit-like eigenstate
};

// Effective coherence of a transmon hybridized with its adjacent coupler.
// T1 mixes the bare rates by the hybridization weights; dephasing adds a
// sin^2(theta)-weighted coupler flux-noise rate proportional to the local
// arc slope.
HybridizedCoherence hybridized_coherence(const DeviceGraph& graph, const FrequencyMap& freqs,
                                         const std::string& transmon);

// Device description loader (structured text, see data/ for the canonical
// example). Validates all invariants and reports line-level errors.
DeviceGraph load_device_file(const std::string& path);

} // namespace tcsim
