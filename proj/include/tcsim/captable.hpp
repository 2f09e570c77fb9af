#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace tcsim {

// Lookup table of capacitance matrices (fF) simulated at the 2^n corners of
// a geometry box. Interpolation between corners is multilinear, so the table
// is exact wherever the underlying capacitance is linear per axis.
struct GeometryLUT {
    std::vector<std::string> dim_names;
    std::vector<double> corner_low;  // um, per dimension
    std::vector<double> corner_high; // um, per dimension
    // corner_capacitances[c] for corner bitmask c (bit d set = high end of
    // dimension d); exactly 2^n entries, each symmetric.
    std::vector<Eigen::MatrixXd> corner_capacitances;
    std::vector<std::string> node_names; // rows/cols of every corner matrix

    int n_dims() const { return static_cast<int>(dim_names.size()); }
    void validate() const; // throws ValidationError; warns on weak diagonal dominance
};

// Multilinear interpolation over all corners; exact at corners and exactly
// linear along each axis. Throws OutOfRange when a dimension leaves its box.
Eigen::MatrixXd interpolate(const GeometryLUT& lut, const std::vector<double>& dims);

struct AssembledCapacitance {
    Eigen::MatrixXd matrix; // fF, symmetric
    std::vector<std::string> node_names;
    std::string provenance;

    int node_index(const std::string& name) const; // throws LabelMismatch
};

// Combines interpolated blocks for {Q_i, coupler, Q_j} into the global
// capacitance matrix. Shared node labels identify the overlap: diagonal
// entries accumulate, cross blocks land at the labeled positions, and the
// direct Q_i-Q_j block stays zero except through the coupler-block columns.
AssembledCapacitance assemble(const Eigen::MatrixXd& q_i, const std::vector<std::string>& q_i_nodes,
                              const Eigen::MatrixXd& coupler, const std::vector<std::string>& coupler_nodes,
                              const Eigen::MatrixXd& q_j, const std::vector<std::string>& q_j_nodes);

struct CircuitEnergies {
    std::vector<double> e_c_ghz;            // per node, order of node_names
    Eigen::MatrixXd e_coupling_ghz;         // off-diagonal coupling energies
    std::vector<std::string> node_names;
};

// Maxwell-matrix inversion convention: E_C = e^2/2 * diag(C^-1), coupling
// energies from the off-diagonal inverse elements (e^2 * |C^-1|_ij).
CircuitEnergies energies_from_capacitance(const AssembledCapacitance& cap);

// g_qq = (E_ij / sqrt(2)) * (E_Ji E_Jj / (E_Ci E_Cj))^(1/4); g_qc likewise
// with the coupler's Josephson/charging energies. Inputs GHz, result MHz.
double coupling_strength_mhz(double e_coupling_ghz, double ej_1_ghz, double ec_1_ghz,
                             double ej_2_ghz, double ec_2_ghz);

struct DesignTargets {
    double g_qq_mhz = 0.0;
    double g_qc_mhz = 0.0;
    double e_c_ghz = 0.0; // qubit charging energy
};

struct DesignLUTs {
    GeometryLUT qubit_i;
    GeometryLUT coupler;
    GeometryLUT qubit_j;
    // Which LUT dimensions the search may move, as (lut index 0/1/2, dim).
    std::vector<std::pair<int, int>> free_dims;
    // Josephson energies, GHz, per assembled node name.
    std::vector<std::pair<std::string, double>> josephson_ghz;
    std::string qubit_i_node, coupler_node, qubit_j_node;
};

struct DesignResult {
    std::vector<double> dims_qubit_i, dims_coupler, dims_qubit_j;
    double g_qq_mhz = 0.0, g_qc_mhz = 0.0, e_c_ghz = 0.0;
    double residual = 0.0; // max relative target miss
    int iterations = 0;
};

// Forward map used by the search (and exposed for tests): geometry values
// -> interpolate -> assemble -> invert -> coupling strengths.
DesignResult design_forward(const DesignLUTs& luts, const std::vector<double>& dims_i,
                            const std::vector<double>& dims_c, const std::vector<double>& dims_j);

// Damped Gauss-Newton over the free dimensions with finite-difference
// Jacobian, clamped to the LUT box. Converges when every target matches
// within 1% relative. Throws Unreachable when corner bracketing rules the
// target out, NonConvergence after max_iterations.
DesignResult design_search(const DesignLUTs& luts, const DesignTargets& targets,
                           int max_iterations = 200);

// LUT file loader (structured text; see tests for the format).
GeometryLUT load_lut_file(const std::string& path);

} // namespace tcsim
