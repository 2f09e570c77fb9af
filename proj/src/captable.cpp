#include "tcsim/captable.hpp"
#include "tcsim/errors.hpp"
#include "tcsim/keyval.hpp"
#include "tcsim/units.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <set>
#include <sstream>

namespace tcsim {

void GeometryLUT::validate() const {
    const int n = n_dims();
    if (n < 1)
        throw ValidationError("LUT needs at least one dimension");
    if (corner_low.size() != static_cast<size_t>(n) || corner_high.size() != static_cast<size_t>(n))
        throw ValidationError("LUT corner bounds must match dimension count");
    for (int d = 0; d < n; ++d)
        if (!(corner_low[static_cast<size_t>(d)] < corner_high[static_cast<size_t>(d)]))
            throw ValidationError("LUT dimension " + dim_names[static_cast<size_t>(d)] +
                                  ": corner_low must be < corner_high");
    const size_t expect = size_t{1} << n;
    if (corner_capacitances.size() != expect)
        throw ValidationError("LUT must have exactly 2^n_dims = " + std::to_string(expect) +
                              " corner matrices, got " + std::to_string(corner_capacitances.size()));
    const auto rows = corner_capacitances.front().rows();
    if (node_names.size() != static_cast<size_t>(rows))
        throw ValidationError("LUT node_names must match matrix size");
    for (size_t c = 0; c < corner_capacitances.size(); ++c) {
        const auto& m = corner_capacitances[c];
        if (m.rows() != rows || m.cols() != rows)
            throw ValidationError("LUT corner " + std::to_string(c) + ": inconsistent matrix size");
        if ((m - m.transpose()).norm() > 1e-9 * std::max(1.0, m.norm()))
            throw ValidationError("LUT corner " + std::to_string(c) + ": matrix not symmetric");
        for (Eigen::Index i = 0; i < rows; ++i) {
            double off = 0.0;
            for (Eigen::Index j = 0; j < rows; ++j)
                if (i != j) off += std::abs(m(i, j));
            if (m(i, i) < off)
                std::cerr << "warning: LUT corner " << c << ", node " << node_names[static_cast<size_t>(i)]
                          << ": self-capacitance below sum of couplings\n";
        }
    }
}

Eigen::MatrixXd interpolate(const GeometryLUT& lut, const std::vector<double>& dims) {
    const int n = lut.n_dims();
    if (dims.size() != static_cast<size_t>(n))
        throw ValidationError("interpolate: expected " + std::to_string(n) + " dimension values");
    std::vector<double> t(static_cast<size_t>(n));
    for (int d = 0; d < n; ++d) {
        const double lo = lut.corner_low[static_cast<size_t>(d)];
        const double hi = lut.corner_high[static_cast<size_t>(d)];
        const double x = dims[static_cast<size_t>(d)];
        if (x < lo - 1e-12 || x > hi + 1e-12)
            throw OutOfRange("dimension " + lut.dim_names[static_cast<size_t>(d)] + " = " +
                             std::to_string(x) + " outside [" + std::to_string(lo) + ", " +
                             std::to_string(hi) + "]");
        t[static_cast<size_t>(d)] = (x - lo) / (hi - lo);
    }
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(lut.corner_capacitances[0].rows(),
                                                lut.corner_capacitances[0].cols());
    const size_t n_corners = size_t{1} << n;
    for (size_t c = 0; c < n_corners; ++c) {
        double w = 1.0;
        for (int d = 0; d < n; ++d)
            w *= (c >> d) & 1 ? t[static_cast<size_t>(d)] : 1.0 - t[static_cast<size_t>(d)];
        if (w != 0.0) out += w * lut.corner_capacitances[c];
    }
    return out;
}

int AssembledCapacitance::node_index(const std::string& name) const {
    for (size_t i = 0; i < node_names.size(); ++i)
        if (node_names[i] == name) return static_cast<int>(i);
    throw LabelMismatch("no node named " + name + " in assembled capacitance");
}

AssembledCapacitance assemble(const Eigen::MatrixXd& q_i, const std::vector<std::string>& q_i_nodes,
                              const Eigen::MatrixXd& coupler, const std::vector<std::string>& coupler_nodes,
                              const Eigen::MatrixXd& q_j, const std::vector<std::string>& q_j_nodes) {
    auto check_block = [](const Eigen::MatrixXd& m, const std::vector<std::string>& names,
                          const char* what) {
        if (m.rows() != m.cols() || names.size() != static_cast<size_t>(m.rows()))
            throw LabelMismatch(std::string(what) + ": node list does not match block size");
    };
    check_block(q_i, q_i_nodes, "q_i block");
    check_block(coupler, coupler_nodes, "coupler block");
    check_block(q_j, q_j_nodes, "q_j block");

    const std::set<std::string> si(q_i_nodes.begin(), q_i_nodes.end());
    const std::set<std::string> sj(q_j_nodes.begin(), q_j_nodes.end());
    for (const auto& n : sj)
        if (si.count(n))
            throw LabelMismatch("q_i and q_j blocks share node '" + n +
                                "'; transmons may only touch through the coupler block");

    // Global node order: q_i nodes, then unseen coupler nodes, then unseen
    // q_j nodes. Shared boundary nodes accumulate contributions.
    std::vector<std::string> names = q_i_nodes;
    auto add_unseen = [&](const std::vector<std::string>& more) {
        for (const auto& n : more)
            if (std::find(names.begin(), names.end(), n) == names.end()) names.push_back(n);
    };
    add_unseen(coupler_nodes);
    add_unseen(q_j_nodes);

    const int dim = static_cast<int>(names.size());
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(dim, dim);
    auto scatter = [&](const Eigen::MatrixXd& block, const std::vector<std::string>& bnames) {
        std::vector<int> idx;
        for (const auto& n : bnames)
            idx.push_back(static_cast<int>(std::find(names.begin(), names.end(), n) - names.begin()));
        for (size_t r = 0; r < bnames.size(); ++r)
            for (size_t c = 0; c < bnames.size(); ++c)
                m(idx[r], idx[c]) += block(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    };
    scatter(q_i, q_i_nodes);
    scatter(coupler, coupler_nodes);
    scatter(q_j, q_j_nodes);

    AssembledCapacitance out;
    out.matrix = std::move(m);
    out.node_names = std::move(names);
    out.provenance = "assembled{q_i+coupler+q_j}";
    return out;
}

CircuitEnergies energies_from_capacitance(const AssembledCapacitance& cap) {
    Eigen::FullPivLU<Eigen::MatrixXd> lu(cap.matrix);
    if (!lu.isInvertible())
        throw SingularMatrix("assembled capacitance matrix is singular");
    const Eigen::MatrixXd inv = lu.inverse();

    CircuitEnergies out;
    out.node_names = cap.node_names;
    const Eigen::Index n = inv.rows();
    out.e_c_ghz.resize(static_cast<size_t>(n));
    out.e_coupling_ghz = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        out.e_c_ghz[static_cast<size_t>(i)] = charging_energy_ghz_ff * inv(i, i);
        if (out.e_c_ghz[static_cast<size_t>(i)] <= 0.0)
            throw SingularMatrix("non-positive charging energy for node " +
                                 cap.node_names[static_cast<size_t>(i)]);
        for (Eigen::Index j = 0; j < n; ++j)
            if (i != j) out.e_coupling_ghz(i, j) = 2.0 * charging_energy_ghz_ff * inv(i, j);
    }
    return out;
}

double coupling_strength_mhz(double e_coupling_ghz, double ej_1_ghz, double ec_1_ghz,
                             double ej_2_ghz, double ec_2_ghz) {
    if (ej_1_ghz <= 0.0 || ec_1_ghz <= 0.0 || ej_2_ghz <= 0.0 || ec_2_ghz <= 0.0)
        throw ValidationError("coupling_strength: energies must be positive");
    const double ratio = (ej_1_ghz / ec_1_ghz) * (ej_2_ghz / ec_2_ghz);
    return ghz_to_mhz(e_coupling_ghz / std::sqrt(2.0) * std::pow(ratio, 0.25));
}

namespace {

double josephson_for(const DesignLUTs& luts, const std::string& node) {
    for (const auto& [name, ej] : luts.josephson_ghz)
        if (name == node) return ej;
    throw ValidationError("no Josephson energy given for node " + node);
}

} // namespace

DesignResult design_forward(const DesignLUTs& luts, const std::vector<double>& dims_i,
                            const std::vector<double>& dims_c, const std::vector<double>& dims_j) {
    const Eigen::MatrixXd bi = interpolate(luts.qubit_i, dims_i);
    const Eigen::MatrixXd bc = interpolate(luts.coupler, dims_c);
    const Eigen::MatrixXd bj = interpolate(luts.qubit_j, dims_j);
    const AssembledCapacitance cap = assemble(bi, luts.qubit_i.node_names, bc,
                                              luts.coupler.node_names, bj, luts.qubit_j.node_names);
    const CircuitEnergies en = energies_from_capacitance(cap);

    const int ni = cap.node_index(luts.qubit_i_node);
    const int nc = cap.node_index(luts.coupler_node);
    const int nj = cap.node_index(luts.qubit_j_node);

    const double ec_i = en.e_c_ghz[static_cast<size_t>(ni)];
    const double ec_c = en.e_c_ghz[static_cast<size_t>(nc)];
    const double ec_j = en.e_c_ghz[static_cast<size_t>(nj)];
    const double ej_i = josephson_for(luts, luts.qubit_i_node);
    const double ej_c = josephson_for(luts, luts.coupler_node);
    const double ej_j = josephson_for(luts, luts.qubit_j_node);

    DesignResult out;
    out.dims_qubit_i = dims_i;
    out.dims_coupler = dims_c;
    out.dims_qubit_j = dims_j;
    out.e_c_ghz = ec_i;
    out.g_qq_mhz = coupling_strength_mhz(std::abs(en.e_coupling_ghz(ni, nj)), ej_i, ec_i, ej_j, ec_j);
    out.g_qc_mhz = coupling_strength_mhz(std::abs(en.e_coupling_ghz(ni, nc)), ej_i, ec_i, ej_c, ec_c);
    return out;
}

DesignResult design_search(const DesignLUTs& luts, const DesignTargets& targets,
                           int max_iterations) {
    luts.qubit_i.validate();
    luts.coupler.validate();
    luts.qubit_j.validate();
    if (luts.free_dims.empty())
        throw ValidationError("design_search: no free dimensions");

    auto box_of = [&](int lut) -> const GeometryLUT& {
        return lut == 0 ? luts.qubit_i : lut == 1 ? luts.coupler : luts.qubit_j;
    };

    // Start at the box center.
    std::vector<std::vector<double>> dims(3);
    for (int l = 0; l < 3; ++l) {
        const GeometryLUT& g = box_of(l);
        for (int d = 0; d < g.n_dims(); ++d)
            dims[static_cast<size_t>(l)].push_back(
                0.5 * (g.corner_low[static_cast<size_t>(d)] + g.corner_high[static_cast<size_t>(d)]));
    }

    auto forward = [&](const std::vector<double>& x) {
        auto local = dims;
        for (size_t k = 0; k < luts.free_dims.size(); ++k) {
            auto [l, d] = luts.free_dims[k];
            local[static_cast<size_t>(l)][static_cast<size_t>(d)] = x[k];
        }
        return design_forward(luts, local[0], local[1], local[2]);
    };
    auto residual = [&](const DesignResult& r) {
        Eigen::Vector3d v;
        v << r.g_qq_mhz / targets.g_qq_mhz - 1.0, r.g_qc_mhz / targets.g_qc_mhz - 1.0,
            r.e_c_ghz / targets.e_c_ghz - 1.0;
        return v;
    };

    const size_t nf = luts.free_dims.size();
    std::vector<double> lo(nf), hi(nf), x(nf);
    for (size_t k = 0; k < nf; ++k) {
        auto [l, d] = luts.free_dims[k];
        lo[k] = box_of(l).corner_low[static_cast<size_t>(d)];
        hi[k] = box_of(l).corner_high[static_cast<size_t>(d)];
        x[k] = 0.5 * (lo[k] + hi[k]);
    }

    // Corner bracketing: each target must fall inside the hull of the
    // forward map evaluated at every free-dimension corner.
    {
        Eigen::Vector3d vmin = Eigen::Vector3d::Constant(1e300);
        Eigen::Vector3d vmax = Eigen::Vector3d::Constant(-1e300);
        const size_t n_corners = size_t{1} << nf;
        for (size_t c = 0; c < n_corners; ++c) {
            std::vector<double> xc(nf);
            for (size_t k = 0; k < nf; ++k) xc[k] = (c >> k) & 1 ? hi[k] : lo[k];
            const DesignResult r = forward(xc);
            Eigen::Vector3d v(r.g_qq_mhz, r.g_qc_mhz, r.e_c_ghz);
            vmin = vmin.cwiseMin(v);
            vmax = vmax.cwiseMax(v);
        }
        const Eigen::Vector3d t(targets.g_qq_mhz, targets.g_qc_mhz, targets.e_c_ghz);
        for (int i = 0; i < 3; ++i)
            if (t(i) < vmin(i) || t(i) > vmax(i))
                throw Unreachable("design target component " + std::to_string(i) +
                                  " outside the corner hull [" + std::to_string(vmin(i)) + ", " +
                                  std::to_string(vmax(i)) + "]");
    }

    double lambda = 1e-3;
    DesignResult best = forward(x);
    Eigen::Vector3d r = residual(best);
    for (int it = 0; it < max_iterations; ++it) {
        if (r.cwiseAbs().maxCoeff() <= 0.01) {
            best.residual = r.cwiseAbs().maxCoeff();
            best.iterations = it;
            return best;
        }
        // Finite-difference Jacobian.
        Eigen::MatrixXd jac(3, static_cast<Eigen::Index>(nf));
        for (size_t k = 0; k < nf; ++k) {
            const double h = 1e-4 * (hi[k] - lo[k]);
            auto xp = x, xm = x;
            xp[k] = std::min(hi[k], x[k] + h);
            xm[k] = std::max(lo[k], x[k] - h);
            const Eigen::Vector3d rp = residual(forward(xp));
            const Eigen::Vector3d rm = residual(forward(xm));
            jac.col(static_cast<Eigen::Index>(k)) = (rp - rm) / (xp[k] - xm[k]);
        }
        // Damped Gauss-Newton step, clamped to the LUT box.
        const Eigen::MatrixXd jtj = jac.transpose() * jac;
        const Eigen::VectorXd g = jac.transpose() * r;
        bool improved = false;
        for (int tries = 0; tries < 12 && !improved; ++tries) {
            Eigen::MatrixXd damped = jtj;
            damped.diagonal().array() += lambda;
            const Eigen::VectorXd dx = damped.ldlt().solve(g);
            auto xn = x;
            for (size_t k = 0; k < nf; ++k)
                xn[k] = std::clamp(x[k] - dx(static_cast<Eigen::Index>(k)), lo[k], hi[k]);
            const DesignResult cand = forward(xn);
            const Eigen::Vector3d rn = residual(cand);
            if (rn.squaredNorm() < r.squaredNorm()) {
                x = xn;
                r = rn;
                best = cand;
                lambda = std::max(1e-9, lambda * 0.3);
                improved = true;
            } else {
                lambda *= 10.0;
            }
        }
        if (!improved) break;
    }
    if (r.cwiseAbs().maxCoeff() <= 0.01) {
        best.residual = r.cwiseAbs().maxCoeff();
        return best;
    }
    throw NonConvergence("design_search: residual " + std::to_string(r.cwiseAbs().maxCoeff()) +
                         " after iteration limit");
}

GeometryLUT load_lut_file(const std::string& path) {
    const KeyValueFile f = parse_keyval_file(path);
    GeometryLUT lut;
    const Section* hdr = f.first_of_kind("lut");
    if (!hdr)
        throw ValidationError(path + ": missing [lut] section");
    {
        std::string names = hdr->get_string("dim_names");
        std::string item;
        std::istringstream iss(names);
        while (std::getline(iss, item, ',')) {
            const auto b = item.find_first_not_of(" \t");
            const auto e = item.find_last_not_of(" \t");
            if (b != std::string::npos) lut.dim_names.push_back(item.substr(b, e - b + 1));
        }
    }
    lut.corner_low = hdr->get_doubles("corner_low");
    lut.corner_high = hdr->get_doubles("corner_high");
    {
        std::string names = hdr->get_string("nodes");
        std::string item;
        std::istringstream iss(names);
        while (std::getline(iss, item, ',')) {
            const auto b = item.find_first_not_of(" \t");
            const auto e = item.find_last_not_of(" \t");
            if (b != std::string::npos) lut.node_names.push_back(item.substr(b, e - b + 1));
        }
    }
    const size_t n_nodes = lut.node_names.size();
    const size_t expect = size_t{1} << lut.dim_names.size();
    lut.corner_capacitances.assign(expect, Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_nodes),
                                                                 static_cast<Eigen::Index>(n_nodes)));
    std::vector<bool> seen(expect, false);
    for (const auto* s : f.of_kind("corner")) {
        if (s->args.size() != 1)
            throw ParseError(path, s->line, "[corner] expects the corner index");
        const size_t c = static_cast<size_t>(std::stoul(s->args[0]));
        if (c >= expect)
            throw ParseError(path, s->line, "corner index out of range");
        if (seen[c])
            throw ParseError(path, s->line, "duplicate corner " + std::to_string(c));
        seen[c] = true;
        for (size_t r = 0; r < n_nodes; ++r) {
            const auto row = s->get_doubles("row" + std::to_string(r));
            if (row.size() != n_nodes)
                throw ParseError(path, s->line, "corner row length mismatch");
            for (size_t cc = 0; cc < n_nodes; ++cc)
                lut.corner_capacitances[c](static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(cc)) =
                    row[cc];
        }
    }
    for (size_t c = 0; c < expect; ++c)
        if (!seen[c])
            throw ValidationError(path + ": missing corner " + std::to_string(c));
    lut.validate();
    return lut;
}

} // namespace tcsim
