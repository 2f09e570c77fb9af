// tcsim: pulse-level simulator of a flux-tunable-coupler transmon processor.
// Subcommands map one-to-one onto the experiments documented in the README.

#include "tcsim/captable.hpp"
#include "tcsim/device.hpp"
#include "tcsim/dynamics.hpp"
#include "tcsim/errors.hpp"
#include "tcsim/io.hpp"
#include "tcsim/keyval.hpp"
#include "tcsim/parallel.hpp"
#include "tcsim/parity.hpp"
#include "tcsim/pulses.hpp"
#include "tcsim/spectrum.hpp"
#include "tcsim/units.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace tcsim;

namespace {

struct CommonArgs {
    std::string device_path;
    std::string config_path;
    std::string out_dir = ".";
    std::uint64_t seed = 1;
    int jobs = 0; // 0 = all cores
};

void add_common(CLI::App* cmd, CommonArgs& args, bool need_device = true) {
    auto* dev = cmd->add_option("--device", args.device_path, "device description file");
    if (need_device) dev->required();
    cmd->add_option("--config", args.config_path, "experiment config file")->required();
    cmd->add_option("--out", args.out_dir, "output directory");
    cmd->add_option("--seed", args.seed, "random seed");
    cmd->add_option("--jobs", args.jobs, "parallel jobs (0 = all cores)");
}

int effective_jobs(const CommonArgs& args) {
    return args.jobs > 0 ? args.jobs : hardware_jobs();
}

std::vector<std::string> metadata_for(const CommonArgs& args) {
    return standard_metadata(fnv1a_hex(read_text_file(args.config_path)), args.seed);
}

void write_json_file(const fs::path& path, const json& j, const std::vector<std::string>& meta) {
    json out = j;
    json m;
    for (const auto& line : meta) {
        const auto eq = line.find(" = ");
        if (eq != std::string::npos) m[line.substr(0, eq)] = line.substr(eq + 3);
    }
    out["metadata"] = m;
    std::ofstream f(path);
    if (!f) throw ValidationError("cannot write " + path.string());
    f << out.dump(2) << "\n";
}

const Section& require_section(const KeyValueFile& cfg, const std::string& kind) {
    const Section* s = cfg.first_of_kind(kind);
    if (!s) throw ValidationError(cfg.path + ": missing [" + kind + "] section");
    return *s;
}

// --------------------------------------------------------------------------

int cmd_sweep_interactions(const CommonArgs& args) {
    const DeviceGraph graph = load_device_file(args.device_path);
    const KeyValueFile cfg = parse_keyval_file(args.config_path);
    const Section& s = require_section(cfg, "sweep");
    const double f_lo = s.get_double("f_lo_ghz");
    const double f_hi = s.get_double("f_hi_ghz");
    const int n_points = s.get_int_or("n_points", 41);
    const auto meta = metadata_for(args);
    fs::create_directories(args.out_dir);

    std::vector<const EdgeCoupling*> edges;
    if (const std::string* v = s.find("edge")) {
        std::istringstream ss(*v);
        std::string a, b;
        ss >> a >> b;
        edges.push_back(&graph.edge(a, b));
    } else {
        for (const auto& e : graph.edges) edges.push_back(&e);
    }

    for (const EdgeCoupling* e : edges) {
        const InteractionProfile prof =
            interaction_profile(graph, *e, f_lo, f_hi, n_points, effective_jobs(args));
        const std::string tag = e->qubit_a + "_" + e->qubit_b;

        CsvTable table;
        table.columns = {"coupler_freq_ghz", "xi_zz_khz", "j1_mhz", "j2_mhz", "masked"};
        for (size_t i = 0; i < prof.coupler_freqs_ghz.size(); ++i)
            table.rows.push_back({prof.coupler_freqs_ghz[i], prof.xi_zz_khz[i], prof.j1_mhz[i],
                                  prof.j2_mhz[i], prof.masked[i] ? 1.0 : 0.0});
        write_csv((fs::path(args.out_dir) / ("profile_" + tag + ".csv")).string(), table, meta);

        json nulls;
        auto null_json = [](const NullingPoint& np) {
            return json{{"valid", np.valid}, {"f_ghz", np.f_ghz}};
        };
        nulls["edge"] = {e->qubit_a, e->qubit_b};
        nulls["zz_null"] = null_json(prof.zz_null);
        nulls["j1_null"] = null_json(prof.j1_null);
        nulls["j2_null"] = null_json(prof.j2_null);
        if (!prof.zz_null.valid && !prof.j1_null.valid && !prof.j2_null.valid)
            std::cerr << "warning: no nulling point found for edge " << tag
                      << " (degenerate or out-of-window curves)\n";
        write_json_file(fs::path(args.out_dir) / ("nulls_" + tag + ".json"), nulls, meta);
    }
    return 0;
}

int cmd_cz(const CommonArgs& args) {
    const DeviceGraph graph = load_device_file(args.device_path);
    const KeyValueFile cfg = parse_keyval_file(args.config_path);
    const Section& s = require_section(cfg, "cz");
    std::istringstream ss(s.get_string("edge"));
    std::string qa, qb;
    ss >> qa >> qb;
    const EdgeCoupling& edge = graph.edge(qa, qb);
    const double t_p = s.get_double("t_p_ns");
    if (t_p <= 0.0) throw ValidationError("t_p_ns must be > 0");
    const std::string mode = s.get_string_or("mode", "calibrate");
    const auto meta = metadata_for(args);
    fs::create_directories(args.out_dir);

    if (mode == "calibrate") {
        const double th_lo = s.get_double_or("theta_lo_rad", 0.1);
        const double th_hi = s.get_double_or("theta_hi_rad", 1.1);
        CZCalibration cal;
        try {
            cal = calibrate_cz(graph, edge, t_p, th_lo, th_hi, s.get_int_or("n_scan", 21));
        } catch (const NoBracket& e) {
            std::cerr << "error: " << e.what()
                      << "\nhint: widen [theta_lo_rad, theta_hi_rad] or increase t_p_ns\n";
            throw;
        }
        CZMetrics metrics = cal.metrics;
        if (s.get_bool_or("noise", false))
            metrics = cz_gate_metrics(graph, edge, cal.pulse, &graph.noise);

        json j;
        j["edge"] = {qa, qb};
        j["theta_i_rad"] = cal.pulse.spec.theta_i_rad;
        j["theta_f_rad"] = cal.pulse.spec.theta_f_rad;
        j["t_p_ns"] = t_p;
        j["conditional_phase_deg"] = metrics.conditional_phase_deg;
        j["phase_a_deg"] = metrics.phase_a_deg;
        j["phase_b_deg"] = metrics.phase_b_deg;
        j["missing_fraction"] = metrics.missing_fraction;
        j["leakage_l1"] = metrics.leakage_l1;
        j["gate_error"] = metrics.gate_error;
        write_json_file(fs::path(args.out_dir) / "cz_calibration.json", j, meta);
        write_waveform_csv((fs::path(args.out_dir) / "cz_waveform.csv").string(),
                           cal.pulse.waveforms.at(edge.coupler), meta);
    } else if (mode == "landscape") {
        const double th_lo = s.get_double_or("theta_lo_rad", 0.1);
        const double th_hi = s.get_double_or("theta_hi_rad", 1.1);
        const int n_theta = s.get_int_or("n_theta", 21);
        CsvTable table;
        table.columns = {"theta_f_rad", "conditional_phase_deg", "missing_fraction", "leakage_l1"};
        for (int i = 0; i < n_theta; ++i) {
            const double th = th_lo + (th_hi - th_lo) * i / static_cast<double>(n_theta - 1);
            const CZPulse p = make_cz_pulse(graph, edge, th, t_p);
            const CZMetrics m = conditional_oscillation(graph, edge, p);
            table.rows.push_back({th, m.conditional_phase_deg, m.missing_fraction, m.leakage_l1});
        }
        write_csv((fs::path(args.out_dir) / "cz_landscape.csv").string(), table, meta);
    } else {
        throw ValidationError("cz mode must be 'calibrate' or 'landscape'");
    }
    return 0;
}

int cmd_readout_exchange(const CommonArgs& args) {
    const DeviceGraph graph = load_device_file(args.device_path);
    const KeyValueFile cfg = parse_keyval_file(args.config_path);
    const Section& s = require_section(cfg, "readout");
    std::istringstream ss(s.get_string("edge"));
    std::string qa, qb;
    ss >> qa >> qb;
    const EdgeCoupling& edge = graph.edge(qa, qb);
    const std::string mstr = s.get_string_or("manifold", "one_excitation");
    Manifold manifold;
    if (mstr == "one_excitation") manifold = Manifold::one_excitation;
    else if (mstr == "two_excitation") manifold = Manifold::two_excitation;
    else throw ValidationError("manifold must be one_excitation or two_excitation");

    ReadoutParams params;
    params.chi_mhz = s.get_double_or("chi_mhz", -1.0);
    params.kappa_mhz = s.get_double_or("kappa_mhz", 2.0);
    params.duration_ns = s.get_double_or("duration_ns", 500.0);
    params.n_photon_scale = s.get_double_or("n_photon_scale", 40.0);

    auto grid = [&](const char* lo, const char* hi, const char* n, int dflt_n) {
        const double a = s.get_double(lo), b = s.get_double(hi);
        const int k = s.get_int_or(n, dflt_n);
        std::vector<double> g(static_cast<size_t>(k));
        for (int i = 0; i < k; ++i) g[static_cast<size_t>(i)] = a + (b - a) * i / std::max(1, k - 1);
        return g;
    };
    const auto freqs = grid("f_lo_ghz", "f_hi_ghz", "n_freqs", 21);
    const auto amps = grid("amp_lo", "amp_hi", "n_amps", 11);

    const ChevronMap map =
        readout_stark_chevron(graph, edge, params, manifold, freqs, amps, effective_jobs(args));

    CsvTable table;
    table.columns = {"coupler_freq_ghz", "amp", "transfer"};
    for (size_t fi = 0; fi < map.coupler_freqs_ghz.size(); ++fi)
        for (size_t ai = 0; ai < map.amps.size(); ++ai)
            table.rows.push_back({map.coupler_freqs_ghz[fi], map.amps[ai], map.transfer[fi][ai]});
    fs::create_directories(args.out_dir);
    write_csv((fs::path(args.out_dir) / ("chevron_" + mstr + ".csv")).string(), table,
              metadata_for(args));
    return 0;
}

ErrorChannelSet error_params_from(const Section& s) {
    ErrorChannelSet err;
    err.p1 = s.get_double_or("p1", 0.0);
    err.p2 = s.get_double_or("p2", 0.0);
    err.l1_cz = s.get_double_or("l1_cz", 0.0);
    err.eps_ro = s.get_double_or("eps_ro", 0.0);
    err.p_leak_meas = s.get_double_or("p_leak_meas", 0.0);
    err.seepage = s.get_double_or("seepage", 0.0);
    err.xi_zz_spectator_khz = s.get_double_or("xi_zz_spectator_khz", 0.0);
    err.j2_exchange_prob = s.get_double_or("j2_exchange_prob", 0.0);
    err.t_exposure_ns = s.get_double_or("t_exposure_ns", 120.0);
    return err;
}

int cmd_parity(const CommonArgs& args) {
    const KeyValueFile cfg = parse_keyval_file(args.config_path);
    const Section& s = require_section(cfg, "parity");
    ParityExperiment exp;
    exp.n_rounds = s.get_int_or("n_rounds", 100);
    exp.n_shots = s.get_int_or("n_shots", 10000);
    exp.t_cz_ns = s.get_double_or("t_cz_ns", 60.0);
    exp.err = error_params_from(s);
    exp.seed = args.seed;
    const std::string toggle = s.get_string_or("toggle", "none");
    if (toggle == "none") exp.toggle = ToggleMode::none;
    else if (toggle == "every_round") exp.toggle = ToggleMode::every_round;
    else if (toggle == "odd_rounds_detuning") exp.toggle = ToggleMode::odd_rounds_detuning;
    else throw ValidationError("toggle must be none, every_round or odd_rounds_detuning");
    exp.detuning_mhz = s.get_double_or("detuning_mhz", 0.0);

    const auto meta = metadata_for(args);
    fs::create_directories(args.out_dir);
    const int jobs = effective_jobs(args);
    const std::string mode = s.get_string_or("mode", "single");

    auto write_run = [&](const ParityRunResult& res, const std::string& name) {
        CsvTable table;
        table.columns = {"round", "defect_rate", "leak_population"};
        for (int r = 1; r <= exp.n_rounds; ++r)
            table.rows.push_back({static_cast<double>(r), res.defect_rate[static_cast<size_t>(r)],
                                  res.leak_population[static_cast<size_t>(r)]});
        write_csv((fs::path(args.out_dir) / (name + ".csv")).string(), table, meta);
    };

    if (mode == "single") {
        write_run(run_parity(exp, jobs), "parity");
    } else if (mode == "toggle_compare") {
        ParityExperiment e = exp;
        e.toggle = ToggleMode::every_round;
        write_run(run_parity(e, jobs), "parity_toggled");
        e.toggle = ToggleMode::none;
        write_run(run_parity(e, jobs), "parity_untoggled");
    } else if (mode == "bias") {
        // Map each coupler bias to the spectator channels through the device
        // spectrum, then run toggled and untoggled experiments.
        if (args.device_path.empty())
            throw ValidationError("parity bias mode needs --device");
        const DeviceGraph graph = load_device_file(args.device_path);
        std::istringstream ess(s.get_string("edge"));
        std::string qa, qb;
        ess >> qa >> qb;
        const EdgeCoupling& edge = graph.edge(qa, qb);
        const DeviceGraph sub = graph.edge_subgraph(edge);
        const FrequencyMap base = sweetspot_frequencies(sub);
        const double b_lo = s.get_double("bias_lo_ghz"), b_hi = s.get_double("bias_hi_ghz");
        const int n_bias = s.get_int_or("n_bias", 11);
        const double j2_t_eff = s.get_double_or("j2_t_eff_ns", 0.0);

        std::vector<BiasPoint> grid;
        for (int i = 0; i < n_bias; ++i) {
            BiasPoint bp;
            bp.bias_ghz = b_lo + (b_hi - b_lo) * i / std::max(1, n_bias - 1);
            FrequencyMap fm = base;
            fm[edge.coupler] = bp.bias_ghz;
            bp.xi_zz_khz = xi_zz_khz(sub, sub.edges[0], fm);
            if (j2_t_eff > 0.0) {
                try {
                    const double j2_ghz =
                        exchange_coupling_mhz(sub, sub.edges[0], fm, Manifold::two_excitation) * 1e-3;
                    const double ph = std::sin(pi * j2_ghz * j2_t_eff);
                    bp.j2_exchange_prob = std::min(1.0, ph * ph);
                } catch (const NumericalError&) {
                    bp.j2_exchange_prob = 0.0;
                }
            }
            grid.push_back(bp);
        }
        const BiasCurve curve = defect_rate_vs_bias(exp, grid, jobs);
        CsvTable table;
        table.columns = {"bias_ghz", "xi_zz_khz", "defect_toggled", "defect_untoggled",
                         "slope_toggled"};
        for (size_t i = 0; i < grid.size(); ++i)
            table.rows.push_back({grid[i].bias_ghz, grid[i].xi_zz_khz,
                                  curve.defect_final_toggled[i], curve.defect_final_untoggled[i],
                                  curve.slope_toggled[i]});
        write_csv((fs::path(args.out_dir) / "parity_bias.csv").string(), table, meta);
    } else if (mode == "detuning") {
        const auto detunings = s.get_doubles("detunings_mhz");
        const DetuningCurves curves = emulated_zz_detuning(exp, detunings, jobs);
        CsvTable table;
        table.columns = {"detuning_mhz", "round", "defect_rate"};
        for (size_t i = 0; i < detunings.size(); ++i)
            for (int r = 1; r <= exp.n_rounds; ++r)
                table.rows.push_back({detunings[i], static_cast<double>(r),
                                      curves.defect_rate[i][static_cast<size_t>(r)]});
        write_csv((fs::path(args.out_dir) / "parity_detuning.csv").string(), table, meta);
    } else if (mode == "amplitude") {
        const auto amps = s.get_doubles("amps");
        const auto eps_ro = s.get_doubles("eps_ro_per_amp");
        const auto p_leak = s.get_doubles("p_leak_per_amp");
        const AmplitudeSweep sweep = readout_amplitude_sweep(exp, amps, eps_ro, p_leak, jobs);
        CsvTable table;
        table.columns = {"amp", "defect_final"};
        for (size_t i = 0; i < amps.size(); ++i)
            table.rows.push_back({amps[i], sweep.defect_final[i]});
        write_csv((fs::path(args.out_dir) / "parity_amplitude.csv").string(), table, meta);
        json j;
        j["argmin_amp"] = amps[sweep.argmin];
        write_json_file(fs::path(args.out_dir) / "parity_amplitude.json", j, meta);
    } else {
        throw ValidationError("parity mode must be single, toggle_compare, bias, detuning or amplitude");
    }
    return 0;
}

int cmd_lut_design(const CommonArgs& args) {
    const KeyValueFile cfg = parse_keyval_file(args.config_path);
    const Section& s = require_section(cfg, "lut-design");
    const fs::path cfg_dir = fs::path(args.config_path).parent_path();
    auto resolve = [&](const std::string& p) {
        return fs::path(p).is_absolute() ? p : (cfg_dir / p).string();
    };

    DesignLUTs luts;
    luts.qubit_i = load_lut_file(resolve(s.get_string("qubit_i_lut")));
    luts.coupler = load_lut_file(resolve(s.get_string("coupler_lut")));
    luts.qubit_j = load_lut_file(resolve(s.get_string("qubit_j_lut")));
    luts.qubit_i_node = s.get_string("qubit_i_node");
    luts.coupler_node = s.get_string("coupler_node");
    luts.qubit_j_node = s.get_string("qubit_j_node");
    {
        // free_dims = "lut:dim, lut:dim, ..." with lut in {0, 1, 2}
        std::istringstream fss(s.get_string("free_dims"));
        std::string item;
        while (std::getline(fss, item, ',')) {
            const auto colon = item.find(':');
            if (colon == std::string::npos)
                throw ValidationError("free_dims entries must look like lut:dim");
            luts.free_dims.emplace_back(std::stoi(item.substr(0, colon)),
                                        std::stoi(item.substr(colon + 1)));
        }
    }
    for (const auto& name : {luts.qubit_i_node, luts.coupler_node, luts.qubit_j_node})
        luts.josephson_ghz.emplace_back(name, s.get_double("ej_" + name + "_ghz"));

    const auto meta = metadata_for(args);
    fs::create_directories(args.out_dir);

    if (s.get_bool_or("selftest", false)) {
        // Corner-exactness self test on the loaded tables.
        double worst = 0.0;
        for (const GeometryLUT* lut : {&luts.qubit_i, &luts.coupler, &luts.qubit_j}) {
            for (size_t c = 0; c < lut->corner_capacitances.size(); ++c) {
                std::vector<double> x;
                for (int d = 0; d < lut->n_dims(); ++d)
                    x.push_back((c >> d) & 1 ? lut->corner_high[static_cast<size_t>(d)]
                                             : lut->corner_low[static_cast<size_t>(d)]);
                worst = std::max(worst, (interpolate(*lut, x) - lut->corner_capacitances[c])
                                            .cwiseAbs()
                                            .maxCoeff());
            }
        }
        json j;
        j["corner_exactness_max_abs_error_ff"] = worst;
        j["pass"] = worst < 1e-12;
        write_json_file(fs::path(args.out_dir) / "lut_selftest.json", j, meta);
        std::cout << (worst < 1e-12 ? "selftest pass" : "selftest FAIL") << "\n";
        return worst < 1e-12 ? 0 : 3;
    }

    DesignTargets targets;
    targets.g_qq_mhz = s.get_double("target_g_qq_mhz");
    targets.g_qc_mhz = s.get_double("target_g_qc_mhz");
    targets.e_c_ghz = s.get_double("target_e_c_ghz");
    const DesignResult res = design_search(luts, targets);

    json j;
    j["dims_qubit_i"] = res.dims_qubit_i;
    j["dims_coupler"] = res.dims_coupler;
    j["dims_qubit_j"] = res.dims_qubit_j;
    j["g_qq_mhz"] = res.g_qq_mhz;
    j["g_qc_mhz"] = res.g_qc_mhz;
    j["e_c_ghz"] = res.e_c_ghz;
    j["residual"] = res.residual;
    j["iterations"] = res.iterations;
    write_json_file(fs::path(args.out_dir) / "lut_design.json", j, meta);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"tcsim: tunable-coupler transmon processor simulator"};
    app.require_subcommand(1);

    CommonArgs sweep_args, cz_args, readout_args, parity_args, lut_args;
    auto* sweep = app.add_subcommand("sweep-interactions",
                                     "xi_ZZ / J1 / J2 vs coupler frequency, with nulling points");
    add_common(sweep, sweep_args);
    auto* cz = app.add_subcommand("cz", "fast-adiabatic CZ calibration and landscapes");
    add_common(cz, cz_args);
    auto* readout = app.add_subcommand("readout-exchange",
                                       "measurement-induced population exchange chevrons");
    add_common(readout, readout_args);
    auto* parity = app.add_subcommand("parity", "repeated parity-check Monte Carlo");
    add_common(parity, parity_args, false);
    auto* lut = app.add_subcommand("lut-design", "capacitance LUT interpolation and inverse design");
    add_common(lut, lut_args, false);

    CLI11_PARSE(app, argc, argv);

    try {
        if (sweep->parsed()) return cmd_sweep_interactions(sweep_args);
        if (cz->parsed()) return cmd_cz(cz_args);
        if (readout->parsed()) return cmd_readout_exchange(readout_args);
        if (parity->parsed()) return cmd_parity(parity_args);
        if (lut->parsed()) return cmd_lut_design(lut_args);
    } catch (const ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
