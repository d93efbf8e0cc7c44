// Command-line front end: structural reports, calibration simulation, ONN
// training, robustness sweeps, energy tables, monitoring and programming.
// Configuration comes from an INI-style file plus --set overrides and flags;
// flags win. Every run writes a resolved copy of its effective configuration
// next to its outputs.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mzmesh/calibration.hpp"
#include "mzmesh/config.hpp"
#include "mzmesh/energy.hpp"
#include "mzmesh/io.hpp"
#include "mzmesh/mnist.hpp"
#include "mzmesh/onn.hpp"
#include "mzmesh/programming.hpp"
#include "mzmesh/robustness.hpp"
#include "mzmesh/topology.hpp"

namespace fs = std::filesystem;
using namespace mzmesh;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct CommonArgs {
    std::string config_path;
    std::vector<std::string> overrides;
    std::string out_dir;
    long seed = -1;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "INI configuration file");
    cmd->add_option("--set", args.overrides, "override as section.key=value (repeatable)");
    cmd->add_option("--out", args.out_dir, "output directory (overrides [run] out_dir)");
    cmd->add_option("--seed", args.seed, "master seed (overrides [run] seed)");
}

RunConfig load_config(const CommonArgs& args) {
    RunConfig cfg;
    if (!args.config_path.empty()) {
        std::ifstream in(args.config_path);
        if (!in) throw ConfigError("cannot open config file '" + args.config_path + "'");
        try {
            cfg = RunConfig::parse(in);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(args.config_path + ": " + e.what());
        }
    }
    for (const auto& o : args.overrides) {
        try {
            cfg.apply_override(o);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
    }
    if (!args.out_dir.empty()) cfg.set("run", "out_dir", args.out_dir);
    if (args.seed >= 0) cfg.set("run", "seed", std::to_string(args.seed));
    return cfg;
}

fs::path resolve_out_dir(RunConfig& cfg) {
    std::string dir = cfg.get("run", "out_dir", "");
    if (dir.empty()) {
        if (const char* env = std::getenv("MZMESH_OUT_DIR")) dir = env;
    }
    if (dir.empty()) dir = "out";
    cfg.set("run", "out_dir", dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create output directory '" + dir + "': " + ec.message());
    return dir;
}

void write_resolved(const RunConfig& cfg, const fs::path& dir) {
    std::ofstream out(dir / "resolved.ini");
    if (!out) throw std::runtime_error("cannot write " + (dir / "resolved.ini").string());
    cfg.write(out);
}

template <typename T>
void write_file(const fs::path& path, const T& emit) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    emit(out);
}

MeshKind parse_kind(const std::string& name) {
    try {
        return kind_from_name(name);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
}

MeshTopology mesh_from_config(const RunConfig& cfg) {
    const MeshKind kind = parse_kind(cfg.get("mesh", "kind", "bokun"));
    const int n = static_cast<int>(cfg.get_int("mesh", "n", 8));
    try {
        return build_mesh(kind, n);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
}

struct LoadedData {
    Dataset train, val;
    std::string name;
};

LoadedData dataset_from_config(const RunConfig& cfg, std::uint64_t seed, int n) {
    LoadedData out;
    const std::string type = cfg.get("dataset", "type", "gaussian");
    if (type == "gaussian") {
        const int per_train = static_cast<int>(cfg.get_int("dataset", "train_per_class", 40));
        const int per_val = static_cast<int>(cfg.get_int("dataset", "val_per_class", 20));
        const double sep = cfg.get_double("dataset", "separation", 4.0);
        const double spread = cfg.get_double("dataset", "spread", 1.0);
        out.train = gaussian_dataset(n, per_train, sep, spread, seed * 2 + 1);
        out.val = gaussian_dataset(n, per_val, sep, spread, seed * 2 + 2);
        out.name = "gaussian";
        return out;
    }
    if (type == "mnist") {
        const std::string ti = cfg.require("dataset", "train_images");
        const std::string tl = cfg.require("dataset", "train_labels");
        const std::string vi = cfg.require("dataset", "val_images");
        const std::string vl = cfg.require("dataset", "val_labels");
        const PcaModel pca = fit_mnist_reduction(ti, tl, n);
        out.train = mnist_reduced(pca, ti, tl);
        out.val = mnist_reduced(pca, vi, vl);
        out.name = "mnist";
        return out;
    }
    throw ConfigError("dataset.type must be gaussian or mnist, got '" + type + "'");
}

int cmd_mesh_info(const std::string& kind_name_str, int n) {
    const MeshKind kind = parse_kind(kind_name_str);
    MeshTopology t;
    try {
        t = build_mesh(kind, n);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    std::cout << to_json(structural_report(t)).dump(2) << "\n";
    return kExitOk;
}

int cmd_calibrate(RunConfig cfg) {
    cfg.validate({{"run", {"seed", "out_dir"}},
                  {"mesh", {"kind", "n"}},
                  {"calibrate",
                   {"resolution_v", "v_pi", "offset_scale_pi", "averaging", "averaging_points",
                    "injected_dbm", "injected_phase"}}});
    const MeshTopology t = mesh_from_config(cfg);
    CalibrationSimOptions opt;
    opt.seed = cfg.get_int("run", "seed", 1);
    opt.vpm.v_pi = cfg.get_double("calibrate", "v_pi", 2.0);
    opt.vpm.resolution = cfg.get_double("calibrate", "resolution_v", 0.01);
    opt.offset_scale = cfg.get_double("calibrate", "offset_scale_pi", 0.15) * numeric::pi;
    opt.use_averaging = cfg.get_bool("calibrate", "averaging", true);
    opt.averaging_points = static_cast<int>(cfg.get_int("calibrate", "averaging_points", 16));
    if (cfg.has("calibrate", "injected_dbm"))
        opt.injected_power_dbm = cfg.get_double("calibrate", "injected_dbm", 0.0);
    opt.injected_phase = cfg.get_double("calibrate", "injected_phase", 0.0);

    cfg.set("run", "seed", std::to_string(opt.seed));
    const fs::path dir = resolve_out_dir(cfg);

    const CalibrationPlan plan = calibration_plan(t);
    const auto report = simulate_calibration(t, opt);

    write_file(dir / "plan.json", [&](std::ostream& o) { o << to_json(plan).dump(2) << "\n"; });
    write_file(dir / "calibration_errors.csv",
               [&](std::ostream& o) { write_calibration_csv(o, report); });
    write_resolved(cfg, dir);

    double worst = 0.0;
    int failed = 0;
    for (const auto& e : report) {
        if (!e.ok) ++failed;
        else worst = std::max(worst, e.abs_error);
    }
    std::cout << "calibrated " << report.size() << " MZIs on " << kind_name(t.kind) << "(" << t.n_main
              << "); worst recovered-phase error " << worst / numeric::pi << " pi";
    if (failed) std::cout << "; " << failed << " dark route(s) reported";
    std::cout << "\nwrote " << (dir / "plan.json").string() << ", "
              << (dir / "calibration_errors.csv").string() << "\n";
    return kExitOk;
}

int cmd_train(RunConfig cfg) {
    cfg.validate({{"run", {"seed", "out_dir"}},
                  {"mesh", {"kind", "n"}},
                  {"dataset",
                   {"type", "train_per_class", "val_per_class", "separation", "spread", "train_images",
                    "train_labels", "val_images", "val_labels"}},
                  {"train", {"layers", "epochs", "batch", "learning_rate", "activation", "loss",
                             "modrelu_bias", "optimizer"}}});
    const std::uint64_t seed = cfg.get_int("run", "seed", 1);
    const MeshKind kind = parse_kind(cfg.get("mesh", "kind", "bokun"));
    const int n = static_cast<int>(cfg.get_int("mesh", "n", 10));
    const int layers = static_cast<int>(cfg.get_int("train", "layers", 1));

    ActivationConfig act;
    act.kind = activation_from_name(cfg.get("train", "activation", layers > 1 ? "modrelu" : "identity"));
    act.modrelu_bias = cfg.get_double("train", "modrelu_bias", 0.1);
    const LossFn loss = cfg.get("train", "loss", "cross-entropy") == "mse" ? LossFn::mse
                                                                           : LossFn::cross_entropy;
    OnnModel model;
    try {
        model = make_onn(kind, n, layers, act, loss);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    rng::Sequence init(seed ^ 0xabcddcba);
    for (auto& layer : model.layers) {
        for (auto& p : layer.phases)
            p = {init.uniform() * 2 * numeric::pi, init.uniform() * 2 * numeric::pi};
        for (auto& p : layer.input_shifter_phases) p = init.uniform() * 2 * numeric::pi;
    }

    const LoadedData data = dataset_from_config(cfg, seed, n);

    TrainingConfig tc;
    tc.epochs = static_cast<int>(cfg.get_int("train", "epochs", 40));
    tc.batch_size = static_cast<int>(cfg.get_int("train", "batch", 32));
    tc.learning_rate = cfg.get_double("train", "learning_rate", 0.05);
    tc.seed = seed;
    const std::string opt_name = cfg.get("train", "optimizer", "adam");
    if (opt_name == "sgd") tc.optimizer = Optimizer::sgd;
    else if (opt_name == "adam") tc.optimizer = Optimizer::adam;
    else throw ConfigError("train.optimizer must be sgd or adam");

    cfg.set("run", "seed", std::to_string(seed));
    cfg.set("train", "activation", activation_name(act.kind));
    const fs::path dir = resolve_out_dir(cfg);

    const TrainReport rep = train(model, data.train, tc);
    const double acc = evaluate_accuracy(model, data.val, {}, 0.0, 1);

    write_file(dir / "model.json", [&](std::ostream& o) { o << to_json(model).dump(2) << "\n"; });
    write_file(dir / "loss_curve.csv", [&](std::ostream& o) {
        o.precision(17);
        o << "epoch,mean_loss\n";
        for (std::size_t i = 0; i < rep.loss_curve.size(); ++i) o << i + 1 << "," << rep.loss_curve[i] << "\n";
    });
    write_resolved(cfg, dir);

    std::cout << "trained " << layers << "-layer " << kind_name(kind) << "(" << n << ") on " << data.name
              << ": validation accuracy " << acc << "\nwrote " << (dir / "model.json").string() << "\n";
    return kExitOk;
}

int cmd_sweep(RunConfig cfg, const std::string& model_flag) {
    cfg.validate({{"run", {"seed", "out_dir"}},
                  {"dataset",
                   {"type", "train_per_class", "val_per_class", "separation", "spread", "train_images",
                    "train_labels", "val_images", "val_labels"}},
                  {"sweep",
                   {"model", "mode", "axis1_max", "axis1_steps", "axis2_max", "axis2_steps", "trials",
                    "samples", "threshold", "threads"}}});
    if (!model_flag.empty()) cfg.set("sweep", "model", model_flag);
    const std::string model_path = cfg.require("sweep", "model");
    const OnnModel model = load_model(model_path);

    SweepSpec spec;
    const std::string mode = cfg.get("sweep", "mode", "sigma-loss");
    if (mode == "sigma-loss") spec.mode = SweepMode::sigma_loss;
    else if (mode == "theta-phi") spec.mode = SweepMode::theta_phi;
    else throw ConfigError("sweep.mode must be sigma-loss or theta-phi");
    spec.axis1_max = cfg.get_double("sweep", "axis1_max", 0.5);
    spec.axis1_steps = static_cast<int>(cfg.get_int("sweep", "axis1_steps", 21));
    spec.axis2_max = cfg.get_double("sweep", "axis2_max", spec.mode == SweepMode::sigma_loss ? 1.0 : 0.5);
    spec.axis2_steps = static_cast<int>(cfg.get_int("sweep", "axis2_steps", 21));
    spec.trials = static_cast<int>(cfg.get_int("sweep", "trials", 20));
    spec.max_samples = static_cast<int>(cfg.get_int("sweep", "samples", 200));
    spec.threshold = cfg.get_double("sweep", "threshold", 0.75);
    spec.master_seed = cfg.get_int("run", "seed", 1);
    const int threads = static_cast<int>(cfg.get_int("sweep", "threads", 1));

    const LoadedData data = dataset_from_config(cfg, spec.master_seed, model.n_features);

    cfg.set("run", "seed", std::to_string(spec.master_seed));
    const fs::path dir = resolve_out_dir(cfg);

    SweepReport rep = run_sweep(model, data.val, spec, threads);
    rep.dataset_name = data.name;

    write_file(dir / "sweep_grid.csv", [&](std::ostream& o) { write_grid_csv(o, rep); });
    write_file(dir / "sweep_summary.json", [&](std::ostream& o) { o << to_json(rep).dump(2) << "\n"; });
    write_file(dir / "sweep_heatmap.svg", [&](std::ostream& o) { write_heatmap_svg(o, rep); });
    write_resolved(cfg, dir);

    std::cout << "swept " << kind_name(rep.kind) << "(" << rep.n << ") " << sweep_mode_name(spec.mode)
              << " grid " << spec.axis1_steps << "x" << spec.axis2_steps << ": fom " << rep.fom_value << " "
              << (spec.mode == SweepMode::theta_phi ? "rad^2" : "dB*rad") << "\nwrote "
              << (dir / "sweep_grid.csv").string() << "\n";
    return kExitOk;
}

int cmd_energy(RunConfig cfg) {
    cfg.validate({{"run", {"seed", "out_dir"}},
                  {"energy", {"n", "p_pi_mw", "vector_rate", "transit_us", "fw_hz"}}});
    const int n = static_cast<int>(cfg.get_int("energy", "n", 10));
    EnergyParams p;
    p.p_pi = cfg.get_double("energy", "p_pi_mw", 20.0) * 1e-3;
    p.vr = cfg.get_double("energy", "vector_rate", 1e10);
    p.transit_time = cfg.get_double("energy", "transit_us", 2.2) * 1e-6;
    const std::vector<double> fw = cfg.get_double_list("energy", "fw_hz", {0.0, 2000.0});

    const fs::path dir = resolve_out_dir(cfg);
    EfficiencyReport rep;
    try {
        rep = efficiency_report(n, fw, p);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    write_file(dir / "energy.csv", [&](std::ostream& o) { write_energy_csv(o, rep); });
    write_file(dir / "energy_summary.json", [&](std::ostream& o) { o << to_json(rep).dump(2) << "\n"; });
    write_resolved(cfg, dir);

    write_energy_csv(std::cout, rep);
    std::cout << "headline saving at 2 kHz: " << rep.headline_saving_fraction * 100.0
              << "% (anchored to the reference static energies: " << rep.anchored_saving_fraction * 100.0
              << "%)\n";
    return kExitOk;
}

int cmd_monitor(RunConfig cfg, const std::string& model_flag, long mzi_flag) {
    cfg.validate({{"run", {"seed", "out_dir"}}, {"monitor", {"model", "mzi", "sweep_points"}}});
    if (!model_flag.empty()) cfg.set("monitor", "model", model_flag);
    if (mzi_flag >= 0) cfg.set("monitor", "mzi", std::to_string(mzi_flag));
    const OnnModel model = load_model(cfg.require("monitor", "model"));
    const MeshState& state = model.layers.front();
    const auto& t = state.topology;
    const long which = cfg.get_int("monitor", "mzi", -1);
    const int sweep_points = static_cast<int>(cfg.get_int("monitor", "sweep_points", 64));

    const fs::path dir = resolve_out_dir(cfg);
    std::vector<int> ids;
    if (which >= 0) {
        if (which >= static_cast<long>(t.placements.size()))
            throw ConfigError("monitor.mzi out of range for this mesh");
        ids.push_back(static_cast<int>(which));
    } else {
        for (int id = 0; id < static_cast<int>(t.placements.size()); ++id) ids.push_back(id);
    }

    std::ofstream csv(dir / "monitor.csv");
    csv.precision(17);
    csv << "mzi_id,set_theta,monitored_theta,abs_error,accessible\n";
    for (int id : ids) {
        const auto plan = monitoring_plan(t, id);
        if (!plan) {
            std::cout << "MZI " << id << " on " << kind_name(t.kind) << "(" << t.n_main
                      << ") is not independently accessible: no input lights exactly one of its inputs "
                         "with a dark path to an output\n";
            csv << id << ",,,,no\n";
            continue;
        }
        const MonitorResult r = monitor_theta(state, *plan, sweep_points);
        const double set = numeric::wrap_2pi(state.phases[id].theta);
        const double err = std::abs(numeric::wrap_pm_pi(r.theta - set));
        std::cout << "MZI " << id << ": set theta " << set << " rad, monitored " << r.theta
                  << " rad (error " << err << ")\n";
        csv << id << "," << set << "," << r.theta << "," << err << ",yes\n";
    }
    write_resolved(cfg, dir);
    return kExitOk;
}

int cmd_program(RunConfig cfg) {
    cfg.validate({{"run", {"seed", "out_dir"}},
                  {"mesh", {"kind", "n"}},
                  {"program", {"method", "iterations", "crosstalk", "transit_us"}}});
    const MeshTopology t = mesh_from_config(cfg);
    const std::uint64_t seed = cfg.get_int("run", "seed", 1);
    const std::string method = cfg.get("program", "method", "ex-situ");
    const double transit = cfg.get_double("program", "transit_us", 2.2) * 1e-6;

    MeshState s = make_state(t);
    s.crosstalk.coefficient = cfg.get_double("program", "crosstalk", 0.0);
    rng::Sequence rng(seed);

    const fs::path dir = resolve_out_dir(cfg);
    ProgrammingResult result;
    if (method == "ex-situ") {
        const int iterations = static_cast<int>(cfg.get_int("program", "iterations", 10));
        std::vector<MziPhases> target(t.placements.size());
        for (auto& p : target)
            p = {rng.uniform() * 2 * numeric::pi, rng.uniform() * 2 * numeric::pi};
        try {
            result = program_ex_situ(s, target, iterations, transit);
        } catch (const std::invalid_argument& e) {
            std::cout << e.what() << "\n";
            throw ConfigError(std::string("ex-situ programming rejected: ") + e.what());
        }
    } else if (method == "in-situ") {
        const int iterations = static_cast<int>(cfg.get_int("program", "iterations", 200));
        // target: the main-port matrix realized by a random setting of the mesh
        MeshState truth = make_state(t);
        for (auto& p : truth.phases)
            p = {rng.uniform() * 2 * numeric::pi, rng.uniform() * 2 * numeric::pi};
        for (auto& p : truth.input_shifter_phases) p = rng.uniform() * 2 * numeric::pi;
        const CMatrix full = transfer_matrix(truth);
        CMatrix target(t.n_main, t.n_main);
        for (int i = 0; i < t.n_main; ++i)
            for (int j = 0; j < t.n_main; ++j)
                target(i, j) = full(t.port_index(i + 1), t.port_index(j + 1));
        result = program_in_situ(s, target, iterations, transit);
    } else {
        throw ConfigError("program.method must be ex-situ or in-situ");
    }

    write_file(dir / "program_result.json", [&](std::ostream& o) { o << to_json(result).dump(2) << "\n"; });
    MeshState programmed = s;
    programmed.phases = result.phases;
    programmed.input_shifter_phases = result.shifter_phases;
    write_file(dir / "transfer_matrix.csv",
               [&](std::ostream& o) { write_matrix_csv(o, transfer_matrix(programmed)); });
    write_resolved(cfg, dir);
    std::cout << method << " programming on " << kind_name(t.kind) << "(" << t.n_main << "): residual "
              << result.residual << " after " << result.iterations << " iteration(s), t_prog "
              << result.t_prog_seconds * 1e6 << " us\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Simulator and analysis toolkit for MZI-mesh optical processors"};
    app.require_subcommand(1);

    // mesh-info
    auto* info = app.add_subcommand("mesh-info", "structural characteristics of a mesh");
    std::string info_kind = "bokun";
    int info_n = 8;
    info->add_option("--kind", info_kind, "reck | clements | diamond | bokun");
    info->add_option("--n", info_n, "mesh size (main channels)");

    CommonArgs cal_args, train_args, sweep_args, energy_args, monitor_args, program_args;
    auto* cal = app.add_subcommand("calibrate", "simulate the mesh calibration protocol");
    add_common(cal, cal_args);
    std::string cal_kind, train_kind;
    long cal_n = 0, train_n = 0;
    cal->add_option("--kind", cal_kind, "mesh kind");
    cal->add_option("--n", cal_n, "mesh size");

    auto* tr = app.add_subcommand("train", "train an optical neural network");
    add_common(tr, train_args);
    tr->add_option("--kind", train_kind, "mesh kind");
    tr->add_option("--n", train_n, "mesh size");

    auto* sw = app.add_subcommand("sweep", "robustness sweep over noise and loss");
    add_common(sw, sweep_args);
    std::string sweep_model;
    sw->add_option("--model", sweep_model, "trained model JSON file");

    auto* en = app.add_subcommand("energy", "energy-per-operation comparison table");
    add_common(en, energy_args);

    auto* mon = app.add_subcommand("monitor", "monitor per-MZI phases of a programmed mesh");
    add_common(mon, monitor_args);
    std::string monitor_model;
    long monitor_mzi = -1;
    mon->add_option("--model", monitor_model, "trained model JSON file");
    mon->add_option("--mzi", monitor_mzi, "single MZI id (default: all)");

    auto* prog = app.add_subcommand("program", "program a mesh to a target");
    add_common(prog, program_args);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (info->parsed()) return cmd_mesh_info(info_kind, info_n);
        if (cal->parsed()) {
            RunConfig cfg = load_config(cal_args);
            if (!cal_kind.empty()) cfg.set("mesh", "kind", cal_kind);
            if (cal_n > 0) cfg.set("mesh", "n", std::to_string(cal_n));
            return cmd_calibrate(std::move(cfg));
        }
        if (tr->parsed()) {
            RunConfig cfg = load_config(train_args);
            if (!train_kind.empty()) cfg.set("mesh", "kind", train_kind);
            if (train_n > 0) cfg.set("mesh", "n", std::to_string(train_n));
            return cmd_train(std::move(cfg));
        }
        if (sw->parsed()) return cmd_sweep(load_config(sweep_args), sweep_model);
        if (en->parsed()) return cmd_energy(load_config(energy_args));
        if (mon->parsed()) return cmd_monitor(load_config(monitor_args), monitor_model, monitor_mzi);
        if (prog->parsed()) return cmd_program(load_config(program_args));
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitConfig;
}
