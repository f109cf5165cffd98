#include "alrom_cli/commands.hpp"

#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "alrom/active.hpp"
#include "alrom/baseline.hpp"
#include "alrom/io.hpp"
#include "alrom_cli/config.hpp"

namespace alrom::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json read_json_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ArtifactError("missing artifact: " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ArtifactError("corrupt JSON in " + path.string() + ": " + e.what());
    }
}

void write_json_file(const fs::path& path, const json& j) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ArtifactError("cannot open for writing: " + path.string());
    out << j.dump(2) << "\n";
}

json box_to_json(const ReducedBox& box) {
    return {{"lower", std::vector<double>(box.lower.begin(), box.lower.end())},
            {"upper", std::vector<double>(box.upper.begin(), box.upper.end())},
            {"beta", box.beta}};
}

ReducedBox box_from_json(const json& j) {
    ReducedBox box;
    const auto lower = j.at("lower").get<std::vector<double>>();
    const auto upper = j.at("upper").get<std::vector<double>>();
    box.lower = Eigen::Map<const Vector>(lower.data(), static_cast<Index>(lower.size()));
    box.upper = Eigen::Map<const Vector>(upper.data(), static_cast<Index>(upper.size()));
    box.beta = j.value("beta", 0.0);
    return box;
}

void persist_estimate(const fs::path& dir, const EstimateResult& est, const std::string& hash) {
    save_matrix(dir / "y_estimate.bin", est.y_estimate, hash);
    save_matrix(dir / "basis.bin", est.basis.V, hash);
    save_matrix(dir / "singular_values.bin", est.basis.singular_values, hash);
    write_json_file(dir / "box.json",
                    {{"format", "alrom-box"},
                     {"version", 1},
                     {"config_hash", hash},
                     {"reduced_dim", est.basis.dim()},
                     {"snapshot_count", est.y_estimate.cols()},
                     {"sign_convention", "max-abs-positive"},
                     {"box", box_to_json(est.box)},
                     {"loosened", box_to_json(est.loosened)},
                     {"trim", {{"y_min", est.limits.y_min}, {"y_max", est.limits.y_max}}},
                     {"probe_acceptance", est.probe_acceptance}});
}

EstimateResult load_estimate(const fs::path& dir, const std::string& expected_hash) {
    EstimateResult est;
    std::string hash;
    est.y_estimate = load_matrix(dir / "y_estimate.bin", &hash);
    if (!hash.empty() && hash != expected_hash) {
        throw ArtifactError("estimate artifacts in " + dir.string() +
                            " were produced under a different configuration");
    }
    est.basis.V = load_matrix(dir / "basis.bin");
    est.basis.singular_values = load_matrix(dir / "singular_values.bin");
    const json box = read_json_file(dir / "box.json");
    if (box.value("config_hash", "") != expected_hash) {
        throw ArtifactError("estimate box in " + dir.string() +
                            " was produced under a different configuration");
    }
    est.box = box_from_json(box.at("box"));
    est.loosened = box_from_json(box.at("loosened"));
    est.limits = {box.at("trim").at("y_min").get<double>(),
                  box.at("trim").at("y_max").get<double>()};
    est.probe_acceptance = box.value("probe_acceptance", 1.0);
    return est;
}

bool estimate_exists(const fs::path& dir) {
    return fs::exists(dir / "y_estimate.bin") && fs::exists(dir / "basis.bin") &&
           fs::exists(dir / "box.json") && fs::exists(dir / "singular_values.bin");
}

EstimateResult ensure_estimate(const RunConfig& cfg, const Heat2dModel& fom, const fs::path& out,
                               std::ostream& log) {
    const fs::path dir = out / "estimate";
    const std::string hash = config_hash(cfg);
    if (estimate_exists(dir)) {
        log << "loading estimate artifacts from " << dir << "\n";
        return load_estimate(dir, hash);
    }
    log << "estimating reduced state space (" << cfg.spaces.estimate_ivps << " IVPs)\n";
    Rng rng(cfg.stage_seeds().estimate);
    EstimateResult est = estimate_spaces(fom, cfg.space(), cfg.spaces, rng);
    persist_estimate(dir, est, hash);
    return est;
}

PacValidator ensure_validator(const RunConfig& cfg, const Heat2dModel& fom,
                              const EstimateResult& est, const fs::path& out, std::ostream& log) {
    const fs::path base = out / "pac" / "validator";
    const std::string hash = config_hash(cfg);
    if (fs::exists(base.string() + ".json") && fs::exists(base.string() + ".bin")) {
        ValidatorFileMeta meta;
        PacValidator v = load_validator(base, &meta);
        if (!meta.config_hash.empty() && meta.config_hash != hash) {
            throw ArtifactError("validator at " + base.string() +
                                " was produced under a different configuration");
        }
        log << "loaded validator (" << v.size() << " tests)\n";
        return v;
    }
    PacDesign design = cfg.pac;
    log << "building PAC validator ("
        << (design.s > 0 ? design.s : required_samples(design.epsilon, design.sigma))
        << " one-step tests)\n";
    Rng rng(cfg.stage_seeds().pac);
    PacValidator v = build_validator(cfg.space(), est.loosened, est.limits, est.basis, fom, design,
                                     rng, cfg.stage_seeds().pac);
    save_validator(base, v, {hash, canonical_config_text(cfg)});
    return v;
}

std::string iter_tag(Index iteration) {
    std::ostringstream os;
    os << std::setw(2) << std::setfill('0') << iteration;
    return os.str();
}

}  // namespace

void cmd_estimate(const fs::path& config_path, std::ostream& out) {
    const RunConfig cfg = load_run_config(config_path);
    const fs::path dir = resolve_output_dir(cfg) / "estimate";
    const Heat2dModel fom(cfg.fom);

    Rng rng(cfg.stage_seeds().estimate);
    const EstimateResult est = estimate_spaces(fom, cfg.space(), cfg.spaces, rng);
    persist_estimate(dir, est, config_hash(cfg));

    out << "snapshots: " << est.y_estimate.cols() << " states of dimension "
        << est.y_estimate.rows() << "\n";
    out << "singular values (top 5):";
    for (Index i = 0; i < std::min<Index>(5, est.basis.singular_values.size()); ++i) {
        out << ' ' << est.basis.singular_values[i];
    }
    out << "\nretained energy: " << est.basis.captured_energy() << "\n";
    const Vector widths = est.box.width();
    out << "box widths: min " << widths.minCoeff() << ", max " << widths.maxCoeff() << "\n";
    out << "trim limits: [" << est.limits.y_min << ", " << est.limits.y_max << "]\n";
    out << "trim acceptance (probe): " << est.probe_acceptance << "\n";
    out << "artifacts written to " << dir << "\n";
}

void cmd_train(const fs::path& config_path, const std::string& mode, std::ostream& out) {
    if (mode != "al" && mode != "conventional") {
        throw ConfigError("train: mode must be 'al' or 'conventional', got '" + mode + "'");
    }
    const RunConfig cfg = load_run_config(config_path);
    const fs::path base = resolve_output_dir(cfg);
    const std::string hash = config_hash(cfg);
    const std::string cfg_text = canonical_config_text(cfg);
    const Heat2dModel fom(cfg.fom);
    const ParameterSpace space = cfg.space();
    const StageSeeds seeds = cfg.stage_seeds();

    const EstimateResult est = ensure_estimate(cfg, fom, base, out);
    const PacValidator validator = ensure_validator(cfg, fom, est, base, out);

    if (mode == "conventional") {
        const fs::path dir = base / "conventional";
        TrainingConfig tcfg = cfg.training;
        tcfg.seed = seeds.training;
        Rng rng(seeds.baseline);
        out << "training conventional ROM (" << cfg.baseline_ivps << " DPS trajectories)\n";
        const BaselineResult result =
            run_conventional(fom, space, cfg.baseline_ivps, fom.step_count(),
                             cfg.spaces.reduced_dim, tcfg, validator, est.y_estimate,
                             cfg.tau_design, rng);

        RomFileMeta meta;
        meta.config_hash = hash;
        meta.config_text = cfg_text;
        meta.seed = seeds.baseline;
        meta.best_val_loss = result.history.best_val_loss;
        meta.training_epochs = result.history.epochs;
        meta.training_samples = result.training_pairs;
        save_rom(dir / "rom", *result.rom, meta);
        write_pac_report_json(dir / "report.json", result.report, hash);
        write_confidence_curve_csv(dir / "p_curve.csv", result.report);
        {
            std::ofstream csv(dir / "table.csv", std::ios::trunc);
            csv << "num_samples,one_minus_tau_bar,p_at_design\n"
                << std::setprecision(17) << result.training_pairs << ','
                << 1.0 - result.report.tau_bar << ',' << result.report.p_at_design << '\n';
        }
        out << "samples " << result.training_pairs << ", 1-tau_bar "
            << 1.0 - result.report.tau_bar << ", p(" << cfg.tau_design << ") "
            << result.report.p_at_design << "\n";
        out << "artifacts written to " << dir << "\n";
        return;
    }

    const fs::path dir = base / "al";
    fs::create_directories(dir);
    ActiveConfig acfg = cfg.active;
    acfg.tau_design = cfg.tau_design;

    std::vector<IterationRecord> records;
    IterationCallbacks callbacks;
    callbacks.on_record = [&](const IterationRecord& r) {
        records.push_back(r);
        out << "iteration " << r.iteration << ": samples " << r.sample_count << ", 1-tau_bar "
            << r.one_minus_tau_bar << ", p " << r.p_at_design << " (" << r.wall_seconds
            << " s)\n";
    };
    callbacks.on_checkpoint = [&](Index iteration, const RomBase& rom, const PacReport& report,
                                  const std::vector<Index>& selection) {
        if (const auto* eenn = dynamic_cast<const EennRom*>(&rom)) {
            RomFileMeta meta;
            meta.config_hash = hash;
            meta.config_text = cfg_text;
            meta.seed = seeds.root;
            meta.training_samples = static_cast<Index>(selection.size());
            save_rom(dir / ("rom_iter_" + iter_tag(iteration)), *eenn, meta);
        }
        write_pac_report_json(dir / ("pac_iter_" + iter_tag(iteration) + ".json"), report, hash);
        write_json_file(dir / ("selection_iter_" + iter_tag(iteration) + ".json"),
                        {{"iteration", iteration}, {"pool_indices", selection}});
    };

    // Persist the pool alongside the run for reproducibility.
    {
        Rng pool_rng(seeds.pool);
        const JointSet pool =
            build_pool(est.loosened, space, est.basis, est.limits, acfg.pool_size, pool_rng);
        save_matrix(dir / "pool_y_r.bin", pool.y_r, hash);
        save_matrix(dir / "pool_mu.bin", pool.mu, hash);
        write_json_file(dir / "pool.json", {{"count", pool.size()},
                                            {"acceptance_rate", pool.acceptance_rate},
                                            {"seed", seeds.pool},
                                            {"config_hash", hash}});
    }

    out << "running active learning (delta_s " << acfg.delta_s << ", pool " << acfg.pool_size
        << ")\n";
    try {
        const ActiveRunResult result = run_active_learning(fom, space, est, validator, acfg,
                                                           cfg.training, seeds, callbacks);
        write_history_csv(dir / "table.csv", result.history.records);
        write_history_json(dir / "history.json", result.history.records,
                           to_string(result.history.stop_reason), hash);
        if (const auto* eenn = dynamic_cast<const EennRom*>(result.best_rom.get())) {
            RomFileMeta meta;
            meta.config_hash = hash;
            meta.config_text = cfg_text;
            meta.seed = seeds.root;
            meta.training_samples = result.best_iteration * acfg.delta_s;
            save_rom(dir / "rom_best", *eenn, meta);
        }
        write_pac_report_json(dir / "pac_report_best.json", result.best_report, hash);
        write_confidence_curve_csv(dir / "p_curve_best.csv", result.best_report);
        out << "stop reason: " << to_string(result.history.stop_reason) << " (best iteration "
            << result.best_iteration << ", 1-tau_bar " << 1.0 - result.best_report.tau_bar
            << ")\n";
        out << "artifacts written to " << dir << "\n";
    } catch (...) {
        // Keep whatever iterations completed on disk for post-mortem runs.
        write_history_csv(dir / "table.csv", records);
        write_history_json(dir / "history.json", records, "aborted", hash);
        throw;
    }
}

void cmd_validate(const fs::path& rom_base, const fs::path& validator_base, double tau_design,
                  const fs::path& out_dir, std::ostream& out) {
    if (!(tau_design > 0.0 && tau_design < 1.0)) {
        throw ConfigError("validate: tau must be in (0,1)");
    }
    RomFileMeta rom_meta;
    const EennRom rom = load_rom(rom_base, &rom_meta);
    ValidatorFileMeta val_meta;
    const PacValidator validator = load_validator(validator_base, &val_meta);
    if (!rom_meta.config_hash.empty() && !val_meta.config_hash.empty() &&
        rom_meta.config_hash != val_meta.config_hash) {
        throw ArtifactError("validate: rom and validator come from different configurations");
    }

    const PacReport report = evaluate(validator, rom, tau_design);
    write_pac_report_json(out_dir / "pac_report.json", report, rom_meta.config_hash);
    write_confidence_curve_csv(out_dir / "p_curve.csv", report);
    out << "tests " << validator.size() << ", 1-tau_bar " << 1.0 - report.tau_bar << ", p("
        << tau_design << ") " << report.p_at_design << "\n";
    out << "report written to " << out_dir << "\n";
}

void cmd_predict(const fs::path& rom_base, const fs::path& scenario_path, const fs::path& out_dir,
                 std::ostream& out) {
    RomFileMeta rom_meta;
    const EennRom rom = load_rom(rom_base, &rom_meta);
    if (rom_meta.config_text.empty()) {
        throw ArtifactError("predict: rom file carries no embedded configuration");
    }
    const RunConfig cfg = parse_run_config(rom_meta.config_text);
    const Heat2dModel fom(cfg.fom);

    const json scenario = read_json_file(scenario_path);
    for (const auto& [key, _] : scenario.items()) {
        if (key != "schedule" && key != "constant" && key != "monitor_cells" &&
            key != "with_reference") {
            throw ConfigError("scenario: unknown key '" + key + "'");
        }
    }

    ParameterSchedule schedule = [&]() -> ParameterSchedule {
        if (scenario.contains("constant")) {
            const auto values = scenario.at("constant").get<std::vector<double>>();
            const Vector mu =
                Eigen::Map<const Vector>(values.data(), static_cast<Index>(values.size()));
            return ParameterSchedule::constant(mu, fom.start_time(), fom.end_time());
        }
        if (!scenario.contains("schedule")) {
            throw ConfigError("scenario: needs either 'constant' or 'schedule'");
        }
        const json& sched = scenario.at("schedule");
        const auto times = sched.at("times").get<std::vector<double>>();
        const auto rows = sched.at("values").get<std::vector<std::vector<double>>>();
        if (rows.size() != times.size()) {
            throw ConfigError("scenario: schedule times/values length mismatch");
        }
        Matrix values(fom.parameter_dim(), static_cast<Index>(times.size()));
        for (std::size_t k = 0; k < rows.size(); ++k) {
            if (static_cast<Index>(rows[k].size()) != fom.parameter_dim()) {
                throw ConfigError("scenario: each knot needs " +
                                  std::to_string(fom.parameter_dim()) + " values");
            }
            values.col(static_cast<Index>(k)) =
                Eigen::Map<const Vector>(rows[k].data(), fom.parameter_dim());
        }
        return ParameterSchedule(times, std::move(values));
    }();
    if (!schedule.covers(fom.start_time(), fom.end_time())) {
        throw ConfigError("scenario: schedule does not cover the model time grid");
    }

    const ParameterSpace space = cfg.space();
    bool extrapolation = false;
    for (Index j = 0; j < schedule.knot_count(); ++j) {
        if (!space.contains(schedule.knot_values().col(j))) extrapolation = true;
    }
    if (extrapolation) {
        out << "warning: schedule leaves the training parameter box (extrapolating)\n";
    }

    std::vector<Index> cells;
    if (scenario.contains("monitor_cells")) {
        cells = scenario.at("monitor_cells").get<std::vector<Index>>();
        for (Index c : cells) {
            if (c < 0 || c >= fom.state_dim()) {
                throw ConfigError("scenario: monitor cell " + std::to_string(c) +
                                  " outside the state vector");
            }
        }
    }
    const bool with_reference = scenario.value("with_reference", false);

    const Index k = fom.step_count();
    const Vector y0 = fom.initial_state();
    const Matrix traj_r = rollout(rom, rom.basis().project(y0), schedule, k);
    const Matrix lifted = rom.basis().reconstruct(traj_r);

    Matrix reference;
    if (with_reference) reference = fom.solve_ivp(schedule);

    fs::create_directories(out_dir);
    const auto times = fom.time_grid();
    {
        std::ofstream csv(out_dir / "trajectory.csv", std::ios::trunc);
        csv << "t";
        for (Index c : cells) csv << ",rom_cell_" << c;
        if (with_reference) {
            for (Index c : cells) csv << ",ref_cell_" << c;
        }
        csv << "\n" << std::setprecision(17);
        for (Index i = 0; i <= k; ++i) {
            csv << times[static_cast<std::size_t>(i)];
            for (Index c : cells) csv << ',' << lifted(c, i);
            if (with_reference) {
                for (Index c : cells) csv << ',' << reference(c, i);
            }
            csv << '\n';
        }
    }

    json summary{{"extrapolation", extrapolation},
                 {"monitor_cells", cells},
                 {"steps", k}};
    if (with_reference) {
        const double err = trajectory_relative_error(lifted.rightCols(k), reference.rightCols(k));
        summary["trajectory_relative_error"] = err;
        out << "trajectory relative error: " << err << "\n";

        const int grid = cfg.fom.grid;
        std::ofstream csv(out_dir / "error_field.csv", std::ios::trunc);
        csv << "ix,iy,x,y,abs_error\n" << std::setprecision(17);
        for (int iy = 0; iy < grid; ++iy) {
            for (int ix = 0; ix < grid; ++ix) {
                const Index c = static_cast<Index>(iy) * grid + ix;
                csv << ix << ',' << iy << ',' << (ix + 0.5) * cfg.fom.dx() << ','
                    << (iy + 0.5) * cfg.fom.dx() << ','
                    << std::abs(lifted(c, k) - reference(c, k)) << '\n';
            }
        }
    }
    write_json_file(out_dir / "summary.json", summary);
    out << "outputs written to " << out_dir << "\n";
}

void cmd_report(const fs::path& run_dir, std::ostream& out) {
    const std::vector<fs::path> required = {
        run_dir / "estimate" / "y_estimate.bin", run_dir / "estimate" / "basis.bin",
        run_dir / "estimate" / "singular_values.bin", run_dir / "estimate" / "box.json",
        run_dir / "al" / "history.json"};
    std::vector<std::string> missing;
    for (const auto& p : required) {
        if (!fs::exists(p)) missing.push_back(p.string());
    }
    if (!missing.empty()) {
        std::ostringstream os;
        os << "report: missing artifacts:";
        for (const auto& m : missing) os << "\n  " << m;
        throw ArtifactError(os.str());
    }

    const json box = read_json_file(run_dir / "estimate" / "box.json");
    const json history = read_json_file(run_dir / "al" / "history.json");
    const Vector spectrum = load_matrix(run_dir / "estimate" / "singular_values.bin");

    const fs::path dir = run_dir / "report";
    fs::create_directories(dir);

    {
        std::ofstream csv(dir / "spectrum.csv", std::ios::trunc);
        csv << "index,singular_value\n" << std::setprecision(17);
        for (Index i = 0; i < spectrum.size(); ++i) csv << i << ',' << spectrum[i] << '\n';
    }
    if (fs::exists(run_dir / "al" / "table.csv")) {
        fs::copy_file(run_dir / "al" / "table.csv", dir / "convergence.csv",
                      fs::copy_options::overwrite_existing);
    }

    std::ofstream md(dir / "report.md", std::ios::trunc);
    md << "# Run report\n\n";
    md << "- config hash: " << box.value("config_hash", "(unknown)") << "\n";
    md << "- estimation snapshots: " << box.value("snapshot_count", Index{0}) << "\n";
    md << "- reduced dimension: " << box.value("reduced_dim", Index{0}) << "\n";
    md << "- trim acceptance (probe): " << box.value("probe_acceptance", 0.0) << "\n";
    md << "- trim limits: [" << box.at("trim").at("y_min").get<double>() << ", "
       << box.at("trim").at("y_max").get<double>() << "]\n";
    md << "- stop reason: " << history.value("stop_reason", "(unknown)") << "\n\n";

    md << "## Convergence\n\n";
    md << "| iteration | samples | 1 - tau_bar | p at design |\n";
    md << "|---|---|---|---|\n";
    for (const auto& r : history.at("records")) {
        md << "| " << r.at("iteration").get<Index>() << " | " << r.at("num_samples").get<Index>()
           << " | " << r.at("one_minus_tau_bar").get<double>() << " | "
           << r.at("p_at_design").get<double>() << " |\n";
    }

    if (fs::exists(run_dir / "conventional" / "report.json")) {
        const json conv = read_json_file(run_dir / "conventional" / "report.json");
        md << "\n## Conventional baseline\n\n";
        md << "- 1 - tau_bar: " << conv.value("one_minus_tau_bar", 0.0) << "\n";
        md << "- p at design: " << conv.value("p_at_design", 0.0) << "\n";
    }

    md << "\n## Checkpoints\n\n";
    std::vector<std::string> checkpoints;
    if (fs::exists(run_dir / "al")) {
        for (const auto& entry : fs::directory_iterator(run_dir / "al")) {
            const std::string name = entry.path().filename().string();
            if (name.rfind("rom_iter_", 0) == 0 && entry.path().extension() == ".json") {
                checkpoints.push_back(entry.path().string());
            }
        }
    }
    std::sort(checkpoints.begin(), checkpoints.end());
    for (const auto& c : checkpoints) md << "- " << c << "\n";

    md << "\n## Spectrum\n\nsee spectrum.csv (" << spectrum.size() << " values)\n";
    out << "report written to " << dir << "\n";
}

}  // namespace alrom::cli
