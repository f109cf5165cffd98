#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "alrom/types.hpp"
#include "alrom_cli/commands.hpp"

namespace {

void print_error(const std::string& type, const std::string& message) {
    std::cerr << nlohmann::json{{"error", {{"type", type}, {"message", message}}}}.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Validated reduced-order models of a parametrized simulator via "
                 "active learning, with a PAC validator and a conventional baseline"};
    app.require_subcommand(1);

    std::string config_path;
    std::string mode = "al";
    std::string rom_path, validator_path, scenario_path, out_dir = ".", run_dir;
    double tau = 0.01;

    auto* estimate = app.add_subcommand("estimate", "Estimate the reduced state space");
    estimate->add_option("--config", config_path, "Run configuration file")->required();

    auto* train = app.add_subcommand("train", "Train a ROM (active learning or conventional)");
    train->add_option("--config", config_path, "Run configuration file")->required();
    train->add_option("--mode", mode, "'al' or 'conventional'");

    auto* validate = app.add_subcommand("validate", "Score a ROM on a persisted PAC validator");
    validate->add_option("--rom", rom_path, "ROM artifact base path (without extension)")
        ->required();
    validate->add_option("--validator", validator_path, "Validator artifact base path")
        ->required();
    validate->add_option("--tau", tau, "Design one-step error level");
    validate->add_option("--out", out_dir, "Output directory");

    auto* predict = app.add_subcommand("predict", "Roll a ROM over a scenario");
    predict->add_option("--rom", rom_path, "ROM artifact base path (without extension)")
        ->required();
    predict->add_option("--scenario", scenario_path, "Scenario JSON file")->required();
    predict->add_option("--out", out_dir, "Output directory");

    auto* report = app.add_subcommand("report", "Consolidate a run directory into a report");
    report->add_option("--run-dir", run_dir, "Run output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return 2;
    }

    try {
        if (*estimate) alrom::cli::cmd_estimate(config_path, std::cout);
        if (*train) alrom::cli::cmd_train(config_path, mode, std::cout);
        if (*validate) alrom::cli::cmd_validate(rom_path, validator_path, tau, out_dir, std::cout);
        if (*predict) alrom::cli::cmd_predict(rom_path, scenario_path, out_dir, std::cout);
        if (*report) alrom::cli::cmd_report(run_dir, std::cout);
        return 0;
    } catch (const alrom::ConfigError& e) {
        print_error("config", e.what());
        return 2;
    } catch (const alrom::ArtifactError& e) {
        print_error("artifact", e.what());
        return 4;
    } catch (const alrom::NumericalError& e) {
        print_error("numerical", e.what());
        return 3;
    } catch (const std::invalid_argument& e) {
        print_error("numerical", e.what());
        return 3;
    } catch (const std::exception& e) {
        print_error("internal", e.what());
        return 1;
    }
}
