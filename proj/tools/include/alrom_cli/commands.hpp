#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

namespace alrom::cli {

/// Subcommand bodies; each throws ConfigError / NumericalError /
/// ArtifactError on failure (main maps these to exit codes 2 / 3 / 4).
/// Progress and summaries go to `out`.

void cmd_estimate(const std::filesystem::path& config_path, std::ostream& out);

void cmd_train(const std::filesystem::path& config_path, const std::string& mode,
               std::ostream& out);

void cmd_validate(const std::filesystem::path& rom_base, const std::filesystem::path& validator_base,
                  double tau_design, const std::filesystem::path& out_dir, std::ostream& out);

void cmd_predict(const std::filesystem::path& rom_base, const std::filesystem::path& scenario_path,
                 const std::filesystem::path& out_dir, std::ostream& out);

void cmd_report(const std::filesystem::path& run_dir, std::ostream& out);

}  // namespace alrom::cli
