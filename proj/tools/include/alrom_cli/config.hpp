#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "alrom/active.hpp"
#include "alrom/fom.hpp"
#include "alrom/rom.hpp"
#include "alrom/validator.hpp"

namespace alrom::cli {

/// One run configuration file (JSON, versioned, unknown keys rejected).
/// Every stage of a run draws its randomness from `seed` through fixed
/// per-stage derivations, so stages are independently reproducible.
struct RunConfig {
    int version = 1;
    std::uint64_t seed = 0;
    std::string output_dir;

    HeatModelConfig fom;
    Vector mu_lower;
    Vector mu_upper;
    SpacesConfig spaces;

    PacDesign pac;
    double tau_design = 0.01;

    ActiveConfig active;
    TrainingConfig training;
    Index baseline_ivps = 50;

    ParameterSpace space() const { return ParameterSpace(mu_lower, mu_upper); }
    StageSeeds stage_seeds() const { return StageSeeds::from_root(seed); }

    void validate() const;
};

RunConfig load_run_config(const std::filesystem::path& path);
RunConfig parse_run_config(const std::string& text);

/// Canonical serialized form (sorted keys) and its hash; the hash is stamped
/// into every artifact so mixed-config combinations can be refused.
std::string canonical_config_text(const RunConfig& cfg);
std::string config_hash(const RunConfig& cfg);

/// Resolved output directory: ALROM_OUTPUT_DIR overrides the config value.
std::filesystem::path resolve_output_dir(const RunConfig& cfg);

}  // namespace alrom::cli
