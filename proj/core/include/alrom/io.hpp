#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "alrom/active.hpp"
#include "alrom/rom.hpp"
#include "alrom/types.hpp"
#include "alrom/validator.hpp"

namespace alrom {

/// FNV-1a over a byte range, rendered as "fnv1a64:<hex>".
std::string checksum_bytes(const void* data, std::size_t size);
std::uint64_t fnv1a64(const void* data, std::size_t size);

/// Matrix artifact: `<path>` holds the column-major float64 little-endian
/// payload, `<path>.json` the sidecar (rows, cols, layout, dtype, checksum,
/// optional config_hash). Loading verifies sizes and checksum.
void save_matrix(const std::filesystem::path& path, const Matrix& m,
                 const std::string& config_hash = "");
Matrix load_matrix(const std::filesystem::path& path, std::string* config_hash_out = nullptr);

/// Multi-section binary container used by the ROM and validator files:
/// `<base>.bin` concatenates named column-major matrices; `<base>.json`
/// carries the section table, a whole-payload checksum, and caller metadata.
struct NamedMatrix {
    std::string name;
    Matrix value;
};

struct RomFileMeta {
    std::string config_hash;
    std::string config_text;  // full run configuration, echoed verbatim
    std::uint64_t seed = 0;
    double best_val_loss = 0.0;
    Index training_epochs = 0;
    Index training_samples = 0;
    std::string kind = "eenn";
};

void save_rom(const std::filesystem::path& base, const EennRom& rom, const RomFileMeta& meta);
EennRom load_rom(const std::filesystem::path& base, RomFileMeta* meta_out = nullptr);

struct ValidatorFileMeta {
    std::string config_hash;
    std::string config_text;
};

void save_validator(const std::filesystem::path& base, const PacValidator& validator,
                    const ValidatorFileMeta& meta);
PacValidator load_validator(const std::filesystem::path& base,
                            ValidatorFileMeta* meta_out = nullptr);

/// PAC report as JSON (summary + error quantiles) and the full tau -> p
/// curve as CSV rows of sorted error levels.
void write_pac_report_json(const std::filesystem::path& path, const PacReport& report,
                           const std::string& config_hash);
void write_confidence_curve_csv(const std::filesystem::path& path, const PacReport& report);

/// Convergence table mirroring the run history (iteration, num_samples,
/// one_minus_tau_bar, p_at_design).
void write_history_csv(const std::filesystem::path& path,
                       const std::vector<IterationRecord>& records);
void write_history_json(const std::filesystem::path& path,
                        const std::vector<IterationRecord>& records, const std::string& stop_reason,
                        const std::string& config_hash);

}  // namespace alrom
