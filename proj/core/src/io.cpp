#include "alrom/io.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

static_assert(std::endian::native == std::endian::little,
              "matrix artifacts are defined little-endian");

namespace alrom {

using nlohmann::json;

std::uint64_t fnv1a64(const void* data, std::size_t size) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (std::size_t i = 0; i < size; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string checksum_bytes(const void* data, std::size_t size) {
    std::ostringstream os;
    os << "fnv1a64:" << std::hex << std::setw(16) << std::setfill('0') << fnv1a64(data, size);
    return os.str();
}

namespace {

void write_file(const std::filesystem::path& path, const void* data, std::size_t size) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ArtifactError("cannot open for writing: " + path.string());
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
    if (!out) throw ArtifactError("write failed: " + path.string());
}

std::vector<char> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) throw ArtifactError("missing artifact: " + path.string());
    const auto size = in.tellg();
    in.seekg(0);
    std::vector<char> bytes(static_cast<std::size_t>(size));
    in.read(bytes.data(), size);
    if (!in) throw ArtifactError("read failed: " + path.string());
    return bytes;
}

void write_json_file(const std::filesystem::path& path, const json& j) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ArtifactError("cannot open for writing: " + path.string());
    out << j.dump(2) << "\n";
}

json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ArtifactError("missing artifact: " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ArtifactError("corrupt JSON in " + path.string() + ": " + e.what());
    }
}

json sidecar_for(const Matrix& m, const std::string& config_hash) {
    json j{{"format", "alrom-matrix"},
           {"version", 1},
           {"rows", m.rows()},
           {"cols", m.cols()},
           {"layout", "column-major"},
           {"dtype", "float64-le"},
           {"checksum", checksum_bytes(m.data(), sizeof(double) * static_cast<std::size_t>(m.size()))}};
    if (!config_hash.empty()) j["config_hash"] = config_hash;
    return j;
}

// A .bin payload of concatenated sections plus the json section table.
struct Container {
    std::vector<char> payload;
    json sections = json::array();

    void add(const std::string& name, const Matrix& m) {
        sections.push_back({{"name", name},
                            {"rows", m.rows()},
                            {"cols", m.cols()},
                            {"offset", payload.size()}});
        const std::size_t bytes = sizeof(double) * static_cast<std::size_t>(m.size());
        const auto* p = reinterpret_cast<const char*>(m.data());
        payload.insert(payload.end(), p, p + bytes);
    }
};

Matrix extract_section(const std::vector<char>& payload, const json& sections,
                       const std::string& name) {
    for (const auto& s : sections) {
        if (s.at("name").get<std::string>() != name) continue;
        const auto rows = s.at("rows").get<Index>();
        const auto cols = s.at("cols").get<Index>();
        const auto offset = s.at("offset").get<std::size_t>();
        const std::size_t bytes = sizeof(double) * static_cast<std::size_t>(rows * cols);
        if (offset + bytes > payload.size()) {
            throw ArtifactError("section '" + name + "' exceeds payload");
        }
        Matrix m(rows, cols);
        std::memcpy(m.data(), payload.data() + offset, bytes);
        return m;
    }
    throw ArtifactError("section '" + name + "' not found");
}

void save_container(const std::filesystem::path& base, Container&& c, json meta) {
    meta["sections"] = std::move(c.sections);
    meta["payload_checksum"] = checksum_bytes(c.payload.data(), c.payload.size());
    meta["payload_bytes"] = c.payload.size();
    write_file(std::filesystem::path(base.string() + ".bin"), c.payload.data(), c.payload.size());
    write_json_file(std::filesystem::path(base.string() + ".json"), meta);
}

std::pair<std::vector<char>, json> load_container(const std::filesystem::path& base) {
    const json meta = read_json_file(std::filesystem::path(base.string() + ".json"));
    auto payload = read_file(std::filesystem::path(base.string() + ".bin"));
    if (payload.size() != meta.at("payload_bytes").get<std::size_t>()) {
        throw ArtifactError(base.string() + ".bin: payload size mismatch");
    }
    if (checksum_bytes(payload.data(), payload.size()) !=
        meta.at("payload_checksum").get<std::string>()) {
        throw ArtifactError(base.string() + ".bin: checksum mismatch");
    }
    return {std::move(payload), meta};
}

}  // namespace

void save_matrix(const std::filesystem::path& path, const Matrix& m,
                 const std::string& config_hash) {
    write_file(path, m.data(), sizeof(double) * static_cast<std::size_t>(m.size()));
    write_json_file(std::filesystem::path(path.string() + ".json"), sidecar_for(m, config_hash));
}

Matrix load_matrix(const std::filesystem::path& path, std::string* config_hash_out) {
    const json meta = read_json_file(std::filesystem::path(path.string() + ".json"));
    const auto rows = meta.at("rows").get<Index>();
    const auto cols = meta.at("cols").get<Index>();
    const auto bytes = read_file(path);
    if (bytes.size() != sizeof(double) * static_cast<std::size_t>(rows * cols)) {
        throw ArtifactError(path.string() + ": payload length does not match sidecar");
    }
    if (checksum_bytes(bytes.data(), bytes.size()) != meta.at("checksum").get<std::string>()) {
        throw ArtifactError(path.string() + ": checksum mismatch");
    }
    if (config_hash_out) *config_hash_out = meta.value("config_hash", "");
    Matrix m(rows, cols);
    std::memcpy(m.data(), bytes.data(), bytes.size());
    return m;
}

void save_rom(const std::filesystem::path& base, const EennRom& rom, const RomFileMeta& meta) {
    Container c;
    c.add("basis", rom.basis().V);
    c.add("singular_values", rom.basis().singular_values);
    c.add("normalizer_shift", rom.normalizer().shift);
    c.add("normalizer_scale", rom.normalizer().scale);
    c.add("output_scale", rom.output_scale());
    const auto& net = rom.net();
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
        c.add("w" + std::to_string(l), net.weights[l]);
        c.add("b" + std::to_string(l), net.biases[l]);
    }

    json sizes = json::array();
    for (Index s : net.layer_sizes()) sizes.push_back(s);
    json j{{"format", "alrom-rom"},
           {"version", 1},
           {"kind", meta.kind},
           {"dt", rom.dt()},
           {"layer_sizes", sizes},
           {"reduced_dim", rom.basis().dim()},
           {"state_dim", rom.basis().full_dim()},
           {"seed", meta.seed},
           {"training",
            {{"best_val_loss", meta.best_val_loss},
             {"epochs", meta.training_epochs},
             {"samples", meta.training_samples}}}};
    if (!meta.config_hash.empty()) j["config_hash"] = meta.config_hash;
    if (!meta.config_text.empty()) j["config"] = json::parse(meta.config_text);
    save_container(base, std::move(c), std::move(j));
}

EennRom load_rom(const std::filesystem::path& base, RomFileMeta* meta_out) {
    auto [payload, meta] = load_container(base);
    if (meta.value("format", "") != "alrom-rom") {
        throw ArtifactError(base.string() + ": not a rom artifact");
    }
    const json& sections = meta.at("sections");

    ReducedBasis basis;
    basis.V = extract_section(payload, sections, "basis");
    basis.singular_values = extract_section(payload, sections, "singular_values");

    InputNormalizer norm;
    norm.shift = extract_section(payload, sections, "normalizer_shift");
    norm.scale = extract_section(payload, sections, "normalizer_scale");

    MlpNetwork net;
    const auto sizes = meta.at("layer_sizes");
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        net.weights.push_back(extract_section(payload, sections, "w" + std::to_string(l)));
        net.biases.push_back(extract_section(payload, sections, "b" + std::to_string(l)));
    }

    if (meta_out) {
        meta_out->config_hash = meta.value("config_hash", "");
        meta_out->config_text = meta.contains("config") ? meta["config"].dump() : "";
        meta_out->seed = meta.value("seed", std::uint64_t{0});
        meta_out->kind = meta.value("kind", "eenn");
        if (meta.contains("training")) {
            meta_out->best_val_loss = meta["training"].value("best_val_loss", 0.0);
            meta_out->training_epochs = meta["training"].value("epochs", Index{0});
            meta_out->training_samples = meta["training"].value("samples", Index{0});
        }
    }
    return EennRom(std::move(basis), std::move(net), std::move(norm),
                   extract_section(payload, sections, "output_scale"),
                   meta.at("dt").get<double>());
}

void save_validator(const std::filesystem::path& base, const PacValidator& validator,
                    const ValidatorFileMeta& meta) {
    Container c;
    c.add("y_r0", validator.y_r0);
    c.add("mu", validator.mu);
    c.add("lifted", validator.lifted);
    c.add("refs", validator.refs);
    json j{{"format", "alrom-validator"},
           {"version", 1},
           {"epsilon", validator.design.epsilon},
           {"sigma", validator.design.sigma},
           {"s", validator.design.s},
           {"seed", validator.seed},
           {"acceptance_rate", validator.acceptance_rate}};
    if (!meta.config_hash.empty()) j["config_hash"] = meta.config_hash;
    if (!meta.config_text.empty()) j["config"] = json::parse(meta.config_text);
    save_container(base, std::move(c), std::move(j));
}

PacValidator load_validator(const std::filesystem::path& base, ValidatorFileMeta* meta_out) {
    auto [payload, meta] = load_container(base);
    if (meta.value("format", "") != "alrom-validator") {
        throw ArtifactError(base.string() + ": not a validator artifact");
    }
    const json& sections = meta.at("sections");
    PacValidator v;
    v.design.epsilon = meta.at("epsilon").get<double>();
    v.design.sigma = meta.at("sigma").get<double>();
    v.design.s = meta.at("s").get<Index>();
    v.seed = meta.value("seed", std::uint64_t{0});
    v.acceptance_rate = meta.value("acceptance_rate", 1.0);
    v.y_r0 = extract_section(payload, sections, "y_r0");
    v.mu = extract_section(payload, sections, "mu");
    v.lifted = extract_section(payload, sections, "lifted");
    v.refs = extract_section(payload, sections, "refs");
    if (meta_out) {
        meta_out->config_hash = meta.value("config_hash", "");
        meta_out->config_text = meta.contains("config") ? meta["config"].dump() : "";
    }
    return v;
}

void write_pac_report_json(const std::filesystem::path& path, const PacReport& report,
                           const std::string& config_hash) {
    Vector sorted = report.errors;
    std::sort(sorted.begin(), sorted.end());
    auto quantile = [&](double q) {
        const Index i = std::min<Index>(sorted.size() - 1,
                                        static_cast<Index>(q * static_cast<double>(sorted.size())));
        return sorted[i];
    };
    json j{{"tau_design", report.tau_design},
           {"p_at_design", report.p_at_design},
           {"tau_bar", report.tau_bar},
           {"one_minus_tau_bar", 1.0 - report.tau_bar},
           {"eta", report.eta},
           {"tests", report.errors.size()},
           {"error_quantiles",
            {{"q50", quantile(0.50)}, {"q90", quantile(0.90)}, {"q99", quantile(0.99)},
             {"max", sorted[sorted.size() - 1]}}}};
    if (!config_hash.empty()) j["config_hash"] = config_hash;
    write_json_file(path, j);
}

void write_confidence_curve_csv(const std::filesystem::path& path, const PacReport& report) {
    Vector sorted = report.errors;
    std::sort(sorted.begin(), sorted.end());
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ArtifactError("cannot open for writing: " + path.string());
    out << "tau,p\n";
    out << std::setprecision(17);
    for (Index i = 0; i < sorted.size(); ++i) {
        out << sorted[i] << ',' << static_cast<double>(i + 1) / static_cast<double>(sorted.size())
            << '\n';
    }
}

void write_history_csv(const std::filesystem::path& path,
                       const std::vector<IterationRecord>& records) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ArtifactError("cannot open for writing: " + path.string());
    out << "iteration,num_samples,one_minus_tau_bar,p_at_design\n";
    out << std::setprecision(17);
    for (const auto& r : records) {
        out << r.iteration << ',' << r.sample_count << ',' << r.one_minus_tau_bar << ','
            << r.p_at_design << '\n';
    }
}

void write_history_json(const std::filesystem::path& path,
                        const std::vector<IterationRecord>& records,
                        const std::string& stop_reason, const std::string& config_hash) {
    json recs = json::array();
    for (const auto& r : records) {
        recs.push_back({{"iteration", r.iteration},
                        {"num_samples", r.sample_count},
                        {"one_minus_tau_bar", r.one_minus_tau_bar},
                        {"p_at_design", r.p_at_design},
                        {"training_best_val_loss", r.training_best_val_loss},
                        {"training_epochs", r.training_epochs},
                        {"basis_sigma_max", r.basis_sigma_max},
                        {"basis_sigma_min_retained", r.basis_sigma_min_retained},
                        {"basis_energy", r.basis_energy},
                        {"gpr_lengthscale", r.gpr_lengthscale},
                        {"wall_seconds", r.wall_seconds}});
    }
    json j{{"records", std::move(recs)}, {"stop_reason", stop_reason}};
    if (!config_hash.empty()) j["config_hash"] = config_hash;
    write_json_file(path, j);
}

}  // namespace alrom
