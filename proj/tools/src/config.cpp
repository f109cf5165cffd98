#include "alrom_cli/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>

#include <json.hpp>

#include "alrom/io.hpp"

namespace alrom::cli {

using nlohmann::json;

namespace {

void reject_unknown_keys(const json& obj, const std::string& section,
                         const std::set<std::string>& allowed) {
    for (const auto& [key, _] : obj.items()) {
        if (!allowed.contains(key)) {
            throw ConfigError("unknown key '" + key + "' in section '" + section + "'");
        }
    }
}

const json* find(const json& obj, const std::string& key) {
    const auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
}

template <typename T>
T get_required(const json& obj, const std::string& section, const std::string& key) {
    const json* v = find(obj, key);
    if (!v) throw ConfigError("missing field '" + section + "." + key + "'");
    try {
        return v->get<T>();
    } catch (const json::exception&) {
        throw ConfigError("field '" + section + "." + key + "' has the wrong type");
    }
}

template <typename T>
void get_optional(const json& obj, const std::string& section, const std::string& key, T& out) {
    const json* v = find(obj, key);
    if (!v) return;
    try {
        out = v->get<T>();
    } catch (const json::exception&) {
        throw ConfigError("field '" + section + "." + key + "' has the wrong type");
    }
}

Vector get_vector(const json& obj, const std::string& section, const std::string& key) {
    const auto values = get_required<std::vector<double>>(obj, section, key);
    return Eigen::Map<const Vector>(values.data(), static_cast<Index>(values.size()));
}

}  // namespace

RunConfig parse_run_config(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!root.is_object()) throw ConfigError("config root must be a JSON object");
    reject_unknown_keys(root, "<root>",
                        {"version", "seed", "output_dir", "fom", "spaces", "pac", "active",
                         "training", "baseline"});

    RunConfig cfg;
    cfg.version = get_required<int>(root, "<root>", "version");
    if (cfg.version != 1) throw ConfigError("unsupported config version");
    cfg.seed = get_required<std::uint64_t>(root, "<root>", "seed");
    cfg.output_dir = get_required<std::string>(root, "<root>", "output_dir");

    if (const json* fom = find(root, "fom")) {
        reject_unknown_keys(*fom, "fom",
                            {"grid", "kx", "ky", "side", "t0", "t_end", "steps",
                             "initial_temperature"});
        get_optional(*fom, "fom", "grid", cfg.fom.grid);
        get_optional(*fom, "fom", "kx", cfg.fom.kx);
        get_optional(*fom, "fom", "ky", cfg.fom.ky);
        get_optional(*fom, "fom", "side", cfg.fom.side);
        get_optional(*fom, "fom", "t0", cfg.fom.t0);
        get_optional(*fom, "fom", "t_end", cfg.fom.t_end);
        get_optional(*fom, "fom", "steps", cfg.fom.steps);
        get_optional(*fom, "fom", "initial_temperature", cfg.fom.initial_temperature);
    }

    const json* spaces = find(root, "spaces");
    if (!spaces) throw ConfigError("missing field 'spaces'");
    reject_unknown_keys(*spaces, "spaces",
                        {"mu_lower", "mu_upper", "reduced_dim", "beta", "estimate_ivps", "trim"});
    cfg.mu_lower = get_vector(*spaces, "spaces", "mu_lower");
    cfg.mu_upper = get_vector(*spaces, "spaces", "mu_upper");
    get_optional(*spaces, "spaces", "reduced_dim", cfg.spaces.reduced_dim);
    get_optional(*spaces, "spaces", "beta", cfg.spaces.beta);
    get_optional(*spaces, "spaces", "estimate_ivps", cfg.spaces.estimate_ivps);
    if (const json* trim = find(*spaces, "trim")) {
        reject_unknown_keys(*trim, "spaces.trim", {"mode", "y_min", "y_max"});
        const auto mode = get_required<std::string>(*trim, "spaces.trim", "mode");
        if (mode == "from-estimate") {
            cfg.spaces.trim_from_estimate = true;
        } else if (mode == "empirical") {
            cfg.spaces.trim_from_estimate = false;
            cfg.spaces.trim_y_min = get_required<double>(*trim, "spaces.trim", "y_min");
            cfg.spaces.trim_y_max = get_required<double>(*trim, "spaces.trim", "y_max");
        } else {
            throw ConfigError("spaces.trim.mode must be 'from-estimate' or 'empirical'");
        }
    }

    if (const json* pac = find(root, "pac")) {
        reject_unknown_keys(*pac, "pac", {"epsilon", "sigma", "tau_design", "s"});
        get_optional(*pac, "pac", "epsilon", cfg.pac.epsilon);
        get_optional(*pac, "pac", "sigma", cfg.pac.sigma);
        get_optional(*pac, "pac", "s", cfg.pac.s);
        get_optional(*pac, "pac", "tau_design", cfg.tau_design);
    }

    if (const json* active = find(root, "active")) {
        reject_unknown_keys(*active, "active",
                            {"pool_size", "delta_s", "delta_tau_tol", "max_iterations"});
        get_optional(*active, "active", "pool_size", cfg.active.pool_size);
        get_optional(*active, "active", "delta_s", cfg.active.delta_s);
        get_optional(*active, "active", "delta_tau_tol", cfg.active.delta_tau_tol);
        get_optional(*active, "active", "max_iterations", cfg.active.max_iterations);
    }

    if (const json* training = find(root, "training")) {
        reject_unknown_keys(*training, "training",
                            {"max_epochs", "batch_size", "learning_rate", "lr_decay",
                             "lr_patience", "early_stop_patience", "validation_split", "loss_tol",
                             "hidden_sizes"});
        get_optional(*training, "training", "max_epochs", cfg.training.max_epochs);
        get_optional(*training, "training", "batch_size", cfg.training.batch_size);
        get_optional(*training, "training", "learning_rate", cfg.training.learning_rate);
        get_optional(*training, "training", "lr_decay", cfg.training.lr_decay);
        get_optional(*training, "training", "lr_patience", cfg.training.lr_patience);
        get_optional(*training, "training", "early_stop_patience",
                     cfg.training.early_stop_patience);
        get_optional(*training, "training", "validation_split", cfg.training.validation_split);
        get_optional(*training, "training", "loss_tol", cfg.training.loss_tol);
        std::vector<Index> hidden;
        get_optional(*training, "training", "hidden_sizes", hidden);
        if (!hidden.empty()) cfg.training.hidden_sizes = hidden;
    }

    if (const json* baseline = find(root, "baseline")) {
        reject_unknown_keys(*baseline, "baseline", {"ivps"});
        get_optional(*baseline, "baseline", "ivps", cfg.baseline_ivps);
    }

    cfg.validate();
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_run_config(text);
}

void RunConfig::validate() const {
    if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
    fom.validate();
    if (mu_lower.size() != mu_upper.size() || mu_lower.size() < 1) {
        throw ConfigError("spaces.mu_lower/mu_upper must be non-empty and equally sized");
    }
    for (Index i = 0; i < mu_lower.size(); ++i) {
        if (!(mu_lower[i] <= mu_upper[i])) {
            throw ConfigError("spaces.mu_lower exceeds mu_upper at component " +
                              std::to_string(i));
        }
    }
    spaces.validate();
    pac.validate();
    if (!(tau_design > 0 && tau_design < 1)) throw ConfigError("pac.tau_design must be in (0,1)");
    active.validate();
    training.validate();
    if (baseline_ivps < 1) throw ConfigError("baseline.ivps must be >= 1");
    const Index est_cols = spaces.estimate_ivps * (static_cast<Index>(fom.steps) + 1);
    const Index max_dim = std::min<Index>(static_cast<Index>(fom.grid) * fom.grid, est_cols);
    if (spaces.reduced_dim > max_dim) {
        throw ConfigError("spaces.reduced_dim exceeds the estimation snapshot rank bound");
    }
}

std::string canonical_config_text(const RunConfig& cfg) {
    json j;
    j["version"] = cfg.version;
    j["seed"] = cfg.seed;
    j["output_dir"] = cfg.output_dir;
    j["fom"] = {{"grid", cfg.fom.grid},
                {"kx", cfg.fom.kx},
                {"ky", cfg.fom.ky},
                {"side", cfg.fom.side},
                {"t0", cfg.fom.t0},
                {"t_end", cfg.fom.t_end},
                {"steps", cfg.fom.steps},
                {"initial_temperature", cfg.fom.initial_temperature}};
    j["spaces"] = {{"mu_lower", std::vector<double>(cfg.mu_lower.begin(), cfg.mu_lower.end())},
                   {"mu_upper", std::vector<double>(cfg.mu_upper.begin(), cfg.mu_upper.end())},
                   {"reduced_dim", cfg.spaces.reduced_dim},
                   {"beta", cfg.spaces.beta},
                   {"estimate_ivps", cfg.spaces.estimate_ivps},
                   {"trim",
                    cfg.spaces.trim_from_estimate
                        ? json{{"mode", "from-estimate"}}
                        : json{{"mode", "empirical"},
                               {"y_min", cfg.spaces.trim_y_min},
                               {"y_max", cfg.spaces.trim_y_max}}}};
    j["pac"] = {{"epsilon", cfg.pac.epsilon},
                {"sigma", cfg.pac.sigma},
                {"s", cfg.pac.s},
                {"tau_design", cfg.tau_design}};
    j["active"] = {{"pool_size", cfg.active.pool_size},
                   {"delta_s", cfg.active.delta_s},
                   {"delta_tau_tol", cfg.active.delta_tau_tol},
                   {"max_iterations", cfg.active.max_iterations}};
    j["training"] = {{"max_epochs", cfg.training.max_epochs},
                     {"batch_size", cfg.training.batch_size},
                     {"learning_rate", cfg.training.learning_rate},
                     {"lr_decay", cfg.training.lr_decay},
                     {"lr_patience", cfg.training.lr_patience},
                     {"early_stop_patience", cfg.training.early_stop_patience},
                     {"validation_split", cfg.training.validation_split},
                     {"loss_tol", cfg.training.loss_tol},
                     {"hidden_sizes", cfg.training.hidden_sizes}};
    j["baseline"] = {{"ivps", cfg.baseline_ivps}};
    return j.dump();  // nlohmann objects keep sorted keys, so this is canonical
}

std::string config_hash(const RunConfig& cfg) {
    const std::string text = canonical_config_text(cfg);
    return checksum_bytes(text.data(), text.size());
}

std::filesystem::path resolve_output_dir(const RunConfig& cfg) {
    if (const char* env = std::getenv("ALROM_OUTPUT_DIR")) {
        if (*env) return std::filesystem::path(env);
    }
    return std::filesystem::path(cfg.output_dir);
}

}  // namespace alrom::cli
