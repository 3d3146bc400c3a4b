#include "evomas/config.hpp"

#include "evomas/errors.hpp"
#include "evomas/rng.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace evomas {

namespace {

std::string trim(const std::string& s) {
    std::size_t begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    std::size_t end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

} // namespace

KeyValueConfig KeyValueConfig::parse_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_string(buffer.str());
}

KeyValueConfig KeyValueConfig::parse_string(const std::string& text) {
    KeyValueConfig config;
    std::istringstream in(text);
    std::string line;
    int line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        std::size_t comment = line.find('#');
        if (comment != std::string::npos) line = line.substr(0, comment);
        line = trim(line);
        if (line.empty()) continue;
        std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("line " + std::to_string(line_number) +
                              ": expected 'key = value'");
        }
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty()) {
            throw ConfigError("line " + std::to_string(line_number) +
                              ": empty key");
        }
        if (config.entries_.count(key)) {
            throw ConfigError("duplicate config key: " + key);
        }
        config.entries_[key] = value;
        config.consumed_[key] = false;
    }
    return config;
}

bool KeyValueConfig::has(const std::string& key) const {
    return entries_.count(key) > 0;
}

const std::string* KeyValueConfig::find(const std::string& key) {
    auto it = entries_.find(key);
    if (it == entries_.end()) return nullptr;
    consumed_[key] = true;
    return &it->second;
}

std::string KeyValueConfig::get_string(const std::string& key,
                                       const std::string& fallback) {
    const std::string* v = find(key);
    return v ? *v : fallback;
}

double KeyValueConfig::get_double(const std::string& key, double fallback) {
    const std::string* v = find(key);
    if (!v) return fallback;
    try {
        std::size_t pos = 0;
        double parsed = std::stod(*v, &pos);
        if (pos != v->size()) throw std::invalid_argument("trailing");
        return parsed;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': expected a number, got '" + *v + "'");
    }
}

long KeyValueConfig::get_long(const std::string& key, long fallback) {
    const std::string* v = find(key);
    if (!v) return fallback;
    try {
        std::size_t pos = 0;
        long parsed = std::stol(*v, &pos);
        if (pos != v->size()) throw std::invalid_argument("trailing");
        return parsed;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': expected an integer, got '" + *v + "'");
    }
}

std::uint64_t KeyValueConfig::get_u64(const std::string& key,
                                      std::uint64_t fallback) {
    const std::string* v = find(key);
    if (!v) return fallback;
    try {
        std::size_t pos = 0;
        unsigned long long parsed = std::stoull(*v, &pos);
        if (pos != v->size()) throw std::invalid_argument("trailing");
        return parsed;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': expected an unsigned integer, got '" +
                          *v + "'");
    }
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) {
    const std::string* v = find(key);
    if (!v) return fallback;
    if (*v == "true" || *v == "1" || *v == "on") return true;
    if (*v == "false" || *v == "0" || *v == "off") return false;
    throw ConfigError("key '" + key + "': expected a boolean, got '" + *v + "'");
}

std::vector<std::string> KeyValueConfig::get_list(
    const std::string& key, const std::vector<std::string>& fallback) {
    const std::string* v = find(key);
    if (!v) return fallback;
    std::vector<std::string> items;
    std::istringstream in(*v);
    std::string item;
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (!item.empty()) items.push_back(item);
    }
    if (items.empty()) {
        throw ConfigError("key '" + key + "': expected a non-empty list");
    }
    return items;
}

std::vector<std::string> KeyValueConfig::keys_with_prefix(
    const std::string& prefix) const {
    std::vector<std::string> keys;
    std::string with_dot = prefix + ".";
    for (const auto& [key, value] : entries_) {
        (void)value;
        if (key.rfind(with_dot, 0) == 0) keys.push_back(key);
    }
    return keys;
}

void KeyValueConfig::require_all_consumed() const {
    std::string unknown;
    for (const auto& [key, used] : consumed_) {
        if (!used) {
            if (!unknown.empty()) unknown += ", ";
            unknown += key;
        }
    }
    if (!unknown.empty()) throw ConfigError("unknown config keys: " + unknown);
}

std::uint64_t KeyValueConfig::content_hash() const {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (const auto& [key, value] : entries_) { // std::map: sorted order
        h = fnv1a(key, h);
        h = fnv1a("=", h);
        h = fnv1a(value, h);
        h = fnv1a("\n", h);
    }
    return h;
}

AdapterParams RunConfig::make_initial_params() const {
    AdapterParams params = AdapterParams::init(
        environment.pool.size(), adapter.dim, train.seed, adapter.init_scale,
        adapter.temperature, adapter.mass_threshold, adapter.max_layers);
    params.scale_attention = adapter.scale_attention;
    params.ablate_value_projection = adapter.ablate_value_projection;
    return params;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_run_config(buffer.str());
}

RunConfig parse_run_config(const std::string& text) {
    KeyValueConfig kv = KeyValueConfig::parse_string(text);

    // --- environment ---
    std::string pool_name = kv.get_string("env.pool", "seven");
    PoolPreset preset;
    if (pool_name == "four") preset = PoolPreset::Four;
    else if (pool_name == "seven") preset = PoolPreset::Seven;
    else throw ConfigError("env.pool must be 'four' or 'seven'");
    AgentPool pool = pool_preset(preset);

    TaskTemplate task;
    task.stage_types = kv.get_list("env.stages", {"Retrieve", "Compute", "Verify"});
    task.noise = kv.get_double("env.noise", 0.0);
    task.seed = kv.get_u64("env.seed", 0);

    OutcomeModel model;
    model.ensemble_bonus = kv.get_double("env.ensemble_bonus", 0.0);
    model.distractor_penalty = kv.get_double("env.distractor_penalty", 0.0);
    model.default_capability = kv.get_double("env.default_capability", 1.0);
    model.max_refines = static_cast<int>(kv.get_long("env.max_refines", 2));
    model.noise = task.noise;

    for (const std::string& key : kv.keys_with_prefix("env.required")) {
        std::string stage = key.substr(std::string("env.required.").size());
        if (stage.empty()) throw ConfigError("empty stage in '" + key + "'");
        std::set<RoleTag> roles;
        for (const std::string& name : kv.get_list(key, {})) {
            auto role = role_from_name(name);
            if (!role) throw ConfigError("key '" + key + "': unknown role '" +
                                         name + "'");
            roles.insert(*role);
        }
        model.required_roles[stage] = std::move(roles);
    }

    std::vector<AgentSpec> agents = pool.agents();
    for (const std::string& key : kv.keys_with_prefix("env.capability")) {
        std::string rest = key.substr(std::string("env.capability.").size());
        std::size_t dot = rest.find('.');
        if (dot == std::string::npos) {
            throw ConfigError("expected env.capability.<agent>.<stage> in '" +
                              key + "'");
        }
        std::string agent_name = rest.substr(0, dot);
        std::string stage = rest.substr(dot + 1);
        double prob = kv.get_double(key, 0.0);
        bool found = false;
        for (auto& agent : agents) {
            if (agent.name == agent_name) {
                agent.capability[stage] = prob;
                found = true;
            }
        }
        if (!found) throw ConfigError("key '" + key + "': no agent named '" +
                                      agent_name + "'");
    }

    int default_budget = 2 * static_cast<int>(task.stage_types.size());
    int max_meta_steps = static_cast<int>(
        kv.get_long("env.max_meta_steps", default_budget));

    // --- adapter ---
    AdapterConfig adapter;
    adapter.dim = static_cast<int>(kv.get_long("adapter.dim", 16));
    adapter.temperature = kv.get_double("adapter.temperature", 0.2);
    adapter.mass_threshold = kv.get_double("adapter.mass_threshold", 0.5);
    adapter.max_layers = static_cast<int>(kv.get_long("adapter.max_layers", 3));
    adapter.init_scale = kv.get_double("adapter.init_scale", 0.25);
    adapter.scale_attention = kv.get_bool("adapter.scale_attention", true);
    adapter.ablate_value_projection =
        kv.get_bool("adapter.ablate_value_projection", false);

    // --- training ---
    TrainConfig train;
    train.learning_rate = kv.get_double("train.learning_rate", 0.05);
    train.batch_size = static_cast<int>(kv.get_long("train.batch_size", 16));
    train.total_trajectories = kv.get_long("train.total_trajectories", 0);
    std::string reward_mode = kv.get_string("train.reward_mode", "terminal");
    if (reward_mode == "terminal") train.reward_mode = RewardMode::TerminalOnly;
    else if (reward_mode == "terminal_plus_process") {
        train.reward_mode = RewardMode::TerminalPlusProcess;
    } else {
        throw ConfigError(
            "train.reward_mode must be 'terminal' or 'terminal_plus_process'");
    }
    train.prm_weight = kv.get_double("train.prm_weight", 0.5);
    std::string baseline = kv.get_string("train.baseline", "none");
    if (baseline == "none") train.baseline = BaselineMode::None;
    else if (baseline == "batch_mean") train.baseline = BaselineMode::BatchMean;
    else throw ConfigError("train.baseline must be 'none' or 'batch_mean'");
    train.eval_every = kv.get_long("train.eval_every", 250);
    train.eval_episodes =
        static_cast<int>(kv.get_long("train.eval_episodes", 200));
    train.checkpoint_every = kv.get_long("train.checkpoint_every", 0);
    train.seed = kv.get_u64("train.seed", 0);

    kv.require_all_consumed();

    task.validate();
    model.validate();
    train.validate();
    if (adapter.dim < 4) throw ConfigError("adapter.dim must be >= 4");
    if (adapter.max_layers < 1) throw ConfigError("adapter.max_layers must be >= 1");
    if (!(adapter.temperature > 0.0)) {
        throw ConfigError("adapter.temperature must be > 0");
    }
    if (!(adapter.mass_threshold > 0.0 && adapter.mass_threshold <= 1.0)) {
        throw ConfigError("adapter.mass_threshold must lie in (0, 1]");
    }
    if (max_meta_steps < 1) throw ConfigError("env.max_meta_steps must be >= 1");

    return RunConfig{Environment{AgentPool(std::move(agents)), std::move(task),
                                 std::move(model), max_meta_steps,
                                 EncoderConfig{adapter.dim}},
                     adapter, train, kv.content_hash()};
}

} // namespace evomas
