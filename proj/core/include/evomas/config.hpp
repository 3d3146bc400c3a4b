#pragma once

#include "evomas/env.hpp"
#include "evomas/trainer.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace evomas {

/// Flat dotted-key configuration: one `key = value` per line, `#` comments.
/// Every key must be consumed by a typed getter; unconsumed (unknown) keys
/// are hard errors so silent typos cannot corrupt experiments.
class KeyValueConfig {
public:
    static KeyValueConfig parse_file(const std::filesystem::path& path);
    static KeyValueConfig parse_string(const std::string& text);

    bool has(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback);
    double get_double(const std::string& key, double fallback);
    long get_long(const std::string& key, long fallback);
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback);
    bool get_bool(const std::string& key, bool fallback);
    std::vector<std::string> get_list(const std::string& key,
                                      const std::vector<std::string>& fallback);

    /// Keys starting with `prefix.`; marks nothing consumed.
    std::vector<std::string> keys_with_prefix(const std::string& prefix) const;

    /// Throws ConfigError listing every key never consumed by a getter.
    void require_all_consumed() const;

    /// FNV-1a over the canonicalized (sorted `key=value`) content.
    std::uint64_t content_hash() const;

private:
    std::map<std::string, std::string> entries_;
    std::map<std::string, bool> consumed_;

    const std::string* find(const std::string& key);
};

struct AdapterConfig {
    int dim = 16;
    double temperature = 0.2;
    double mass_threshold = 0.5;
    int max_layers = 3;
    double init_scale = 0.25;
    bool scale_attention = true;
    bool ablate_value_projection = false;
};

/// Everything a run needs: environment, adapter setup, training setup.
struct RunConfig {
    Environment environment;
    AdapterConfig adapter;
    TrainConfig train;
    std::uint64_t config_hash = 0;

    AdapterParams make_initial_params() const;
};

/// Parses and validates a full run configuration (env.*, adapter.*,
/// train.* keys). Throws ConfigError on unknown keys or bad values.
RunConfig load_run_config(const std::filesystem::path& path);
RunConfig parse_run_config(const std::string& text);

} // namespace evomas
