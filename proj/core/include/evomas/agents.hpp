#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace evomas {

/// Functional role of a candidate agent. The synthetic environment keys
/// stage outcomes off these tags; real message semantics are out of scope.
enum class RoleTag {
    IO,
    MultiGenerate,
    SelfRefine,
    WebSearch,
    WebBrowser,
    EarlyExit,
    Ensemble,
    Custom,
};

std::string_view role_name(RoleTag tag);
std::optional<RoleTag> role_from_name(std::string_view name);

struct AgentSpec {
    int id = 0;                ///< position in its pool
    std::string name;
    RoleTag role = RoleTag::Custom;
    /// stage-type -> success probability, consulted only by the synthetic
    /// environment; stages absent from the map use the model default.
    std::map<std::string, double> capability;

    /// Capability for `stage`, falling back to `default_value`.
    double capability_for(const std::string& stage, double default_value) const;
};

/// Ordered registry of candidate agents. Immutable after construction.
class AgentPool {
public:
    /// Validates: non-empty, ids equal positions, capabilities in [0,1].
    explicit AgentPool(std::vector<AgentSpec> agents);

    int size() const { return static_cast<int>(agents_.size()); }
    const AgentSpec& at(int id) const;
    const std::vector<AgentSpec>& agents() const { return agents_; }

    bool has_role(RoleTag tag) const;
    /// First agent id carrying `tag`, if any.
    std::optional<int> find_role(RoleTag tag) const;
    std::optional<int> find_name(std::string_view name) const;

private:
    std::vector<AgentSpec> agents_;
};

enum class PoolPreset { Four, Seven };

/// Named candidate pools: Four = {I/O, Early-exit, Web-search, Ensemble},
/// Seven adds {Multi-generate, Self-refine, Web-browser}.
AgentPool pool_preset(PoolPreset preset);

} // namespace evomas
