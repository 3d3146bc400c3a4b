#include "evomas/agents.hpp"

#include "evomas/errors.hpp"

#include <algorithm>
#include <utility>

namespace evomas {

std::string_view role_name(RoleTag tag) {
    switch (tag) {
    case RoleTag::IO: return "io";
    case RoleTag::MultiGenerate: return "multi_generate";
    case RoleTag::SelfRefine: return "self_refine";
    case RoleTag::WebSearch: return "web_search";
    case RoleTag::WebBrowser: return "web_browser";
    case RoleTag::EarlyExit: return "early_exit";
    case RoleTag::Ensemble: return "ensemble";
    case RoleTag::Custom: return "custom";
    }
    return "custom";
}

std::optional<RoleTag> role_from_name(std::string_view name) {
    static constexpr RoleTag all[] = {
        RoleTag::IO,        RoleTag::MultiGenerate, RoleTag::SelfRefine,
        RoleTag::WebSearch, RoleTag::WebBrowser,    RoleTag::EarlyExit,
        RoleTag::Ensemble,  RoleTag::Custom,
    };
    for (RoleTag tag : all) {
        if (role_name(tag) == name) return tag;
    }
    return std::nullopt;
}

double AgentSpec::capability_for(const std::string& stage,
                                 double default_value) const {
    auto it = capability.find(stage);
    return it == capability.end() ? default_value : it->second;
}

AgentPool::AgentPool(std::vector<AgentSpec> agents) : agents_(std::move(agents)) {
    if (agents_.empty()) throw ValidationError("agent pool must be non-empty");
    for (std::size_t i = 0; i < agents_.size(); ++i) {
        if (agents_[i].id != static_cast<int>(i)) {
            throw ValidationError("agent id must equal its pool position");
        }
        for (const auto& [stage, prob] : agents_[i].capability) {
            if (!(prob >= 0.0 && prob <= 1.0)) {
                throw ValidationError("capability for stage '" + stage +
                                      "' outside [0,1]");
            }
        }
    }
}

const AgentSpec& AgentPool::at(int id) const {
    if (id < 0 || id >= size()) throw std::out_of_range("agent id out of range");
    return agents_[static_cast<std::size_t>(id)];
}

bool AgentPool::has_role(RoleTag tag) const {
    return find_role(tag).has_value();
}

std::optional<int> AgentPool::find_role(RoleTag tag) const {
    for (const auto& a : agents_) {
        if (a.role == tag) return a.id;
    }
    return std::nullopt;
}

std::optional<int> AgentPool::find_name(std::string_view name) const {
    for (const auto& a : agents_) {
        if (a.name == name) return a.id;
    }
    return std::nullopt;
}

AgentPool pool_preset(PoolPreset preset) {
    auto make = [](std::vector<RoleTag> roles) {
        std::vector<AgentSpec> agents;
        agents.reserve(roles.size());
        for (std::size_t i = 0; i < roles.size(); ++i) {
            AgentSpec spec;
            spec.id = static_cast<int>(i);
            spec.role = roles[i];
            spec.name = std::string(role_name(roles[i]));
            agents.push_back(std::move(spec));
        }
        return AgentPool(std::move(agents));
    };
    switch (preset) {
    case PoolPreset::Four:
        return make({RoleTag::IO, RoleTag::EarlyExit, RoleTag::WebSearch,
                     RoleTag::Ensemble});
    case PoolPreset::Seven:
        return make({RoleTag::IO, RoleTag::MultiGenerate, RoleTag::SelfRefine,
                     RoleTag::WebSearch, RoleTag::WebBrowser, RoleTag::EarlyExit,
                     RoleTag::Ensemble});
    }
    throw ValidationError("unknown pool preset");
}

} // namespace evomas
