#pragma once

#include <utility>
#include <vector>

namespace evomas {

/// A layered workflow: per-layer ordered, duplicate-free agent index
/// sequences. Inter-layer edges are never stored; consecutive layers are
/// implicitly fully bipartite. The same agent may appear in multiple layers.
struct LayeredWorkflow {
    std::vector<std::vector<int>> layers;
    /// Log-probability of the sampled ordered selections, filled by the
    /// adapter; 0 for hand-built workflows.
    double log_prob = 0.0;
    /// Per-layer flag: sampling degenerated and the fallback rule applied.
    std::vector<bool> per_layer_fallback;

    LayeredWorkflow() = default;
    /// Validates layer structure; throws ValidationError.
    explicit LayeredWorkflow(std::vector<std::vector<int>> layers,
                             double log_prob = 0.0,
                             std::vector<bool> per_layer_fallback = {});
    LayeredWorkflow(std::initializer_list<std::vector<int>> layers)
        : LayeredWorkflow(std::vector<std::vector<int>>(layers)) {}

    int depth() const { return static_cast<int>(layers.size()); }
    /// True if any layer contains `agent_id`.
    bool contains(int agent_id) const;
    /// Total number of agent instances across layers.
    int instance_count() const;
};

/// Full bipartite edge set between 1-based `layer` and `layer + 1`.
/// Throws std::out_of_range unless 1 <= layer < depth.
std::vector<std::pair<int, int>> bipartite_edges(const LayeredWorkflow& workflow,
                                                 int layer);

} // namespace evomas
