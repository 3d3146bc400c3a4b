#include "evomas/workflow.hpp"

#include "evomas/errors.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>
#include <utility>

namespace evomas {

LayeredWorkflow::LayeredWorkflow(std::vector<std::vector<int>> layers_in,
                                 double log_prob_in,
                                 std::vector<bool> fallback_in)
    : layers(std::move(layers_in)),
      log_prob(log_prob_in),
      per_layer_fallback(std::move(fallback_in)) {
    if (layers.empty()) throw ValidationError("workflow needs at least one layer");
    for (const auto& layer : layers) {
        if (layer.empty()) throw ValidationError("workflow layer is empty");
        std::set<int> seen;
        for (int idx : layer) {
            if (idx < 0) throw ValidationError("negative agent index in layer");
            if (!seen.insert(idx).second) {
                throw ValidationError("duplicate agent index within a layer");
            }
        }
    }
    if (!per_layer_fallback.empty() &&
        per_layer_fallback.size() != layers.size()) {
        throw ValidationError("per-layer fallback flags do not match layer count");
    }
}

bool LayeredWorkflow::contains(int agent_id) const {
    for (const auto& layer : layers) {
        if (std::find(layer.begin(), layer.end(), agent_id) != layer.end()) {
            return true;
        }
    }
    return false;
}

int LayeredWorkflow::instance_count() const {
    int n = 0;
    for (const auto& layer : layers) n += static_cast<int>(layer.size());
    return n;
}

std::vector<std::pair<int, int>> bipartite_edges(const LayeredWorkflow& workflow,
                                                 int layer) {
    if (layer < 1 || layer >= workflow.depth()) {
        throw std::out_of_range("bipartite_edges: layer must satisfy 1 <= layer < depth");
    }
    const auto& upstream = workflow.layers[static_cast<std::size_t>(layer - 1)];
    const auto& downstream = workflow.layers[static_cast<std::size_t>(layer)];
    std::vector<std::pair<int, int>> edges;
    edges.reserve(upstream.size() * downstream.size());
    for (int u : upstream) {
        for (int v : downstream) edges.emplace_back(u, v);
    }
    return edges;
}

} // namespace evomas
