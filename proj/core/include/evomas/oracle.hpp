#pragma once

#include "evomas/adapter.hpp"
#include "evomas/env.hpp"

#include <Eigen/Dense>

#include <variant>
#include <vector>

namespace evomas::oracle {

/// Enumeration is factorial in the pool size; hard cap.
inline constexpr int kMaxEnumerationAgents = 8;

struct SequenceProb {
    std::vector<int> sequence;
    double probability = 0.0;
};

/// Depth-first enumeration of every ordered selection that satisfies the
/// cumulative-mass stop rule exactly once, with its analytic probability.
/// Applies the same probability floor as the sampler. Probabilities over
/// all stopped sequences sum to 1 (up to the floor and rounding).
/// Throws CapacityError when the pool exceeds kMaxEnumerationAgents.
std::vector<SequenceProb> enumerate_stopped_sequences(const Eigen::VectorXd& probs,
                                                      double mass_threshold);

/// Policy whose per-layer distribution is the adapter forward pass.
struct AdapterPolicy {
    AdapterParams params;
    EncoderConfig encoder;
};

/// State-independent policy: one categorical distribution sampled with the
/// cumulative-mass rule at every layer of every step.
struct FixedDistributionPolicy {
    Eigen::VectorXd probs;
    double mass_threshold = 0.5;
    int layers = 3;
};

/// Deterministic per-step workflows; steps past the end reuse the last.
struct FixedWorkflowPolicy {
    std::vector<LayeredWorkflow> per_step;
};

using PolicySpec =
    std::variant<AdapterPolicy, FixedDistributionPolicy, FixedWorkflowPolicy>;

/// Exact expected terminal utility via dynamic programming over the
/// reachable task-state space, marginalizing workflow randomness with
/// enumerate_stopped_sequences per layer. Capacity: adapter policies
/// require pool <= 5 and <= 3 subtasks; fixed policies allow pool <= 8 and
/// <= 6 subtasks.
double exact_policy_success(const PolicySpec& policy, const TaskTemplate& task,
                            const AgentPool& pool, const OutcomeModel& model,
                            int max_meta_steps);

struct DeterministicSearchResult {
    /// Workflows along the all-success path of the optimal policy.
    std::vector<LayeredWorkflow> sequence;
    double success = 0.0;
};

/// Exhaustive backward induction over single-agent-per-layer workflows;
/// returns the optimal deterministic choice per stage and its exact
/// success probability.
DeterministicSearchResult best_deterministic_sequence(const TaskTemplate& task,
                                                      const AgentPool& pool,
                                                      const OutcomeModel& model,
                                                      int max_meta_steps,
                                                      int layers = 3);

} // namespace evomas::oracle
