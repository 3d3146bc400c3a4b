#pragma once

#include "evomas/task_state.hpp"
#include "evomas/workflow.hpp"

#include <Eigen/Dense>

#include <optional>
#include <vector>

namespace evomas {

/// Aggregated outcome of executing one workflow: per-agent outcome tokens,
/// the evaluator assessment, and the binary evaluator reward.
struct ExecutionRecord {
    /// One entry per layer; token 1 marks an agent whose role was required
    /// for the active stage, 0 otherwise. Opaque to everything downstream.
    std::vector<std::vector<int>> per_layer_outputs;
    bool early_exit_triggered = false;
    EvaluatorAssessment assessment;
    double step_reward = 0.0;
};

struct TrajectoryStep {
    /// Encoding of the state the workflow was sampled from.
    Eigen::MatrixXd state_encoding;
    LayeredWorkflow workflow;
    ExecutionRecord record;
    /// Full per-layer selection distributions (probability snapshot).
    std::vector<Eigen::VectorXd> layer_probs;
    /// Meta-step counter of the pre-step state.
    int stage = 0;
};

struct Trajectory {
    std::vector<TrajectoryStep> steps;
    /// Sparse {0,1} task utility.
    double terminal_utility = 0.0;
    /// Artifact token of the last Completed subtask, if any.
    std::optional<int> final_answer;
    /// State after the last transition; kept so the utility is auditable.
    TaskState final_state;
};

} // namespace evomas
