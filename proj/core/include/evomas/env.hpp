#pragma once

#include "evomas/adapter.hpp"
#include "evomas/agents.hpp"
#include "evomas/encoder.hpp"
#include "evomas/rng.hpp"
#include "evomas/task_state.hpp"
#include "evomas/trajectory.hpp"

#include <map>
#include <set>
#include <string>
#include <vector>

namespace evomas {

/// A synthetic long-horizon task: an ordered list of stage types plus the
/// evaluator flip probability.
struct TaskTemplate {
    std::vector<std::string> stage_types;
    double noise = 0.0; // evaluator flip probability, < 0.5
    std::uint64_t seed = 0;

    void validate() const;
    /// Stable task identity derived from the stage types.
    std::uint64_t objective_id() const;
};

/// Parametric stand-in for real agent execution: stage success depends on
/// which role tags the workflow contains.
struct OutcomeModel {
    /// stage type -> roles whose presence can complete the stage. A stage
    /// with an empty (or missing) entry can never succeed.
    std::map<std::string, std::set<RoleTag>> required_roles;
    /// Added to the success probability when an Ensemble agent co-occurs
    /// with a required role.
    double ensemble_bonus = 0.0;
    /// Subtracted per agent instance whose role is neither required for the
    /// stage nor Ensemble.
    double distractor_penalty = 0.0;
    /// Capability used for stages absent from an agent's profile.
    double default_capability = 1.0;
    /// Consecutive Refine verdicts on one subtask before it becomes Fail.
    int max_refines = 2;
    /// Evaluator flip probability (copied from the template at env build).
    double noise = 0.0;

    void validate() const;
};

/// Success probability of `stage_type` under `workflow`: max capability
/// over present required-role agents, plus the ensemble bonus when
/// applicable, minus the distractor penalty per irrelevant instance,
/// clamped to [0, 1]. Zero when no required role is present.
double stage_success_probability(const std::string& stage_type,
                                 const LayeredWorkflow& workflow,
                                 const AgentPool& pool,
                                 const OutcomeModel& model);

/// Fresh state: all subtasks Pending, subtask 0 active, stage 0.
TaskState init_state(const TaskTemplate& task);

/// Execute one workflow against the active stage. Samples stage success,
/// applies the evaluator flip, derives the verdict (Refine escalates to
/// Fail after max_refines consecutive refines) and the binary step reward.
/// Throws StateError on a terminal state.
ExecutionRecord execute_workflow(const TaskState& state,
                                 const LayeredWorkflow& workflow,
                                 const AgentPool& pool,
                                 const OutcomeModel& model, Rng& rng);

/// Planner/updater transition: Success completes and advances, Refine
/// retries with failure context attached, Fail marks and advances.
/// Always increments the stage counter by exactly 1.
TaskState update_state(const TaskState& state, const LayeredWorkflow& workflow,
                       const ExecutionRecord& record);

/// 1 iff every subtask ended Completed, else 0.
double terminal_utility(const Trajectory& trajectory);

/// A fully parameterized environment instance.
struct Environment {
    AgentPool pool;
    TaskTemplate task;
    OutcomeModel model;
    int max_meta_steps = 6; // T_max
    EncoderConfig encoder;

    /// Full meta-episode: encode -> build workflow -> execute -> update,
    /// stopping on completion, early exit, or budget exhaustion.
    Trajectory rollout(const AdapterParams& params, Rng& rng) const;
};

} // namespace evomas
