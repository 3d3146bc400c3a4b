#include "evomas/env.hpp"

#include "evomas/errors.hpp"

#include <algorithm>
#include <cmath>

namespace evomas {

void TaskTemplate::validate() const {
    if (stage_types.empty()) {
        throw ValidationError("task template needs at least one stage");
    }
    if (!(noise >= 0.0 && noise < 0.5)) {
        throw ValidationError("evaluator noise must lie in [0, 0.5)");
    }
}

std::uint64_t TaskTemplate::objective_id() const {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (const auto& stage : stage_types) {
        h = fnv1a(stage, h);
        h = fnv1a("|", h);
    }
    return h;
}

void OutcomeModel::validate() const {
    if (!(ensemble_bonus >= 0.0)) {
        throw ValidationError("ensemble bonus must be >= 0");
    }
    if (!(distractor_penalty >= 0.0)) {
        throw ValidationError("distractor penalty must be >= 0");
    }
    if (!(default_capability >= 0.0 && default_capability <= 1.0)) {
        throw ValidationError("default capability must lie in [0,1]");
    }
    if (max_refines < 0) throw ValidationError("max refines must be >= 0");
    if (!(noise >= 0.0 && noise < 0.5)) {
        throw ValidationError("evaluator noise must lie in [0, 0.5)");
    }
}

double stage_success_probability(const std::string& stage_type,
                                 const LayeredWorkflow& workflow,
                                 const AgentPool& pool,
                                 const OutcomeModel& model) {
    auto it = model.required_roles.find(stage_type);
    if (it == model.required_roles.end() || it->second.empty()) return 0.0;
    const auto& required = it->second;

    // Ensemble agents are supporting rather than irrelevant only when the
    // model actually grants them a bonus; otherwise they distract like any
    // other off-role agent.
    double best_capability = -1.0;
    bool ensemble_present = false;
    int irrelevant_instances = 0;
    for (const auto& layer : workflow.layers) {
        for (int idx : layer) {
            const AgentSpec& agent = pool.at(idx);
            if (required.count(agent.role) > 0) {
                best_capability =
                    std::max(best_capability,
                             agent.capability_for(stage_type,
                                                  model.default_capability));
            } else if (agent.role == RoleTag::Ensemble &&
                       model.ensemble_bonus > 0.0) {
                ensemble_present = true;
            } else {
                ++irrelevant_instances;
            }
        }
    }
    if (best_capability < 0.0) return 0.0;

    double p = best_capability;
    if (ensemble_present) p += model.ensemble_bonus;
    p -= model.distractor_penalty * irrelevant_instances;
    return std::clamp(p, 0.0, 1.0);
}

TaskState init_state(const TaskTemplate& task) {
    task.validate();
    TaskState state;
    state.objective_id = task.objective_id();
    state.plan.subtasks.reserve(task.stage_types.size());
    for (const auto& stage : task.stage_types) {
        state.plan.subtasks.push_back({stage, SubtaskStatus::Pending});
    }
    state.plan.active_index = 0;
    state.stage = 0;
    return state;
}

ExecutionRecord execute_workflow(const TaskState& state,
                                 const LayeredWorkflow& workflow,
                                 const AgentPool& pool,
                                 const OutcomeModel& model, Rng& rng) {
    model.validate();
    if (state.terminal()) {
        throw StateError("cannot execute a workflow on a terminal state");
    }
    const std::string& stage_type = state.active_stage_type();
    auto required_it = model.required_roles.find(stage_type);
    const std::set<RoleTag>* required =
        required_it == model.required_roles.end() ? nullptr : &required_it->second;

    ExecutionRecord record;
    record.per_layer_outputs.reserve(workflow.layers.size());
    for (const auto& layer : workflow.layers) {
        std::vector<int> outputs;
        outputs.reserve(layer.size());
        for (int idx : layer) {
            const AgentSpec& agent = pool.at(idx);
            if (agent.role == RoleTag::EarlyExit) record.early_exit_triggered = true;
            bool contributed = required && required->count(agent.role) > 0;
            outputs.push_back(contributed ? 1 : 0);
        }
        record.per_layer_outputs.push_back(std::move(outputs));
    }

    double success_prob = stage_success_probability(stage_type, workflow, pool, model);
    bool success = uniform01(rng) < success_prob;
    // The evaluator is the noisy component: its flip affects the verdict
    // and the binary step reward consistently.
    if (model.noise > 0.0 && uniform01(rng) < model.noise) success = !success;

    Verdict verdict;
    if (success) {
        verdict = Verdict::Success;
    } else if (state.refine_count >= model.max_refines) {
        verdict = Verdict::Fail;
    } else {
        verdict = Verdict::Refine;
    }
    record.assessment = make_assessment(verdict);
    record.step_reward = verdict == Verdict::Success ? 1.0 : 0.0;
    return record;
}

TaskState update_state(const TaskState& state, const LayeredWorkflow& workflow,
                       const ExecutionRecord& record) {
    (void)workflow;
    if (state.terminal()) throw StateError("cannot update a terminal state");
    TaskState next = state;
    int active = *state.plan.active_index;
    auto& subtasks = next.plan.subtasks;

    switch (record.assessment.verdict) {
    case Verdict::Success: {
        subtasks[static_cast<std::size_t>(active)].status = SubtaskStatus::Completed;
        next.completed_artifacts.emplace_back(active, active + 1);
        next.plan.active_index = next.plan.next_pending(active + 1);
        next.refine_count = 0;
        break;
    }
    case Verdict::Refine: {
        next.refine_count = state.refine_count + 1;
        break;
    }
    case Verdict::Fail: {
        subtasks[static_cast<std::size_t>(active)].status = SubtaskStatus::Failed;
        next.plan.active_index = next.plan.next_pending(active + 1);
        next.refine_count = 0;
        break;
    }
    }
    next.last_assessment = record.assessment;
    next.stage = state.stage + 1;
    next.validate();
    return next;
}

double terminal_utility(const Trajectory& trajectory) {
    return trajectory.final_state.plan.all_completed() ? 1.0 : 0.0;
}

Trajectory Environment::rollout(const AdapterParams& params, Rng& rng) const {
    task.validate();
    model.validate();
    if (max_meta_steps < 1) throw ValidationError("meta-step budget must be >= 1");

    Trajectory trajectory;
    TaskState state = init_state(task);
    for (int t = 0; t < max_meta_steps; ++t) {
        StateEncoding enc = encode_state(state, encoder);
        std::vector<SamplingOutcome> outcomes;
        std::vector<LayerTrace> traces;
        LayeredWorkflow workflow = build_workflow(enc, params, rng, &outcomes, &traces);
        ExecutionRecord record = execute_workflow(state, workflow, pool, model, rng);
        TaskState next = update_state(state, workflow, record);

        TrajectoryStep step;
        step.state_encoding = enc.tokens;
        step.workflow = workflow;
        step.record = record;
        step.stage = state.stage;
        // Full per-layer selection distributions for plot-data export.
        step.layer_probs.reserve(traces.size());
        for (auto& trace : traces) step.layer_probs.push_back(std::move(trace.probs));
        trajectory.steps.push_back(std::move(step));

        state = std::move(next);
        if (state.terminal() || record.early_exit_triggered) break;
    }
    trajectory.final_state = state;
    trajectory.terminal_utility = terminal_utility(trajectory);
    if (!state.completed_artifacts.empty()) {
        trajectory.final_answer = state.completed_artifacts.back().second;
    }
    return trajectory;
}

} // namespace evomas
