#include "evomas/task_state.hpp"

#include "evomas/errors.hpp"

#include <array>

namespace evomas {

std::string_view status_name(SubtaskStatus s) {
    switch (s) {
    case SubtaskStatus::Pending: return "pending";
    case SubtaskStatus::Completed: return "completed";
    case SubtaskStatus::Failed: return "failed";
    }
    return "pending";
}

std::string_view verdict_name(Verdict v) {
    switch (v) {
    case Verdict::Success: return "success";
    case Verdict::Fail: return "fail";
    case Verdict::Refine: return "refine";
    }
    return "refine";
}

std::optional<SubtaskStatus> status_from_name(std::string_view name) {
    if (name == "pending") return SubtaskStatus::Pending;
    if (name == "completed") return SubtaskStatus::Completed;
    if (name == "failed") return SubtaskStatus::Failed;
    return std::nullopt;
}

std::optional<Verdict> verdict_from_name(std::string_view name) {
    if (name == "success") return Verdict::Success;
    if (name == "fail") return Verdict::Fail;
    if (name == "refine") return Verdict::Refine;
    return std::nullopt;
}

void SubtaskPlan::validate() const {
    if (subtasks.empty()) throw ValidationError("plan needs at least one subtask");
    if (active_index) {
        int a = *active_index;
        if (a < 0 || a >= static_cast<int>(subtasks.size())) {
            throw ValidationError("active subtask index out of range");
        }
        if (subtasks[static_cast<std::size_t>(a)].status == SubtaskStatus::Completed) {
            throw ValidationError("active subtask cannot be Completed");
        }
    }
}

bool SubtaskPlan::all_completed() const {
    for (const auto& s : subtasks) {
        if (s.status != SubtaskStatus::Completed) return false;
    }
    return true;
}

std::optional<int> SubtaskPlan::next_pending(int from) const {
    for (int i = from; i < static_cast<int>(subtasks.size()); ++i) {
        if (subtasks[static_cast<std::size_t>(i)].status == SubtaskStatus::Pending) {
            return i;
        }
    }
    return std::nullopt;
}

std::array<int, 3> SubtaskPlan::histogram() const {
    std::array<int, 3> counts{0, 0, 0};
    for (const auto& s : subtasks) {
        switch (s.status) {
        case SubtaskStatus::Pending: ++counts[0]; break;
        case SubtaskStatus::Completed: ++counts[1]; break;
        case SubtaskStatus::Failed: ++counts[2]; break;
        }
    }
    return counts;
}

EvaluatorAssessment make_assessment(Verdict verdict) {
    EvaluatorAssessment a;
    a.verdict = verdict;
    switch (verdict) {
    case Verdict::Success: a.confidence = 1.0; break;
    case Verdict::Refine: a.confidence = 0.5; break;
    case Verdict::Fail: a.confidence = 0.0; break;
    }
    a.feedback_features = Eigen::Vector4d::Zero();
    a.feedback_features[0] = verdict == Verdict::Success ? 1.0 : 0.0;
    a.feedback_features[1] = verdict == Verdict::Refine ? 1.0 : 0.0;
    a.feedback_features[2] = verdict == Verdict::Fail ? 1.0 : 0.0;
    a.feedback_features[3] = a.confidence;
    return a;
}

const std::string& TaskState::active_stage_type() const {
    if (!plan.active_index) throw StateError("task state is terminal");
    return plan.subtasks[static_cast<std::size_t>(*plan.active_index)].stage_type;
}

void TaskState::validate() const {
    plan.validate();
    if (stage < 0) throw ValidationError("stage counter must be nonnegative");
    if (refine_count < 0) throw ValidationError("refine count must be nonnegative");
    for (const auto& [idx, token] : completed_artifacts) {
        (void)token;
        if (idx < 0 || idx >= static_cast<int>(plan.subtasks.size())) {
            throw ValidationError("artifact refers to an out-of-range subtask");
        }
        if (plan.subtasks[static_cast<std::size_t>(idx)].status !=
            SubtaskStatus::Completed) {
            throw ValidationError("artifact refers to a non-Completed subtask");
        }
    }
    if (last_assessment) {
        double c = last_assessment->confidence;
        if (!(c >= 0.0 && c <= 1.0)) {
            throw ValidationError("assessment confidence outside [0,1]");
        }
    }
}

} // namespace evomas
