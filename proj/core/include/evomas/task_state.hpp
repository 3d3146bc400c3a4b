#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace evomas {

enum class SubtaskStatus { Pending, Completed, Failed };
enum class Verdict { Success, Fail, Refine };

std::string_view status_name(SubtaskStatus s);
std::string_view verdict_name(Verdict v);
std::optional<SubtaskStatus> status_from_name(std::string_view name);
std::optional<Verdict> verdict_from_name(std::string_view name);

struct Subtask {
    std::string stage_type;
    SubtaskStatus status = SubtaskStatus::Pending;
};

/// Ordered subtask plan with at most one active subtask.
struct SubtaskPlan {
    std::vector<Subtask> subtasks;
    std::optional<int> active_index;

    /// Throws ValidationError on out-of-range active index or an active
    /// subtask already marked Completed.
    void validate() const;

    bool all_completed() const;
    /// Next Pending index at or after `from`, if any.
    std::optional<int> next_pending(int from) const;
    /// Counts of (pending, completed, failed).
    std::array<int, 3> histogram() const;
};

/// Dimension of the numeric feedback vector carried by assessments.
inline constexpr int kFeedbackDim = 4;

/// Structured evaluator output: verdict, confidence, and a fixed-length
/// numeric feedback vector standing in for natural-language feedback.
struct EvaluatorAssessment {
    Verdict verdict = Verdict::Refine;
    double confidence = 0.0;
    Eigen::Vector4d feedback_features = Eigen::Vector4d::Zero();
};

/// Deterministic assessment used by the synthetic evaluator: confidence and
/// feedback are pure functions of the verdict so exact enumeration of the
/// reachable state space stays finite.
EvaluatorAssessment make_assessment(Verdict verdict);

/// Structured execution-time task state. Immutable value object; the
/// environment produces a new state per meta-step.
struct TaskState {
    std::uint64_t objective_id = 0;
    SubtaskPlan plan;
    /// (subtask index, opaque artifact token), for Completed subtasks only.
    std::vector<std::pair<int, int>> completed_artifacts;
    std::optional<EvaluatorAssessment> last_assessment;
    /// Meta-step counter; increments by exactly 1 per transition.
    int stage = 0;
    /// Consecutive Refine verdicts on the current active subtask. Part of
    /// the failure/refinement context; resets when the plan advances.
    int refine_count = 0;

    /// No active subtask remains.
    bool terminal() const { return !plan.active_index.has_value(); }
    /// Active stage type; throws StateError when terminal.
    const std::string& active_stage_type() const;

    void validate() const;
};

} // namespace evomas
