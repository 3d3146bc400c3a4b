#pragma once

#include "evomas/adapter.hpp"
#include "evomas/task_state.hpp"
#include "evomas/trajectory.hpp"

#include <nlohmann/json.hpp>

#include <string>

namespace evomas {

using ordered_json = nlohmann::ordered_json;

/// One-line JSON record for a trajectory, stable field order. Encodings are
/// omitted by default to keep run logs consumable; pass true for a
/// full-fidelity record.
ordered_json trajectory_to_json(const Trajectory& trajectory,
                                bool include_encodings = false);
Trajectory trajectory_from_json(const ordered_json& j);

ordered_json task_state_to_json(const TaskState& state);
TaskState task_state_from_json(const ordered_json& j);

/// Probability-snapshot record: per layer, the full selection distribution
/// and the greedy pick for one task state.
ordered_json snapshot_record(const StateEncoding& encoding,
                             const AdapterParams& params, int stage);

std::string format_double(double v); // shortest round-trip decimal

} // namespace evomas
