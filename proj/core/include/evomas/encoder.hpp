#pragma once

#include "evomas/task_state.hpp"

#include <Eigen/Dense>

namespace evomas {

/// Token matrix produced by the state encoder: one row per state field
/// group, each row L2-bounded by 1.
struct StateEncoding {
    Eigen::MatrixXd tokens; // M x d

    int rows() const { return static_cast<int>(tokens.rows()); }
    int dim() const { return static_cast<int>(tokens.cols()); }
};

struct EncoderConfig {
    int dim = 16;
};

/// Number of token rows: objective, active subtask, status histogram,
/// assessment, stage counter.
inline constexpr int kEncoderTokens = 5;

/// Deterministic feature-hashing encoder. Not trained; equal states encode
/// to bitwise-equal matrices. Absent fields (no assessment, no active
/// subtask) encode to all-zero rows.
StateEncoding encode_state(const TaskState& state, const EncoderConfig& config);

} // namespace evomas
