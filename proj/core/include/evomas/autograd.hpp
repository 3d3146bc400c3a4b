#pragma once

#include "evomas/adapter.hpp"

#include <Eigen/Dense>

#include <vector>

namespace evomas {

/// Gradients with respect to every learnable adapter parameter.
struct ParamGradients {
    Eigen::MatrixXd d_embeddings; // N x d
    Eigen::MatrixXd d_w_query;    // d x d
    Eigen::MatrixXd d_w_key;      // d x d
    Eigen::MatrixXd d_w_value;    // d x d

    static ParamGradients zeros(const AdapterParams& params);
    ParamGradients& operator+=(const ParamGradients& other);
    ParamGradients& operator*=(double scale);
    double squared_norm() const;
    bool all_finite() const;
};

/// Replayed forward computation for a recorded workflow: per-layer traces
/// plus the recorded sequences and the total log-probability. Replaying
/// uses the same code path as sampling, so values match bit-identically.
struct ForwardTape {
    std::vector<LayerTrace> layers;
    std::vector<std::vector<int>> sequences;
    double log_prob = 0.0;
};

ForwardTape replay_forward(const StateEncoding& encoding,
                           const AdapterParams& params,
                           const std::vector<std::vector<int>>& layers);

/// Exact gradient of the workflow log-probability with respect to
/// (E, W_Q, W_K, W_V), treating the sampled indices as constants
/// (score-function estimator). Deterministic given inputs.
ParamGradients grad_log_prob(const StateEncoding& encoding,
                             const AdapterParams& params,
                             const LayeredWorkflow& workflow);

/// Central finite differences over every scalar parameter; returns the max
/// relative error |analytic - numeric| / max(|numeric|, 1e-8).
double finite_diff_check(const StateEncoding& encoding,
                         const AdapterParams& params,
                         const LayeredWorkflow& workflow, double step);

} // namespace evomas
