#pragma once

#include "evomas/encoder.hpp"
#include "evomas/rng.hpp"
#include "evomas/workflow.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <set>
#include <span>
#include <vector>

namespace evomas {

/// Probabilities below this are excluded from residual renormalization
/// during sampling; the exact-enumeration oracle applies the same cutoff so
/// sampler and oracle share one measure.
inline constexpr double kProbabilityFloor = 1e-12;

/// All learnable workflow-adapter parameters plus its hyperparameters.
struct AdapterParams {
    Eigen::MatrixXd embeddings;   // N x d, one row per pool agent
    Eigen::MatrixXd w_query;      // d x d
    Eigen::MatrixXd w_key;        // d x d
    Eigen::MatrixXd w_value;      // d x d
    double temperature = 0.2;     // lambda > 0
    double mass_threshold = 0.5;  // rho in (0, 1]
    int max_layers = 3;           // L_max
    /// Scale attention logits by 1/sqrt(d). On by default for stability;
    /// configurable so the unscaled form remains testable.
    bool scale_attention = true;
    /// Diagnostic: bypass the value projection (V = E). Used to check that
    /// gradients vanish for parameters off the computation path.
    bool ablate_value_projection = false;

    int pool_size() const { return static_cast<int>(embeddings.rows()); }
    int dim() const { return static_cast<int>(embeddings.cols()); }

    /// Throws ParameterError / ShapeError on invalid hyperparameters or
    /// inconsistent shapes.
    void validate() const;

    /// Random initialization: embedding entries ~ N(0, init_scale^2),
    /// projections = identity.
    static AdapterParams init(int pool_size, int dim, std::uint64_t seed,
                              double init_scale = 0.25,
                              double temperature = 0.2,
                              double mass_threshold = 0.5,
                              int max_layers = 3);

    /// Flat view of all learnable scalars, in checkpoint order
    /// (E, W_Q, W_K, W_V, row-major). Used by updates and hashing.
    std::vector<double*> parameter_entries();
    std::vector<const double*> parameter_entries() const;
    std::uint64_t content_hash() const;
};

/// Result of cumulative-mass sampling for one layer.
struct SamplingOutcome {
    std::vector<int> ordered_indices;
    /// Conditional probability of each pick at pick time:
    /// p_i / (1 - mass picked before it).
    std::vector<double> pick_probs;
    /// Total original-p mass of the selected set.
    double cumulative_mass = 0.0;
    bool fallback_used = false;
    double log_prob = 0.0;
    /// Indices excluded from sampling by the probability floor.
    std::vector<int> excluded_indices;
};

/// Mean of the embedding rows selected in earlier layers (set semantics:
/// an agent selected in several prior layers is pooled once). Empty set
/// pools to the zero vector.
Eigen::VectorXd layer_context(const std::set<int>& previously_selected,
                              const Eigen::MatrixXd& embeddings);

struct AttentionResult {
    Eigen::MatrixXd weights; // (M+1) x N, rows sum to 1
    Eigen::MatrixXd output;  // (M+1) x d
};

/// Single-head cross-attention between state tokens and agent embeddings:
/// Q = X~ W_Q, K = E W_K, V = E W_V, H = rowsoftmax(Q K^T / sqrt(d)) V.
AttentionResult cross_attention(const Eigen::MatrixXd& x_tilde,
                                const AdapterParams& params);

/// Column-wise mean of the attended rows.
Eigen::VectorXd pool_query(const Eigen::MatrixXd& attended);

/// Cosine similarity of the pooled query against every agent embedding.
/// Throws DegenerateVectorError on zero-norm inputs.
Eigen::VectorXd score_agents(const Eigen::VectorXd& pooled,
                             const Eigen::MatrixXd& embeddings);

/// Temperature softmax with max-subtraction. Throws ParameterError on
/// temperature <= 0.
Eigen::VectorXd softmax_temperature(const Eigen::VectorXd& scores,
                                    double temperature);

/// Sample agents without replacement from `probs` until the selected set's
/// original mass reaches `mass_threshold`. Records the ordered sequence,
/// per-pick conditionals, and the exact sequence log-probability. Falls
/// back to the highest-probability agent (lowest index on ties) when no
/// agent is selectable; an exhausted candidate set that never reaches the
/// threshold also sets fallback_used.
SamplingOutcome sample_cumulative(const Eigen::VectorXd& probs,
                                  double mass_threshold, Rng& rng);

/// Exact log-probability of an ordered without-replacement sequence:
/// sum_r log( p_{i_r} / (1 - sum_{q<r} p_{i_q}) ). Pure function.
double sequence_log_prob(const Eigen::VectorXd& probs,
                         std::span<const int> ordered_indices);

/// Everything computed on the forward pass for one layer; sufficient to
/// replay the layer bit-identically.
struct LayerTrace {
    std::set<int> prior_selection;
    Eigen::VectorXd context;
    Eigen::MatrixXd x_tilde;
    AttentionResult attention;
    Eigen::VectorXd pooled;
    Eigen::VectorXd scores;
    Eigen::VectorXd probs;
};

/// Deterministic per-layer forward pass (everything up to sampling).
LayerTrace forward_layer(const StateEncoding& encoding,
                         const AdapterParams& params,
                         const std::set<int>& previously_selected);

/// Full pipeline: for each of L_max layers, pool cross-layer context,
/// attend, score, soft-sample. Returns the workflow with its total
/// log-probability. Per-layer sampling outcomes (and traces) are exposed
/// through the optional out-parameters for logging and replay.
LayeredWorkflow build_workflow(const StateEncoding& encoding,
                               const AdapterParams& params, Rng& rng,
                               std::vector<SamplingOutcome>* outcomes = nullptr,
                               std::vector<LayerTrace>* traces = nullptr);

} // namespace evomas
