#include "evomas/autograd.hpp"

#include "evomas/errors.hpp"

#include <cmath>

namespace evomas {

ParamGradients ParamGradients::zeros(const AdapterParams& params) {
    ParamGradients g;
    g.d_embeddings =
        Eigen::MatrixXd::Zero(params.embeddings.rows(), params.embeddings.cols());
    g.d_w_query = Eigen::MatrixXd::Zero(params.w_query.rows(), params.w_query.cols());
    g.d_w_key = Eigen::MatrixXd::Zero(params.w_key.rows(), params.w_key.cols());
    g.d_w_value = Eigen::MatrixXd::Zero(params.w_value.rows(), params.w_value.cols());
    return g;
}

ParamGradients& ParamGradients::operator+=(const ParamGradients& other) {
    d_embeddings += other.d_embeddings;
    d_w_query += other.d_w_query;
    d_w_key += other.d_w_key;
    d_w_value += other.d_w_value;
    return *this;
}

ParamGradients& ParamGradients::operator*=(double scale) {
    d_embeddings *= scale;
    d_w_query *= scale;
    d_w_key *= scale;
    d_w_value *= scale;
    return *this;
}

double ParamGradients::squared_norm() const {
    return d_embeddings.squaredNorm() + d_w_query.squaredNorm() +
           d_w_key.squaredNorm() + d_w_value.squaredNorm();
}

bool ParamGradients::all_finite() const {
    return d_embeddings.allFinite() && d_w_query.allFinite() &&
           d_w_key.allFinite() && d_w_value.allFinite();
}

ForwardTape replay_forward(const StateEncoding& encoding,
                           const AdapterParams& params,
                           const std::vector<std::vector<int>>& layers) {
    ForwardTape tape;
    tape.sequences = layers;
    std::set<int> selected_so_far;
    for (const auto& sequence : layers) {
        LayerTrace trace = forward_layer(encoding, params, selected_so_far);
        tape.log_prob += sequence_log_prob(
            trace.probs, std::span<const int>(sequence.data(), sequence.size()));
        selected_so_far.insert(sequence.begin(), sequence.end());
        tape.layers.push_back(std::move(trace));
    }
    return tape;
}

namespace {

// d logP / d p for one recorded sequence under the truncated product
// formula; the stopping decision itself carries no gradient.
Eigen::VectorXd grad_wrt_probs(const Eigen::VectorXd& probs,
                               const std::vector<int>& sequence) {
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(probs.size());
    double mass_before = 0.0;
    for (std::size_t r = 0; r < sequence.size(); ++r) {
        int idx = sequence[r];
        grad[idx] += 1.0 / probs[idx];
        if (r > 0) {
            double denominator = 1.0 - mass_before;
            for (std::size_t q = 0; q < r; ++q) {
                grad[sequence[q]] += 1.0 / denominator;
            }
        }
        mass_before += probs[idx];
    }
    return grad;
}

} // namespace

ParamGradients grad_log_prob(const StateEncoding& encoding,
                             const AdapterParams& params,
                             const LayeredWorkflow& workflow) {
    params.validate();
    if (encoding.dim() != params.dim()) {
        throw ShapeError("encoding and adapter disagree on dim");
    }
    const int n = params.pool_size();
    const int d = params.dim();
    const double scale =
        params.scale_attention ? 1.0 / std::sqrt(static_cast<double>(d)) : 1.0;

    ForwardTape tape = replay_forward(encoding, params, workflow.layers);
    ParamGradients grads = ParamGradients::zeros(params);

    for (std::size_t layer = 0; layer < tape.layers.size(); ++layer) {
        const LayerTrace& trace = tape.layers[layer];
        const std::vector<int>& sequence = tape.sequences[layer];

        // logP -> p -> alpha (temperature softmax Jacobian).
        Eigen::VectorXd g_p = grad_wrt_probs(trace.probs, sequence);
        double weighted = g_p.dot(trace.probs);
        Eigen::VectorXd g_alpha(n);
        for (int i = 0; i < n; ++i) {
            g_alpha[i] =
                trace.probs[i] * (g_p[i] - weighted) / params.temperature;
        }

        // alpha -> pooled query and embeddings (cosine).
        double pooled_norm = trace.pooled.norm();
        Eigen::VectorXd pooled_hat = trace.pooled / pooled_norm;
        Eigen::VectorXd g_pooled = Eigen::VectorXd::Zero(d);
        for (int i = 0; i < n; ++i) {
            Eigen::VectorXd row = params.embeddings.row(i).transpose();
            double row_norm = row.norm();
            Eigen::VectorXd row_hat = row / row_norm;
            double alpha = trace.scores[i];
            g_pooled += g_alpha[i] / pooled_norm * (row_hat - alpha * pooled_hat);
            grads.d_embeddings.row(i) +=
                (g_alpha[i] / row_norm * (pooled_hat - alpha * row_hat))
                    .transpose();
        }

        // pooled -> attended rows (mean pool).
        const Eigen::MatrixXd& attn_weights = trace.attention.weights;
        const Eigen::Index rows = trace.x_tilde.rows();
        Eigen::MatrixXd g_attended(rows, d);
        for (Eigen::Index r = 0; r < rows; ++r) {
            g_attended.row(r) =
                g_pooled.transpose() / static_cast<double>(rows);
        }

        // attended = A V.
        Eigen::MatrixXd values = params.ablate_value_projection
                                     ? params.embeddings
                                     : params.embeddings * params.w_value;
        Eigen::MatrixXd g_weights = g_attended * values.transpose();
        Eigen::MatrixXd g_values = attn_weights.transpose() * g_attended;

        // A = rowsoftmax(Z).
        Eigen::MatrixXd g_logits(rows, n);
        for (Eigen::Index r = 0; r < rows; ++r) {
            double dot = g_weights.row(r).dot(attn_weights.row(r));
            g_logits.row(r) =
                attn_weights.row(r).cwiseProduct(g_weights.row(r)).array() -
                attn_weights.row(r).array() * dot;
        }

        // Z = scale * Q K^T.
        Eigen::MatrixXd keys = params.embeddings * params.w_key;
        Eigen::MatrixXd queries = trace.x_tilde * params.w_query;
        Eigen::MatrixXd g_queries = scale * g_logits * keys;
        Eigen::MatrixXd g_keys = scale * g_logits.transpose() * queries;

        // Projections.
        grads.d_w_query += trace.x_tilde.transpose() * g_queries;
        grads.d_w_key += params.embeddings.transpose() * g_keys;
        grads.d_embeddings += g_keys * params.w_key.transpose();
        if (params.ablate_value_projection) {
            grads.d_embeddings += g_values;
        } else {
            grads.d_w_value += params.embeddings.transpose() * g_values;
            grads.d_embeddings += g_values * params.w_value.transpose();
        }

        // Context row of X~ feeds back into the embeddings pooled earlier.
        Eigen::MatrixXd g_x_tilde = g_queries * params.w_query.transpose();
        const std::set<int>& prior = trace.prior_selection;
        if (!prior.empty()) {
            Eigen::RowVectorXd g_context = g_x_tilde.row(rows - 1);
            double share = 1.0 / static_cast<double>(prior.size());
            for (int idx : prior) {
                grads.d_embeddings.row(idx) += share * g_context;
            }
        }
    }
    return grads;
}

double finite_diff_check(const StateEncoding& encoding,
                         const AdapterParams& params,
                         const LayeredWorkflow& workflow, double step) {
    if (!(step > 0.0)) throw ParameterError("finite-difference step must be > 0");

    ParamGradients analytic = grad_log_prob(encoding, params, workflow);
    std::vector<const double*> analytic_entries;
    auto collect = [&analytic_entries](const Eigen::MatrixXd& m) {
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            for (Eigen::Index c = 0; c < m.cols(); ++c) {
                analytic_entries.push_back(&m(r, c));
            }
        }
    };
    collect(analytic.d_embeddings);
    collect(analytic.d_w_query);
    collect(analytic.d_w_key);
    collect(analytic.d_w_value);

    AdapterParams perturbed = params;
    std::vector<double*> entries = perturbed.parameter_entries();
    double max_relative_error = 0.0;
    for (std::size_t k = 0; k < entries.size(); ++k) {
        double original = *entries[k];
        *entries[k] = original + step;
        double plus = replay_forward(encoding, perturbed, workflow.layers).log_prob;
        *entries[k] = original - step;
        double minus = replay_forward(encoding, perturbed, workflow.layers).log_prob;
        *entries[k] = original;
        double numeric = (plus - minus) / (2.0 * step);
        double error = std::abs(*analytic_entries[k] - numeric) /
                       std::max(std::abs(numeric), 1e-8);
        max_relative_error = std::max(max_relative_error, error);
    }
    return max_relative_error;
}

} // namespace evomas
