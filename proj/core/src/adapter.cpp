#include "evomas/adapter.hpp"

#include "evomas/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace evomas {

void AdapterParams::validate() const {
    if (!(temperature > 0.0)) throw ParameterError("temperature must be > 0");
    if (!(mass_threshold > 0.0 && mass_threshold <= 1.0)) {
        throw ParameterError("mass threshold must lie in (0, 1]");
    }
    if (max_layers < 1) throw ParameterError("max layers must be >= 1");
    if (embeddings.rows() < 1) throw ShapeError("embedding matrix has no rows");
    const auto d = embeddings.cols();
    if (w_query.rows() != d || w_query.cols() != d || w_key.rows() != d ||
        w_key.cols() != d || w_value.rows() != d || w_value.cols() != d) {
        throw ShapeError("projection matrices must be d x d");
    }
    if (!embeddings.allFinite() || !w_query.allFinite() || !w_key.allFinite() ||
        !w_value.allFinite()) {
        throw ValidationError("adapter parameters contain non-finite values");
    }
}

AdapterParams AdapterParams::init(int pool_size, int dim, std::uint64_t seed,
                                  double init_scale, double temperature,
                                  double mass_threshold, int max_layers) {
    if (pool_size < 1) throw ParameterError("pool size must be >= 1");
    if (dim < 1) throw ParameterError("dim must be >= 1");
    AdapterParams params;
    params.temperature = temperature;
    params.mass_threshold = mass_threshold;
    params.max_layers = max_layers;
    params.embeddings.resize(pool_size, dim);
    Rng rng = make_rng(seed, 0x0adaf7e5ull);
    // Box-Muller; two uniforms per normal draw keeps this library-agnostic.
    auto normal = [&rng]() {
        double u1 = std::max(uniform01(rng), 1e-300);
        double u2 = uniform01(rng);
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    };
    // Shared direction plus small per-agent noise: pairwise cosines start
    // near 1, so the initial selection distribution is near-uniform at any
    // temperature while rows remain free to separate during training.
    Eigen::VectorXd shared(dim);
    for (int k = 0; k < dim; ++k) shared[k] = normal();
    shared /= shared.norm();
    const double relative_noise = 0.15 / std::sqrt(static_cast<double>(dim));
    for (int i = 0; i < pool_size; ++i) {
        for (int k = 0; k < dim; ++k) {
            params.embeddings(i, k) =
                init_scale * (shared[k] + relative_noise * normal());
        }
    }
    params.w_query = Eigen::MatrixXd::Identity(dim, dim);
    params.w_key = Eigen::MatrixXd::Identity(dim, dim);
    params.w_value = Eigen::MatrixXd::Identity(dim, dim);
    params.validate();
    return params;
}

std::vector<double*> AdapterParams::parameter_entries() {
    std::vector<double*> out;
    out.reserve(static_cast<std::size_t>(embeddings.size() + w_query.size() +
                                         w_key.size() + w_value.size()));
    auto push = [&out](Eigen::MatrixXd& m) {
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            for (Eigen::Index c = 0; c < m.cols(); ++c) out.push_back(&m(r, c));
        }
    };
    push(embeddings);
    push(w_query);
    push(w_key);
    push(w_value);
    return out;
}

std::vector<const double*> AdapterParams::parameter_entries() const {
    auto mutable_entries =
        const_cast<AdapterParams*>(this)->parameter_entries();
    return {mutable_entries.begin(), mutable_entries.end()};
}

std::uint64_t AdapterParams::content_hash() const {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (const double* p : parameter_entries()) {
        h = fnv1a_bytes(p, sizeof(double), h);
    }
    h = fnv1a_bytes(&temperature, sizeof(double), h);
    h = fnv1a_bytes(&mass_threshold, sizeof(double), h);
    h = fnv1a_bytes(&max_layers, sizeof(int), h);
    return h;
}

Eigen::VectorXd layer_context(const std::set<int>& previously_selected,
                              const Eigen::MatrixXd& embeddings) {
    Eigen::VectorXd context = Eigen::VectorXd::Zero(embeddings.cols());
    if (previously_selected.empty()) return context;
    for (int idx : previously_selected) {
        if (idx < 0 || idx >= embeddings.rows()) {
            throw std::out_of_range("context index outside the pool");
        }
        context += embeddings.row(idx).transpose();
    }
    context /= static_cast<double>(previously_selected.size());
    return context;
}

AttentionResult cross_attention(const Eigen::MatrixXd& x_tilde,
                                const AdapterParams& params) {
    const auto d = params.embeddings.cols();
    if (x_tilde.cols() != d) {
        throw ShapeError("state tokens and embeddings disagree on dim");
    }
    Eigen::MatrixXd queries = x_tilde * params.w_query;
    Eigen::MatrixXd keys = params.embeddings * params.w_key;
    Eigen::MatrixXd values = params.ablate_value_projection
                                 ? params.embeddings
                                 : params.embeddings * params.w_value;

    double scale =
        params.scale_attention ? 1.0 / std::sqrt(static_cast<double>(d)) : 1.0;
    Eigen::MatrixXd logits = scale * (queries * keys.transpose());

    AttentionResult result;
    result.weights.resizeLike(logits);
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
        double row_max = logits.row(r).maxCoeff();
        Eigen::ArrayXd e = (logits.row(r).array() - row_max).exp();
        result.weights.row(r) = (e / e.sum()).matrix();
    }
    result.output = result.weights * values;
    return result;
}

Eigen::VectorXd pool_query(const Eigen::MatrixXd& attended) {
    if (attended.rows() < 1) throw ShapeError("cannot pool an empty matrix");
    return attended.colwise().mean().transpose();
}

Eigen::VectorXd score_agents(const Eigen::VectorXd& pooled,
                             const Eigen::MatrixXd& embeddings) {
    if (pooled.size() != embeddings.cols()) {
        throw ShapeError("pooled query and embeddings disagree on dim");
    }
    double pooled_norm = pooled.norm();
    if (!(pooled_norm > 0.0)) {
        throw DegenerateVectorError("pooled query has zero norm");
    }
    Eigen::VectorXd scores(embeddings.rows());
    for (Eigen::Index i = 0; i < embeddings.rows(); ++i) {
        double row_norm = embeddings.row(i).norm();
        if (!(row_norm > 0.0)) {
            throw DegenerateVectorError("agent embedding has zero norm");
        }
        scores[i] = embeddings.row(i).dot(pooled) / (pooled_norm * row_norm);
    }
    return scores;
}

Eigen::VectorXd softmax_temperature(const Eigen::VectorXd& scores,
                                    double temperature) {
    if (!(temperature > 0.0)) throw ParameterError("temperature must be > 0");
    Eigen::ArrayXd scaled = scores.array() / temperature;
    double max = scaled.maxCoeff();
    Eigen::ArrayXd e = (scaled - max).exp();
    return (e / e.sum()).matrix();
}

namespace {

void validate_probability_vector(const Eigen::VectorXd& probs) {
    if (probs.size() < 1) throw ValidationError("empty probability vector");
    double sum = 0.0;
    for (Eigen::Index i = 0; i < probs.size(); ++i) {
        double p = probs[i];
        if (!(p >= 0.0) || !std::isfinite(p)) {
            throw ValidationError("probability entries must be finite and >= 0");
        }
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
        throw ValidationError("probabilities must sum to 1 within 1e-9");
    }
}

int argmax_lowest_index(const Eigen::VectorXd& probs) {
    int best = 0;
    for (Eigen::Index i = 1; i < probs.size(); ++i) {
        if (probs[i] > probs[best]) best = static_cast<int>(i);
    }
    return best;
}

} // namespace

SamplingOutcome sample_cumulative(const Eigen::VectorXd& probs,
                                  double mass_threshold, Rng& rng) {
    if (!(mass_threshold > 0.0 && mass_threshold <= 1.0)) {
        throw ParameterError("mass threshold must lie in (0, 1]");
    }
    validate_probability_vector(probs);

    const int n = static_cast<int>(probs.size());
    SamplingOutcome outcome;
    std::vector<bool> picked(static_cast<std::size_t>(n), false);
    for (int i = 0; i < n; ++i) {
        if (probs[i] < kProbabilityFloor) outcome.excluded_indices.push_back(i);
    }

    double cumulative = 0.0;
    while (cumulative < mass_threshold) {
        double residual = 0.0;
        for (int i = 0; i < n; ++i) {
            if (!picked[static_cast<std::size_t>(i)] &&
                probs[i] >= kProbabilityFloor) {
                residual += probs[i];
            }
        }
        if (residual <= 0.0) break; // candidate set exhausted

        double u = uniform01(rng) * residual;
        int choice = -1;
        double acc = 0.0;
        for (int i = 0; i < n; ++i) {
            if (picked[static_cast<std::size_t>(i)] ||
                probs[i] < kProbabilityFloor) {
                continue;
            }
            acc += probs[i];
            choice = i;
            if (u < acc) break;
        }
        picked[static_cast<std::size_t>(choice)] = true;
        double conditional = probs[choice] / (1.0 - cumulative);
        outcome.ordered_indices.push_back(choice);
        outcome.pick_probs.push_back(conditional);
        outcome.log_prob += std::log(conditional);
        cumulative += probs[choice];
    }
    outcome.cumulative_mass = cumulative;

    if (outcome.ordered_indices.empty()) {
        // Degenerate distribution: fall back to the highest-probability
        // agent (lowest index on ties).
        int best = argmax_lowest_index(probs);
        outcome.ordered_indices.push_back(best);
        outcome.pick_probs.push_back(probs[best]);
        outcome.log_prob = std::log(probs[best]);
        outcome.cumulative_mass = probs[best];
        outcome.fallback_used = true;
    } else if (cumulative < mass_threshold) {
        // Exhausted the candidate set below the threshold (floor exclusions
        // or rounding at rho = 1); the stop inequality does not apply.
        outcome.fallback_used = true;
    }
    return outcome;
}

double sequence_log_prob(const Eigen::VectorXd& probs,
                         std::span<const int> ordered_indices) {
    validate_probability_vector(probs);
    if (ordered_indices.empty()) {
        throw ValidationError("sequence must contain at least one index");
    }
    std::vector<bool> seen(static_cast<std::size_t>(probs.size()), false);
    double log_prob = 0.0;
    double mass_before = 0.0;
    for (int idx : ordered_indices) {
        if (idx < 0 || idx >= probs.size()) {
            throw ValidationError("sequence index outside the distribution");
        }
        if (seen[static_cast<std::size_t>(idx)]) {
            throw ValidationError("sequence repeats an index");
        }
        seen[static_cast<std::size_t>(idx)] = true;
        log_prob += std::log(probs[idx] / (1.0 - mass_before));
        mass_before += probs[idx];
    }
    return log_prob;
}

LayerTrace forward_layer(const StateEncoding& encoding,
                         const AdapterParams& params,
                         const std::set<int>& previously_selected) {
    if (encoding.dim() != params.dim()) {
        throw ShapeError("encoding and adapter disagree on dim");
    }
    LayerTrace trace;
    trace.prior_selection = previously_selected;
    trace.context = layer_context(previously_selected, params.embeddings);
    trace.x_tilde.resize(encoding.rows() + 1, encoding.dim());
    trace.x_tilde.topRows(encoding.rows()) = encoding.tokens;
    trace.x_tilde.row(encoding.rows()) = trace.context.transpose();
    trace.attention = cross_attention(trace.x_tilde, params);
    trace.pooled = pool_query(trace.attention.output);
    trace.scores = score_agents(trace.pooled, params.embeddings);
    trace.probs = softmax_temperature(trace.scores, params.temperature);
    return trace;
}

LayeredWorkflow build_workflow(const StateEncoding& encoding,
                               const AdapterParams& params, Rng& rng,
                               std::vector<SamplingOutcome>* outcomes,
                               std::vector<LayerTrace>* traces) {
    params.validate();
    std::vector<std::vector<int>> layers;
    std::vector<bool> fallback;
    double total_log_prob = 0.0;
    std::set<int> selected_so_far;

    for (int layer = 0; layer < params.max_layers; ++layer) {
        LayerTrace trace = forward_layer(encoding, params, selected_so_far);
        SamplingOutcome outcome =
            sample_cumulative(trace.probs, params.mass_threshold, rng);
        total_log_prob += outcome.log_prob;
        fallback.push_back(outcome.fallback_used);
        layers.push_back(outcome.ordered_indices);
        selected_so_far.insert(outcome.ordered_indices.begin(),
                               outcome.ordered_indices.end());
        if (traces) traces->push_back(std::move(trace));
        if (outcomes) outcomes->push_back(std::move(outcome));
    }
    return LayeredWorkflow(std::move(layers), total_log_prob, std::move(fallback));
}

} // namespace evomas
