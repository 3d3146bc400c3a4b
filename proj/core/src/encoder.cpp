#include "evomas/encoder.hpp"

#include "evomas/errors.hpp"
#include "evomas/rng.hpp"

#include <cmath>
#include <string>

namespace evomas {

namespace {

// Coordinate index for a named feature, salted per token row so rows stay
// independent under collisions.
int slot(std::string_view feature, std::uint64_t salt, int dim) {
    std::uint64_t h = fnv1a(feature, 0xcbf29ce484222325ull ^ salt);
    return static_cast<int>(h % static_cast<std::uint64_t>(dim));
}

// Pseudo-random direction derived from an integer identity.
Eigen::VectorXd hashed_direction(std::uint64_t id, std::uint64_t salt, int dim) {
    Eigen::VectorXd v(dim);
    std::uint64_t state = id ^ salt;
    for (int k = 0; k < dim; ++k) {
        std::uint64_t bits = splitmix64(state);
        v[k] = 2.0 * (static_cast<double>(bits >> 11) * 0x1.0p-53) - 1.0;
    }
    double norm = v.norm();
    if (norm > 0.0) v /= norm;
    return v;
}

void bound_row(Eigen::VectorXd& v) {
    double norm = v.norm();
    if (norm > 1.0) v /= norm;
}

constexpr std::uint64_t kSaltObjective = 0x9d3f1a2bull;
constexpr std::uint64_t kSaltActive = 0x51c0ffeeull;
constexpr std::uint64_t kSaltHistogram = 0x7e7e7e01ull;
constexpr std::uint64_t kSaltAssessment = 0xa55e55ull;
constexpr std::uint64_t kSaltStage = 0x57a6e5ull;

} // namespace

StateEncoding encode_state(const TaskState& state, const EncoderConfig& config) {
    if (config.dim < 4) throw ParameterError("encoder dim must be >= 4");
    const int d = config.dim;
    state.validate();

    Eigen::MatrixXd tokens = Eigen::MatrixXd::Zero(kEncoderTokens, d);

    // Row 0: task objective identity.
    tokens.row(0) = hashed_direction(state.objective_id, kSaltObjective, d);

    // Row 1: active subtask (stage type plus position); zero when terminal.
    if (state.plan.active_index) {
        int a = *state.plan.active_index;
        const auto& stage_type =
            state.plan.subtasks[static_cast<std::size_t>(a)].stage_type;
        Eigen::VectorXd v =
            hashed_direction(fnv1a(stage_type), kSaltActive, d);
        double pos = static_cast<double>(a + 1) /
                     static_cast<double>(state.plan.subtasks.size());
        v[slot("active_position", kSaltActive, d)] += pos;
        bound_row(v);
        tokens.row(1) = v;
    }

    // Row 2: status histogram, fractions of the plan.
    {
        auto counts = state.plan.histogram();
        double h = static_cast<double>(state.plan.subtasks.size());
        Eigen::VectorXd v = Eigen::VectorXd::Zero(d);
        v[slot("pending", kSaltHistogram, d)] += counts[0] / h;
        v[slot("completed", kSaltHistogram, d)] += counts[1] / h;
        v[slot("failed", kSaltHistogram, d)] += counts[2] / h;
        bound_row(v);
        tokens.row(2) = v;
    }

    // Row 3: last assessment plus refinement context; zero when absent.
    if (state.last_assessment) {
        const auto& assessment = *state.last_assessment;
        Eigen::VectorXd v = Eigen::VectorXd::Zero(d);
        std::string verdict_key =
            std::string("verdict:") + std::string(verdict_name(assessment.verdict));
        v[slot(verdict_key, kSaltAssessment, d)] += 1.0;
        v[slot("confidence", kSaltAssessment, d)] += assessment.confidence;
        double refine_progress = std::min(state.refine_count, 4) / 4.0;
        v[slot("refine_progress", kSaltAssessment, d)] += refine_progress;
        for (int j = 0; j < kFeedbackDim; ++j) {
            std::string key = "feedback" + std::to_string(j);
            v[slot(key, kSaltAssessment, d)] += assessment.feedback_features[j];
        }
        bound_row(v);
        tokens.row(3) = v;
    }

    // Row 4: stage counter, two-frequency positional features.
    {
        Eigen::VectorXd v = Eigen::VectorXd::Zero(d);
        double t = static_cast<double>(state.stage);
        v[slot("stage_sin0", kSaltStage, d)] += std::sin(t);
        v[slot("stage_cos0", kSaltStage, d)] += std::cos(t);
        v[slot("stage_sin1", kSaltStage, d)] += std::sin(t / 8.0);
        v[slot("stage_cos1", kSaltStage, d)] += std::cos(t / 8.0);
        bound_row(v);
        tokens.row(4) = v;
    }

    return StateEncoding{std::move(tokens)};
}

} // namespace evomas
