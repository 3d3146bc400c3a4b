#include "evomas/trainer.hpp"

#include "evomas/autograd.hpp"
#include "evomas/errors.hpp"

#include <algorithm>
#include <cmath>

namespace evomas {

void TrainConfig::validate() const {
    // 0 is legal and means "roll out but never move": handy for ablations.
    if (!(learning_rate >= 0.0)) throw ParameterError("learning rate must be >= 0");
    if (batch_size < 1) throw ParameterError("batch size must be >= 1");
    if (total_trajectories < 0) {
        throw ParameterError("total trajectories must be >= 0");
    }
    if (!(prm_weight >= 0.0)) throw ParameterError("prm weight must be >= 0");
    if (eval_every < 1) throw ParameterError("eval interval must be >= 1");
    if (eval_episodes < 1) throw ParameterError("eval episodes must be >= 1");
    if (checkpoint_every < 0) {
        throw ParameterError("checkpoint interval must be >= 0");
    }
}

double trajectory_return(const Trajectory& trajectory, const TrainConfig& config) {
    double terminal = trajectory.terminal_utility;
    if (config.reward_mode == RewardMode::TerminalOnly) return terminal;
    if (trajectory.steps.empty()) return terminal;
    double process = 0.0;
    for (const auto& step : trajectory.steps) process += step.record.step_reward;
    process /= static_cast<double>(trajectory.steps.size());
    return terminal + config.prm_weight * process;
}

UpdateResult reinforce_update(AdapterParams& params,
                              const std::vector<Trajectory>& batch,
                              const TrainConfig& config) {
    if (batch.empty()) throw ValidationError("cannot update from an empty batch");

    std::vector<double> returns;
    returns.reserve(batch.size());
    double mean_return = 0.0;
    for (const auto& trajectory : batch) {
        returns.push_back(trajectory_return(trajectory, config));
        mean_return += returns.back();
    }
    mean_return /= static_cast<double>(batch.size());

    double baseline =
        config.baseline == BaselineMode::BatchMean ? mean_return : 0.0;

    // Skip zero-coefficient trajectories so an all-zero batch leaves the
    // parameters bit-identical.
    ParamGradients estimate = ParamGradients::zeros(params);
    bool any_nonzero = false;
    for (std::size_t b = 0; b < batch.size(); ++b) {
        double coefficient = returns[b] - baseline;
        if (coefficient == 0.0) continue;
        any_nonzero = true;
        ParamGradients trajectory_grad = ParamGradients::zeros(params);
        for (const auto& step : batch[b].steps) {
            StateEncoding enc{step.state_encoding};
            trajectory_grad += grad_log_prob(enc, params, step.workflow);
        }
        trajectory_grad *= coefficient;
        estimate += trajectory_grad;
    }
    if (!any_nonzero) return {0.0, mean_return};

    estimate *= 1.0 / static_cast<double>(batch.size());
    double scale = config.learning_rate;
    params.embeddings += scale * estimate.d_embeddings;
    params.w_query += scale * estimate.d_w_query;
    params.w_key += scale * estimate.d_w_key;
    params.w_value += scale * estimate.d_w_value;

    double update_norm = scale * std::sqrt(estimate.squared_norm());
    return {update_norm, mean_return};
}

double evaluate(const AdapterParams& params,
                const std::vector<Environment>& environments, int episodes,
                std::uint64_t seed) {
    if (episodes < 1) throw ParameterError("episodes must be >= 1");
    if (environments.empty()) throw ValidationError("no evaluation environments");
    double total = 0.0;
    for (int e = 0; e < episodes; ++e) {
        const Environment& env = environments[static_cast<std::size_t>(e) %
                                              environments.size()];
        Rng rng = make_rng(seed, 0xe7a1ull + static_cast<std::uint64_t>(e));
        Trajectory trajectory = env.rollout(params, rng);
        total += trajectory.terminal_utility;
    }
    return total / static_cast<double>(episodes);
}

TrainResult train(const Environment& environment, AdapterParams initial,
                  const TrainConfig& config, const TrainHooks& hooks) {
    config.validate();
    initial.validate();

    TrainResult result;
    result.params = std::move(initial);
    std::vector<Environment> eval_envs{environment};

    long done = 0;
    long next_eval = config.eval_every;
    long next_checkpoint =
        config.checkpoint_every > 0 ? config.checkpoint_every : -1;
    double window_return_sum = 0.0;
    long window_count = 0;
    double last_update_norm = 0.0;

    while (done < config.total_trajectories) {
        int batch_size = static_cast<int>(std::min<long>(
            config.batch_size, config.total_trajectories - done));
        std::vector<Trajectory> batch;
        batch.reserve(static_cast<std::size_t>(batch_size));
        for (int b = 0; b < batch_size; ++b) {
            Rng rng = make_rng(config.seed,
                               static_cast<std::uint64_t>(done + b));
            batch.push_back(environment.rollout(result.params, rng));
            if (hooks.on_trajectory) hooks.on_trajectory(batch.back(), done + b);
        }
        UpdateResult update = reinforce_update(result.params, batch, config);
        done += batch_size;
        last_update_norm = update.update_norm;
        window_return_sum +=
            update.mean_return * static_cast<double>(batch_size);
        window_count += batch_size;

        if (done >= next_eval || done == config.total_trajectories) {
            double validation =
                evaluate(result.params, eval_envs, config.eval_episodes,
                         derive_seed(config.seed, 0x5eedull));
            CurvePoint point;
            point.trajectories = done;
            point.mean_return =
                window_count > 0
                    ? window_return_sum / static_cast<double>(window_count)
                    : 0.0;
            point.validation_success = validation;
            point.update_norm = last_update_norm;
            result.curve.push_back(point);
            if (hooks.on_point) hooks.on_point(point);
            window_return_sum = 0.0;
            window_count = 0;
            while (next_eval <= done) next_eval += config.eval_every;
        }
        if (next_checkpoint > 0 && done >= next_checkpoint) {
            if (hooks.on_checkpoint) hooks.on_checkpoint(result.params, done);
            while (next_checkpoint <= done) {
                next_checkpoint += config.checkpoint_every;
            }
        }
    }
    result.trajectories = done;
    return result;
}

} // namespace evomas
