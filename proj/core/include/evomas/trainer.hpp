#pragma once

#include "evomas/adapter.hpp"
#include "evomas/env.hpp"
#include "evomas/trajectory.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace evomas {

enum class RewardMode { TerminalOnly, TerminalPlusProcess };
enum class BaselineMode { None, BatchMean };

struct TrainConfig {
    double learning_rate = 0.05;
    int batch_size = 16;
    long total_trajectories = 0;
    RewardMode reward_mode = RewardMode::TerminalOnly;
    double prm_weight = 0.5; // beta
    BaselineMode baseline = BaselineMode::None;
    long eval_every = 250;
    int eval_episodes = 200;
    long checkpoint_every = 0; // 0 = final checkpoint only
    std::uint64_t seed = 0;

    void validate() const;
};

/// Trajectory-level return: U(tau) alone, or U(tau) plus the normalized
/// process-reward term beta * (1/T) * sum_t r_t.
double trajectory_return(const Trajectory& trajectory, const TrainConfig& config);

struct UpdateResult {
    double update_norm = 0.0; // L2 norm of the applied parameter delta
    double mean_return = 0.0;
};

/// One REINFORCE ascent step from a batch of recorded trajectories:
/// grad = mean_b (return_b - baseline) * sum_t grad log P(G_t | s_t).
/// A batch whose centered returns are all zero leaves the parameters
/// bit-identical. Throws ValidationError on an empty batch.
UpdateResult reinforce_update(AdapterParams& params,
                              const std::vector<Trajectory>& batch,
                              const TrainConfig& config);

/// Mean terminal utility over fresh rollouts; episode i uses
/// environments[i % environments.size()]. Never mutates parameters.
double evaluate(const AdapterParams& params,
                const std::vector<Environment>& environments, int episodes,
                std::uint64_t seed);

struct CurvePoint {
    long trajectories = 0;
    double mean_return = 0.0;
    double validation_success = 0.0;
    double update_norm = 0.0;
};

/// Optional observers used by the CLI for streaming logs and checkpoints.
struct TrainHooks {
    std::function<void(const Trajectory&, long index)> on_trajectory;
    std::function<void(const CurvePoint&)> on_point;
    std::function<void(const AdapterParams&, long trajectories)> on_checkpoint;
};

struct TrainResult {
    AdapterParams params;
    std::vector<CurvePoint> curve;
    long trajectories = 0;
};

/// Batched REINFORCE training loop with periodic held-out evaluation.
/// Deterministic for a fixed seed.
TrainResult train(const Environment& environment, AdapterParams initial,
                  const TrainConfig& config, const TrainHooks& hooks = {});

} // namespace evomas
