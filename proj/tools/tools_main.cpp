// evomas command-line interface: train / eval / inspect / oracle-check.

#include "evomas/autograd.hpp"
#include "evomas/checkpoint.hpp"
#include "evomas/config.hpp"
#include "evomas/errors.hpp"
#include "evomas/oracle.hpp"
#include "evomas/serialize.hpp"
#include "evomas/trainer.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>

namespace fs = std::filesystem;
using namespace evomas;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitBadConfig = 2;
constexpr int kExitIoFailure = 3;
constexpr int kExitCorruptCheckpoint = 4;

std::optional<std::uint64_t> env_seed_override() {
    const char* raw = std::getenv("EVOMAS_SEED");
    if (!raw || !*raw) return std::nullopt;
    try {
        return std::stoull(raw);
    } catch (const std::exception&) {
        throw ConfigError("EVOMAS_SEED is not an unsigned integer");
    }
}

std::uint64_t resolve_seed(std::uint64_t config_seed,
                           const std::optional<std::uint64_t>& flag_seed) {
    if (auto env = env_seed_override()) return *env;
    if (flag_seed) return *flag_seed;
    return config_seed;
}

std::optional<RunConfig> try_load_config(const std::string& path) {
    try {
        return load_run_config(path);
    } catch (const Error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return std::nullopt;
    }
}

int cmd_train(const std::string& config_path, const std::string& out_dir,
              const std::optional<std::uint64_t>& flag_seed) {
    std::optional<RunConfig> loaded = try_load_config(config_path);
    if (!loaded) return kExitBadConfig;
    RunConfig& run = *loaded;
    run.train.seed = resolve_seed(run.train.seed, flag_seed);

    fs::path out(out_dir);
    std::ofstream curve, log;
    try {
        fs::create_directories(out);
        curve.open(out / "curve.csv", std::ios::trunc);
        log.open(out / "trajectories.jsonl", std::ios::trunc);
        if (!curve || !log) throw std::runtime_error("cannot open output files");
    } catch (const std::exception& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return kExitIoFailure;
    }

    std::string hash_hex = to_hex(run.config_hash);
    curve << "# config_hash=" << hash_hex << "\n";
    curve << "trajectories,mean_return,validation_success,update_norm\n";
    {
        ordered_json meta;
        meta["type"] = "meta";
        meta["config_hash"] = hash_hex;
        meta["seed"] = run.train.seed;
        log << meta.dump() << "\n";
    }

    auto write_checkpoint = [&](const AdapterParams& params, long count,
                                const std::string& name) {
        Checkpoint ckpt;
        ckpt.params = params;
        ckpt.trajectories = count;
        ckpt.rng_digest = derive_seed(run.train.seed,
                                      static_cast<std::uint64_t>(count));
        ckpt.config_hash = run.config_hash;
        save_checkpoint(ckpt, out / name);
    };

    TrainHooks hooks;
    hooks.on_trajectory = [&](const Trajectory& trajectory, long index) {
        ordered_json j = trajectory_to_json(trajectory);
        j["index"] = index;
        log << j.dump() << "\n";
    };
    hooks.on_point = [&](const CurvePoint& point) {
        curve << point.trajectories << "," << format_double(point.mean_return)
              << "," << format_double(point.validation_success) << ","
              << format_double(point.update_norm) << "\n";
        std::cerr << "[train] trajectories=" << point.trajectories
                  << " mean_return=" << point.mean_return
                  << " validation=" << point.validation_success
                  << " update_norm=" << point.update_norm << "\n";
    };
    hooks.on_checkpoint = [&](const AdapterParams& params, long count) {
        write_checkpoint(params, count,
                         "checkpoint_" + std::to_string(count) + ".ckpt");
    };

    try {
        AdapterParams initial = run.make_initial_params();
        TrainResult result = train(run.environment, initial, run.train, hooks);
        write_checkpoint(result.params, result.trajectories,
                         "checkpoint_final.ckpt");
        curve.flush();
        log.flush();
        if (!curve || !log) throw std::runtime_error("output write failed");
    } catch (const Error& e) {
        std::cerr << "train error: " << e.what() << "\n";
        return kExitBadConfig;
    } catch (const std::exception& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return kExitIoFailure;
    }
    return kExitOk;
}

int cmd_eval(const std::string& checkpoint_path, const std::string& config_path,
             int episodes, const std::optional<std::uint64_t>& flag_seed) {
    std::optional<RunConfig> loaded = try_load_config(config_path);
    if (!loaded) return kExitBadConfig;
    RunConfig& run = *loaded;
    Checkpoint ckpt;
    try {
        ckpt = load_checkpoint(checkpoint_path);
    } catch (const CheckpointError& e) {
        std::cerr << "checkpoint error: " << e.what() << "\n";
        return kExitCorruptCheckpoint;
    }
    std::uint64_t seed = resolve_seed(run.train.seed, flag_seed);
    double rate = evaluate(ckpt.params, {run.environment}, episodes, seed);
    std::cout << "success_rate " << format_double(rate) << " episodes "
              << episodes << " seed " << seed << "\n";
    return kExitOk;
}

int cmd_inspect(const std::string& checkpoint_path, const std::string& state_path,
                const std::string& out_path) {
    Checkpoint ckpt;
    try {
        ckpt = load_checkpoint(checkpoint_path);
    } catch (const CheckpointError& e) {
        std::cerr << "checkpoint error: " << e.what() << "\n";
        return kExitCorruptCheckpoint;
    }
    TaskState state;
    try {
        std::ifstream in(state_path);
        if (!in) throw ConfigError("cannot open state fixture: " + state_path);
        ordered_json j = ordered_json::parse(in);
        state = task_state_from_json(j);
    } catch (const std::exception& e) {
        std::cerr << "state fixture error: " << e.what() << "\n";
        return kExitBadConfig;
    }

    StateEncoding enc = encode_state(state, EncoderConfig{ckpt.params.dim()});
    ordered_json record = snapshot_record(enc, ckpt.params, state.stage);
    record["config_hash"] = to_hex(ckpt.config_hash);
    if (out_path.empty()) {
        std::cout << record.dump() << "\n";
    } else {
        std::ofstream out(out_path, std::ios::trunc);
        out << record.dump() << "\n";
        if (!out) {
            std::cerr << "i/o error writing " << out_path << "\n";
            return kExitIoFailure;
        }
    }
    return kExitOk;
}

struct OracleCheckOptions {
    int pool_size = 4;
    int cases = 5;
    long mc_samples = 100000;
    int grad_instances = 20;
    std::uint64_t seed = 7;
    bool corrupt = false; // test hook: perturb one probability vector
};

int cmd_oracle_check(const OracleCheckOptions& opt) {
    if (opt.pool_size > oracle::kMaxEnumerationAgents) {
        std::cerr << "capacity error: enumeration capped at "
                  << oracle::kMaxEnumerationAgents << " agents\n";
        return kExitBadConfig;
    }
    if (opt.pool_size < 1 || opt.cases < 1) {
        std::cerr << "capacity error: need at least one agent and one case\n";
        return kExitBadConfig;
    }

    bool all_ok = true;
    auto report = [&all_ok](const std::string& name, bool ok, double value) {
        all_ok = all_ok && ok;
        std::cout << (ok ? "PASS " : "FAIL ") << name << " (" << value << ")\n";
    };

    Rng rng = make_rng(opt.seed, 0x0c0ffeeull);
    double worst_sum_defect = 0.0;
    double worst_logprob_error = 0.0;
    double worst_mc_sigma = 0.0;
    for (int c = 0; c < opt.cases; ++c) {
        Eigen::VectorXd probs(opt.pool_size);
        double total = 0.0;
        for (int i = 0; i < opt.pool_size; ++i) {
            probs[i] = -std::log(std::max(uniform01(rng), 1e-12));
            total += probs[i];
        }
        probs /= total;
        if (opt.corrupt && c == 0) probs[0] *= 1.5; // deliberately broken
        double rho = 0.05 + 0.9 * uniform01(rng);

        std::vector<oracle::SequenceProb> enumerated;
        try {
            enumerated = oracle::enumerate_stopped_sequences(probs, rho);
        } catch (const Error& e) {
            std::cout << "FAIL enumeration (" << e.what() << ")\n";
            all_ok = false;
            continue;
        }
        double sum = 0.0;
        double log_error = 0.0;
        for (const auto& sp : enumerated) {
            sum += sp.probability;
            double lp = sequence_log_prob(
                probs, std::span<const int>(sp.sequence.data(), sp.sequence.size()));
            log_error = std::max(log_error,
                                 std::abs(std::log(sp.probability) - lp));
        }
        worst_sum_defect = std::max(worst_sum_defect, std::abs(sum - 1.0));
        worst_logprob_error = std::max(worst_logprob_error, log_error);

        // Monte Carlo agreement for sequences with probability >= 0.01.
        std::map<std::vector<int>, long> counts;
        for (long s = 0; s < opt.mc_samples; ++s) {
            SamplingOutcome outcome = sample_cumulative(probs, rho, rng);
            ++counts[outcome.ordered_indices];
        }
        for (const auto& sp : enumerated) {
            if (sp.probability < 0.01) continue;
            double expected = sp.probability * static_cast<double>(opt.mc_samples);
            double sigma = std::sqrt(expected * (1.0 - sp.probability));
            double observed = static_cast<double>(counts[sp.sequence]);
            if (sigma > 0.0) {
                worst_mc_sigma = std::max(worst_mc_sigma,
                                          std::abs(observed - expected) / sigma);
            }
        }
    }
    report("sequence-probabilities-sum-to-one", worst_sum_defect <= 1e-9,
           worst_sum_defect);
    report("log-prob-matches-enumeration", worst_logprob_error <= 1e-12,
           worst_logprob_error);
    report("monte-carlo-within-3-sigma", worst_mc_sigma <= 3.0, worst_mc_sigma);

    // Gradient vs central finite differences on generic random instances
    // (plain random embeddings; the training init clusters rows and its
    // near-symmetric gradients drown in finite-difference rounding noise).
    double worst_grad_error = 0.0;
    Rng grad_rng = make_rng(opt.seed, 0x6badull);
    for (int i = 0; i < opt.grad_instances; ++i) {
        AdapterParams params = AdapterParams::init(4, 8, grad_rng());
        params.temperature = 0.25;
        params.mass_threshold = 0.6;
        for (int r = 0; r < 4; ++r) {
            for (int c = 0; c < 8; ++c) {
                params.embeddings(r, c) = 2.0 * uniform01(grad_rng) - 1.0;
            }
        }
        TaskTemplate task{{"Retrieve", "Compute"}, 0.0, 0};
        TaskState state = init_state(task);
        StateEncoding enc = encode_state(state, EncoderConfig{8});
        Rng sample_rng = make_rng(grad_rng());
        LayeredWorkflow workflow = build_workflow(enc, params, sample_rng);
        worst_grad_error = std::max(
            worst_grad_error, finite_diff_check(enc, params, workflow, 1e-6));
    }
    report("gradient-matches-finite-differences", worst_grad_error < 1e-4,
           worst_grad_error);

    return all_ok ? kExitOk : kExitCheckFailed;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"EvoMAS workflow-adapter training and analysis"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "out", checkpoint_path, state_path;
    std::string inspect_out;
    int episodes = 200;
    std::optional<std::uint64_t> flag_seed;

    auto* train_cmd = app.add_subcommand("train", "Train the workflow adapter");
    train_cmd->add_option("--config", config_path, "run configuration file")
        ->required();
    train_cmd->add_option("--out", out_dir, "output directory");
    train_cmd->add_option("--seed", flag_seed, "override config seed");

    auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint");
    eval_cmd->add_option("--checkpoint", checkpoint_path, "checkpoint file")
        ->required();
    eval_cmd->add_option("--config", config_path, "environment configuration")
        ->required();
    eval_cmd->add_option("--episodes", episodes, "evaluation episodes");
    eval_cmd->add_option("--seed", flag_seed, "override config seed");

    auto* inspect_cmd =
        app.add_subcommand("inspect", "Emit per-layer selection probabilities");
    inspect_cmd->add_option("--checkpoint", checkpoint_path, "checkpoint file")
        ->required();
    inspect_cmd->add_option("--state", state_path, "task-state fixture (JSON)")
        ->required();
    inspect_cmd->add_option("--out", inspect_out, "output file (default stdout)");

    OracleCheckOptions oracle_opt;
    auto* oracle_cmd =
        app.add_subcommand("oracle-check", "Run oracle self-verification");
    oracle_cmd->add_option("--n", oracle_opt.pool_size, "distribution size");
    oracle_cmd->add_option("--cases", oracle_opt.cases, "random (p, rho) cases");
    oracle_cmd->add_option("--mc-samples", oracle_opt.mc_samples,
                           "Monte Carlo samples per case");
    oracle_cmd->add_option("--grad-instances", oracle_opt.grad_instances,
                           "finite-difference instances");
    oracle_cmd->add_option("--seed", oracle_opt.seed, "rng seed");
    oracle_cmd->add_flag("--corrupt", oracle_opt.corrupt)->group(""); // test hook

    CLI11_PARSE(app, argc, argv);

    try {
        if (*train_cmd) return cmd_train(config_path, out_dir, flag_seed);
        if (*eval_cmd) {
            return cmd_eval(checkpoint_path, config_path, episodes, flag_seed);
        }
        if (*inspect_cmd) {
            return cmd_inspect(checkpoint_path, state_path, inspect_out);
        }
        if (*oracle_cmd) {
            if (auto env = env_seed_override()) oracle_opt.seed = *env;
            return cmd_oracle_check(oracle_opt);
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitBadConfig;
    } catch (const CapacityError& e) {
        std::cerr << "capacity error: " << e.what() << "\n";
        return kExitBadConfig;
    } catch (const CheckpointError& e) {
        std::cerr << "checkpoint error: " << e.what() << "\n";
        return kExitCorruptCheckpoint;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIoFailure;
    }
    return kExitOk;
}
