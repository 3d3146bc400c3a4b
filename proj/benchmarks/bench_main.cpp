#include "evomas/autograd.hpp"
#include "evomas/config.hpp"
#include "evomas/oracle.hpp"
#include "evomas/trainer.hpp"

#include <benchmark/benchmark.h>

using namespace evomas;

namespace {

RunConfig bench_run() {
    return parse_run_config(
        "env.pool = seven\n"
        "env.stages = Retrieve, Compute, Verify\n"
        "env.required.Retrieve = web_search\n"
        "env.required.Compute = multi_generate\n"
        "env.required.Verify = self_refine\n"
        "train.seed = 1\n");
}

void BM_EncodeState(benchmark::State& state) {
    RunConfig run = bench_run();
    TaskState task_state = init_state(run.environment.task);
    for (auto _ : state) {
        benchmark::DoNotOptimize(encode_state(task_state, run.environment.encoder));
    }
}
BENCHMARK(BM_EncodeState);

void BM_BuildWorkflow(benchmark::State& state) {
    RunConfig run = bench_run();
    AdapterParams params = run.make_initial_params();
    StateEncoding enc =
        encode_state(init_state(run.environment.task), run.environment.encoder);
    Rng rng = make_rng(3);
    for (auto _ : state) {
        benchmark::DoNotOptimize(build_workflow(enc, params, rng));
    }
}
BENCHMARK(BM_BuildWorkflow);

void BM_GradLogProb(benchmark::State& state) {
    RunConfig run = bench_run();
    AdapterParams params = run.make_initial_params();
    StateEncoding enc =
        encode_state(init_state(run.environment.task), run.environment.encoder);
    Rng rng = make_rng(4);
    LayeredWorkflow workflow = build_workflow(enc, params, rng);
    for (auto _ : state) {
        benchmark::DoNotOptimize(grad_log_prob(enc, params, workflow));
    }
}
BENCHMARK(BM_GradLogProb);

void BM_Rollout(benchmark::State& state) {
    RunConfig run = bench_run();
    AdapterParams params = run.make_initial_params();
    std::uint64_t episode = 0;
    for (auto _ : state) {
        Rng rng = make_rng(11, episode++);
        benchmark::DoNotOptimize(run.environment.rollout(params, rng));
    }
}
BENCHMARK(BM_Rollout);

void BM_EnumerateStoppedSequences(benchmark::State& state) {
    int n = static_cast<int>(state.range(0));
    Eigen::VectorXd p = Eigen::VectorXd::Constant(n, 1.0 / n);
    for (auto _ : state) {
        benchmark::DoNotOptimize(oracle::enumerate_stopped_sequences(p, 0.95));
    }
}
BENCHMARK(BM_EnumerateStoppedSequences)->Arg(5)->Arg(7);

void BM_ExactUniformPolicySuccess(benchmark::State& state) {
    RunConfig run = bench_run();
    Eigen::VectorXd uniform = Eigen::VectorXd::Constant(7, 1.0 / 7.0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(oracle::exact_policy_success(
            oracle::FixedDistributionPolicy{uniform, 0.5, 3},
            run.environment.task, run.environment.pool, run.environment.model,
            run.environment.max_meta_steps));
    }
}
BENCHMARK(BM_ExactUniformPolicySuccess);

} // namespace

BENCHMARK_MAIN();
