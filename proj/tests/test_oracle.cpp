#include "evomas/adapter.hpp"
#include "evomas/errors.hpp"
#include "evomas/oracle.hpp"

#include <doctest.h>

#include <cmath>
#include <map>

using namespace evomas;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> values) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(values.size()));
    Eigen::Index i = 0;
    for (double x : values) v[i++] = x;
    return v;
}

double enumeration_total(const std::vector<oracle::SequenceProb>& seqs) {
    double total = 0.0;
    for (const auto& sp : seqs) total += sp.probability;
    return total;
}

} // namespace

TEST_CASE("single-agent distribution enumerates to one sequence") {
    auto seqs = oracle::enumerate_stopped_sequences(vec({1.0}), 0.7);
    REQUIRE(seqs.size() == 1);
    CHECK(seqs[0].sequence == std::vector<int>{0});
    CHECK(seqs[0].probability == doctest::Approx(1.0));
}

TEST_CASE("two equal agents at rho 0.5 stop after one pick") {
    auto seqs = oracle::enumerate_stopped_sequences(vec({0.5, 0.5}), 0.5);
    REQUIRE(seqs.size() == 2);
    std::map<std::vector<int>, double> by_seq;
    for (const auto& sp : seqs) by_seq[sp.sequence] = sp.probability;
    CHECK(by_seq[{0}] == doctest::Approx(0.5));
    CHECK(by_seq[{1}] == doctest::Approx(0.5));
}

TEST_CASE("worked enumeration for p=(0.7,0.2,0.1), rho=0.6") {
    auto seqs = oracle::enumerate_stopped_sequences(vec({0.7, 0.2, 0.1}), 0.6);
    std::map<std::vector<int>, double> by_seq;
    for (const auto& sp : seqs) by_seq[sp.sequence] = sp.probability;
    REQUIRE(by_seq.size() == 5);
    CHECK(by_seq[{0}] == doctest::Approx(0.7).epsilon(1e-12));
    CHECK(by_seq[{1, 0}] == doctest::Approx(0.2 * 0.7 / 0.8).epsilon(1e-12));
    CHECK(by_seq[{1, 2, 0}] == doctest::Approx(0.025).epsilon(1e-12));
    CHECK(by_seq[{2, 0}] == doctest::Approx(0.1 * 0.7 / 0.9).epsilon(1e-12));
    CHECK(by_seq[{2, 1, 0}] == doctest::Approx(0.1 * (0.2 / 0.9)).epsilon(1e-12));
    CHECK(enumeration_total(seqs) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("enumerated probabilities sum to one for random cases") {
    Rng rng = make_rng(11);
    for (int n = 2; n <= 5; ++n) {
        for (int trial = 0; trial < 25; ++trial) {
            Eigen::VectorXd p(n);
            double total = 0.0;
            for (int i = 0; i < n; ++i) {
                p[i] = -std::log(std::max(uniform01(rng), 1e-12));
                total += p[i];
            }
            p /= total;
            double rho = 0.05 + 0.95 * uniform01(rng);
            auto seqs = oracle::enumerate_stopped_sequences(p, rho);
            CHECK(std::abs(enumeration_total(seqs) - 1.0) <= 1e-9);

            // The adapter's pure log-prob agrees with every enumerated branch.
            for (const auto& sp : seqs) {
                double lp = sequence_log_prob(
                    p, std::span<const int>(sp.sequence.data(), sp.sequence.size()));
                CHECK(std::abs(std::log(sp.probability) - lp) <= 1e-12);
            }
        }
    }
}

TEST_CASE("enumeration guards its capacity") {
    Eigen::VectorXd p = Eigen::VectorXd::Constant(12, 1.0 / 12.0);
    CHECK_THROWS_AS(oracle::enumerate_stopped_sequences(p, 0.5), CapacityError);
    CHECK_THROWS_AS(oracle::enumerate_stopped_sequences(vec({0.9, 0.2}), 0.5),
                    ValidationError);
    CHECK_THROWS_AS(oracle::enumerate_stopped_sequences(vec({0.5, 0.5}), 0.0),
                    ParameterError);
}

namespace {

OutcomeModel simple_model(std::map<std::string, std::set<RoleTag>> required) {
    OutcomeModel model;
    model.required_roles = std::move(required);
    return model;
}

} // namespace

TEST_CASE("exact success is 1 for a forced-success environment") {
    AgentPool pool({{0, "io", RoleTag::IO, {}}});
    TaskTemplate task{{"Solve", "Check"}, 0.0, 0};
    OutcomeModel model = simple_model({{"Solve", {RoleTag::IO}},
                                       {"Check", {RoleTag::IO}}});
    oracle::FixedDistributionPolicy uniform{vec({1.0}), 0.5, 3};
    double v = oracle::exact_policy_success(uniform, task, pool, model, 4);
    CHECK(v == doctest::Approx(1.0));
}

TEST_CASE("exact success is 0 when the required role is absent") {
    AgentPool pool = pool_preset(PoolPreset::Four);
    TaskTemplate task{{"Solve"}, 0.0, 0};
    OutcomeModel model = simple_model({{"Solve", {RoleTag::SelfRefine}}});
    Eigen::VectorXd uniform = Eigen::VectorXd::Constant(4, 0.25);
    oracle::FixedDistributionPolicy policy{uniform, 0.5, 3};
    CHECK(oracle::exact_policy_success(policy, task, pool, model, 4) ==
          doctest::Approx(0.0));
}

TEST_CASE("DP value matches hand-computed two-step chain") {
    // One agent, capability c per stage, H=2, T=2, no refines usable.
    AgentPool pool({{0, "io", RoleTag::IO, {{"A", 0.6}, {"B", 0.7}}}});
    TaskTemplate task{{"A", "B"}, 0.0, 0};
    OutcomeModel model = simple_model({{"A", {RoleTag::IO}}, {"B", {RoleTag::IO}}});
    oracle::FixedDistributionPolicy policy{vec({1.0}), 1.0, 1};
    double v = oracle::exact_policy_success(policy, task, pool, model, 2);
    CHECK(v == doctest::Approx(0.6 * 0.7).epsilon(1e-12));

    // With one retry step available either stage may refine once.
    double v3 = oracle::exact_policy_success(policy, task, pool, model, 3);
    double expected = 0.6 * 0.7 + 0.6 * 0.3 * 0.7 + 0.4 * 0.6 * 0.7;
    CHECK(v3 == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("early exit in the distribution caps success") {
    // Two agents: the required one and an early-exit one. Single layer,
    // rho forces exactly one pick. H=2 so an early exit at step 1 fails.
    AgentPool pool({{0, "io", RoleTag::IO, {}},
                    {1, "early_exit", RoleTag::EarlyExit, {}}});
    TaskTemplate task{{"A", "B"}, 0.0, 0};
    OutcomeModel model = simple_model({{"A", {RoleTag::IO}}, {"B", {RoleTag::IO}}});
    model.max_refines = 0;
    oracle::FixedDistributionPolicy policy{vec({0.5, 0.5}), 0.5, 1};
    // Success requires picking IO at both steps: 0.25 (verdicts deterministic).
    double v = oracle::exact_policy_success(policy, task, pool, model, 2);
    CHECK(v == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("best deterministic sequence finds the required-role chain") {
    AgentPool pool = pool_preset(PoolPreset::Four);
    TaskTemplate task{{"Find", "Join"}, 0.0, 0};
    OutcomeModel model = simple_model(
        {{"Find", {RoleTag::WebSearch}}, {"Join", {RoleTag::IO}}});
    // A budget with no slack makes the required-role chain the unique optimum.
    auto result = oracle::best_deterministic_sequence(task, pool, model, 2, 2);
    CHECK(result.success == doctest::Approx(1.0));
    REQUIRE(result.sequence.size() == 2);
    int web_search = *pool.find_role(RoleTag::WebSearch);
    int io = *pool.find_role(RoleTag::IO);
    CHECK(result.sequence[0].contains(web_search));
    CHECK(result.sequence[1].contains(io));
}

TEST_CASE("best deterministic sequence is 0 when no pool agent helps") {
    AgentPool pool = pool_preset(PoolPreset::Four);
    TaskTemplate task{{"Solve"}, 0.0, 0};
    OutcomeModel model = simple_model({{"Solve", {RoleTag::WebBrowser}}});
    auto result = oracle::best_deterministic_sequence(task, pool, model, 2, 2);
    CHECK(result.success == doctest::Approx(0.0));
}

TEST_CASE("ensemble bonus separates otherwise equal sequences") {
    AgentPool pool = pool_preset(PoolPreset::Four);
    TaskTemplate task{{"Find", "Join"}, 0.0, 0};
    OutcomeModel model = simple_model(
        {{"Find", {RoleTag::WebSearch}}, {"Join", {RoleTag::IO}}});
    model.ensemble_bonus = 0.3;
    std::vector<AgentSpec> agents = pool.agents();
    for (auto& agent : agents) {
        agent.capability = {{"Find", 0.6}, {"Join", 0.6}};
    }
    AgentPool capped(std::move(agents));

    auto best = oracle::best_deterministic_sequence(task, capped, model, 2, 2);
    // Bonus-using per-stage success 0.9 vs plain 0.6, two stages, no retries.
    CHECK(best.success == doctest::Approx(0.81).epsilon(1e-12));
    int ensemble = *capped.find_role(RoleTag::Ensemble);
    CHECK(best.sequence[0].contains(ensemble));

    int web_search = *capped.find_role(RoleTag::WebSearch);
    int io = *capped.find_role(RoleTag::IO);
    oracle::FixedWorkflowPolicy no_bonus{{LayeredWorkflow({{web_search}, {web_search}}),
                                          LayeredWorkflow({{io}, {io}})}};
    double plain = oracle::exact_policy_success(no_bonus, task, capped, model, 2);
    CHECK(plain == doctest::Approx(0.36).epsilon(1e-12));
    CHECK(best.success - plain == doctest::Approx(0.45).epsilon(1e-10));
}

TEST_CASE("adapter-policy DP respects its capacity bounds") {
    AgentPool pool = pool_preset(PoolPreset::Seven);
    TaskTemplate task{{"Solve"}, 0.0, 0};
    OutcomeModel model = simple_model({{"Solve", {RoleTag::IO}}});
    oracle::AdapterPolicy policy{AdapterParams::init(7, 8, 3), EncoderConfig{8}};
    CHECK_THROWS_AS(
        oracle::exact_policy_success(policy, task, pool, model, 4),
        CapacityError);
}
