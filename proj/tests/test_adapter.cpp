#include "evomas/adapter.hpp"
#include "evomas/encoder.hpp"
#include "evomas/env.hpp"
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

TaskState three_stage_state() {
    TaskTemplate task{{"Retrieve", "Compute", "Verify"}, 0.0, 0};
    return init_state(task);
}

} // namespace

// ---------------------------------------------------------------- encoder

TEST_CASE("equal states encode bitwise-equal") {
    EncoderConfig cfg{16};
    TaskState a = three_stage_state();
    TaskState b = three_stage_state();
    StateEncoding ea = encode_state(a, cfg);
    StateEncoding eb = encode_state(b, cfg);
    CHECK(ea.tokens == eb.tokens);
    CHECK(ea.rows() == kEncoderTokens);
    CHECK(ea.dim() == 16);
}

TEST_CASE("stage counter changes only the stage token row") {
    EncoderConfig cfg{16};
    TaskState a = three_stage_state();
    TaskState b = a;
    b.stage = 3;
    Eigen::MatrixXd da = encode_state(a, cfg).tokens;
    Eigen::MatrixXd db = encode_state(b, cfg).tokens;
    for (int r = 0; r < kEncoderTokens; ++r) {
        if (r == 4) {
            CHECK(da.row(r) != db.row(r));
        } else {
            CHECK(da.row(r) == db.row(r));
        }
    }
}

TEST_CASE("fresh state encodes an all-zero assessment row") {
    StateEncoding enc = encode_state(three_stage_state(), EncoderConfig{16});
    CHECK(enc.tokens.row(3).norm() == 0.0);
    // every row bounded by 1
    for (int r = 0; r < enc.rows(); ++r) CHECK(enc.tokens.row(r).norm() <= 1.0 + 1e-15);
}

// ----------------------------------------------------------- layer context

TEST_CASE("layer context pools selected embeddings") {
    Eigen::MatrixXd E(3, 2);
    E << 1.0, 2.0, -1.0, 0.0, 3.0, 4.0;
    CHECK(layer_context({}, E).isZero());
    CHECK(layer_context({1}, E) == E.row(1).transpose());
    Eigen::VectorXd mean = layer_context({0, 2}, E);
    CHECK(mean[0] == doctest::Approx(2.0));
    CHECK(mean[1] == doctest::Approx(3.0));
}

// --------------------------------------------------------- cross attention

TEST_CASE("attention over a single key is the identity mixture") {
    AdapterParams params;
    params.embeddings = Eigen::MatrixXd(1, 2);
    params.embeddings << 0.3, -0.7;
    params.w_query = Eigen::MatrixXd::Identity(2, 2);
    params.w_key = Eigen::MatrixXd::Identity(2, 2);
    params.w_value = Eigen::MatrixXd::Identity(2, 2);
    Eigen::MatrixXd x(2, 2);
    x << 1.0, 0.0, 5.0, -2.0;
    AttentionResult r = cross_attention(x, params);
    for (int row = 0; row < 2; ++row) {
        CHECK(r.output.row(row) == params.embeddings.row(0));
        CHECK(r.weights(row, 0) == doctest::Approx(1.0));
    }
    // Scaling the queries cannot change a single-key softmax.
    AttentionResult r2 = cross_attention(3.0 * x, params);
    CHECK(r2.output == r.output);
}

TEST_CASE("attention weight rows sum to one") {
    AdapterParams params = AdapterParams::init(5, 8, 99);
    Eigen::MatrixXd x = Eigen::MatrixXd::Random(4, 8);
    AttentionResult r = cross_attention(x, params);
    for (int row = 0; row < 4; ++row) {
        CHECK(std::abs(r.weights.row(row).sum() - 1.0) <= 1e-12);
    }
    Eigen::MatrixXd bad = Eigen::MatrixXd::Random(4, 7);
    CHECK_THROWS_AS(cross_attention(bad, params), ShapeError);
}

TEST_CASE("worked d=2 attention example") {
    // Frozen from an independent dense-matrix evaluation.
    AdapterParams params;
    params.embeddings = Eigen::MatrixXd(2, 2);
    params.embeddings << 1.0, 2.0, -1.0, 0.0;
    params.w_query = Eigen::MatrixXd::Identity(2, 2);
    params.w_key = Eigen::MatrixXd(2, 2);
    params.w_key << 0.5, 0.0, 0.0, 0.5;
    params.w_value = Eigen::MatrixXd(2, 2);
    params.w_value << 1.0, 1.0, 0.0, 1.0;
    Eigen::MatrixXd x(2, 2);
    x << 1.0, 0.0, 0.5, -1.0;
    AttentionResult r = cross_attention(x, params);
    CHECK(r.weights(0, 0) == doctest::Approx(0.6697615493266569).epsilon(1e-12));
    CHECK(r.weights(0, 1) == doctest::Approx(0.3302384506733431).epsilon(1e-12));
    CHECK(r.weights(1, 0) == doctest::Approx(0.41252099916039026).epsilon(1e-12));
    CHECK(r.output(0, 0) == doctest::Approx(0.33952309865331376).epsilon(1e-12));
    CHECK(r.output(0, 1) == doctest::Approx(1.6790461973066275).epsilon(1e-12));
    CHECK(r.output(1, 0) == doctest::Approx(-0.17495800167921954).epsilon(1e-12));
    CHECK(r.output(1, 1) == doctest::Approx(0.650083996641561).epsilon(1e-12));

    Eigen::VectorXd pooled = pool_query(r.output);
    CHECK(pooled[0] == doctest::Approx(0.08228254848704711).epsilon(1e-12));
    CHECK(pooled[1] == doctest::Approx(1.1645650969740942).epsilon(1e-12));

    Eigen::VectorXd scores = score_agents(pooled, params.embeddings);
    CHECK(scores[0] == doctest::Approx(0.923722333579482).epsilon(1e-12));
    CHECK(scores[1] == doctest::Approx(-0.07047946992344808).epsilon(1e-12));
}

// -------------------------------------------------------------- pool query

TEST_CASE("pool query is the column mean") {
    Eigen::MatrixXd single(1, 3);
    single << 4.0, -1.0, 0.5;
    CHECK(pool_query(single) == single.row(0).transpose());

    Eigen::MatrixXd opposite(2, 3);
    opposite << 1.0, -2.0, 3.0, -1.0, 2.0, -3.0;
    CHECK(pool_query(opposite).isZero());

    Eigen::MatrixXd three(3, 3);
    three << 1.0, 2.0, 3.0, -1.0, 0.5, 2.0, 0.25, 0.25, 0.25;
    Eigen::VectorXd mean = pool_query(three);
    CHECK(mean[0] == doctest::Approx(0.08333333333333333));
    CHECK(mean[1] == doctest::Approx(0.9166666666666666));
    CHECK(mean[2] == doctest::Approx(1.75));
}

// ------------------------------------------------------------ agent scores

TEST_CASE("cosine scores hit the canonical values") {
    Eigen::MatrixXd E(3, 2);
    E << 1.0, 0.0, 0.0, 2.0, -3.0, 0.0;
    Eigen::VectorXd h = vec({2.0, 0.0});
    Eigen::VectorXd scores = score_agents(h, E);
    CHECK(scores[0] == doctest::Approx(1.0));  // parallel
    CHECK(scores[1] == doctest::Approx(0.0));  // orthogonal
    CHECK(scores[2] == doctest::Approx(-1.0)); // anti-parallel
    for (int i = 0; i < 3; ++i) {
        CHECK(scores[i] <= 1.0 + 1e-12);
        CHECK(scores[i] >= -1.0 - 1e-12);
    }
}

TEST_CASE("zero-norm vectors surface as degenerate errors") {
    Eigen::MatrixXd E(2, 2);
    E << 1.0, 0.0, 0.0, 0.0;
    CHECK_THROWS_AS(score_agents(vec({1.0, 0.0}), E), DegenerateVectorError);
    Eigen::MatrixXd ok(1, 2);
    ok << 1.0, 0.0;
    CHECK_THROWS_AS(score_agents(vec({0.0, 0.0}), ok), DegenerateVectorError);
}

// ---------------------------------------------------------------- softmax

TEST_CASE("temperature softmax") {
    Eigen::VectorXd uniform = softmax_temperature(vec({0, 0, 0, 0}), 1.0);
    for (int i = 0; i < 4; ++i) CHECK(uniform[i] == doctest::Approx(0.25));

    Eigen::VectorXd analytic = softmax_temperature(vec({std::log(2.0), 0.0}), 1.0);
    CHECK(analytic[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(analytic[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

    Eigen::VectorXd sharp = softmax_temperature(vec({1.0, 0.0}), 0.5);
    CHECK(sharp[0] == doctest::Approx(0.8807970779778823).epsilon(1e-12));
    CHECK(sharp[1] == doctest::Approx(0.11920292202211755).epsilon(1e-12));
    CHECK(std::abs(sharp.sum() - 1.0) <= 1e-12);

    CHECK_THROWS_AS(softmax_temperature(vec({1.0, 0.0}), 0.0), ParameterError);
    CHECK_THROWS_AS(softmax_temperature(vec({1.0, 0.0}), -1.0), ParameterError);
}

TEST_CASE("temperature never changes the argmax") {
    Rng rng = make_rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        Eigen::VectorXd scores(5);
        for (int i = 0; i < 5; ++i) scores[i] = 2.0 * uniform01(rng) - 1.0;
        for (double lambda : {1e-3, 0.1, 1.0, 10.0}) {
            Eigen::VectorXd p = softmax_temperature(scores, lambda);
            int argmax_p = 0, argmax_s = 0;
            for (int i = 1; i < 5; ++i) {
                if (p[i] > p[argmax_p]) argmax_p = i;
                if (scores[i] > scores[argmax_s]) argmax_s = i;
            }
            CHECK(argmax_p == argmax_s);
        }
    }
}

// ---------------------------------------------------------------- sampling

TEST_CASE("single-agent sampling is forced") {
    Rng rng = make_rng(1);
    SamplingOutcome outcome = sample_cumulative(vec({1.0}), 0.9, rng);
    CHECK(outcome.ordered_indices == std::vector<int>{0});
    CHECK(outcome.log_prob == doctest::Approx(0.0));
    CHECK(outcome.cumulative_mass == doctest::Approx(1.0));
    CHECK_FALSE(outcome.fallback_used);
}

TEST_CASE("rho = 1 selects everyone with the telescoped log-prob") {
    Rng rng = make_rng(2);
    Eigen::VectorXd p = vec({0.25, 0.25, 0.25, 0.25});
    double expected = std::log(0.25 * (0.25 / 0.75) * (0.25 / 0.5) * 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        SamplingOutcome outcome = sample_cumulative(p, 1.0, rng);
        CHECK(outcome.ordered_indices.size() == 4);
        CHECK(outcome.log_prob == doctest::Approx(expected).epsilon(1e-12));
        CHECK(outcome.cumulative_mass == doctest::Approx(1.0));
    }
}

TEST_CASE("sampling stops as soon as the mass threshold is reached") {
    Rng rng = make_rng(3);
    Eigen::VectorXd p = vec({0.7, 0.2, 0.1});
    for (int trial = 0; trial < 200; ++trial) {
        SamplingOutcome outcome = sample_cumulative(p, 0.6, rng);
        REQUIRE(!outcome.ordered_indices.empty());
        if (outcome.ordered_indices.front() == 0) {
            CHECK(outcome.ordered_indices.size() == 1);
            CHECK(outcome.log_prob == doctest::Approx(std::log(0.7)));
        }
        // Two-sided stop rule: mass below threshold before the last pick.
        double before_last = outcome.cumulative_mass -
                             p[outcome.ordered_indices.back()];
        CHECK(before_last < 0.6);
        CHECK(outcome.cumulative_mass >= 0.6);
        // Recorded log-prob equals the pure product formula.
        double lp = sequence_log_prob(
            p, std::span<const int>(outcome.ordered_indices.data(),
                                    outcome.ordered_indices.size()));
        CHECK(outcome.log_prob == lp);
    }
}

TEST_CASE("invalid probability vectors are rejected") {
    Rng rng = make_rng(4);
    CHECK_THROWS_AS(sample_cumulative(vec({0.5, 0.6}), 0.5, rng), ValidationError);
    CHECK_THROWS_AS(sample_cumulative(vec({-0.1, 1.1}), 0.5, rng), ValidationError);
    CHECK_THROWS_AS(sample_cumulative(vec({0.5, 0.5}), 0.0, rng), ParameterError);
    CHECK_THROWS_AS(sample_cumulative(vec({0.5, 0.5}), 1.5, rng), ParameterError);
}

TEST_CASE("sampled frequencies match enumeration probabilities") {
    Rng rng = make_rng(77);
    Eigen::VectorXd p = vec({0.45, 0.3, 0.15, 0.1});
    double rho = 0.55;
    auto enumerated = oracle::enumerate_stopped_sequences(p, rho);
    std::map<std::vector<int>, long> counts;
    const long samples = 20000;
    for (long s = 0; s < samples; ++s) {
        ++counts[sample_cumulative(p, rho, rng).ordered_indices];
    }
    for (const auto& sp : enumerated) {
        if (sp.probability < 0.01) continue;
        double expected = sp.probability * static_cast<double>(samples);
        double sigma = std::sqrt(expected * (1.0 - sp.probability));
        CHECK(std::abs(static_cast<double>(counts[sp.sequence]) - expected) <=
              3.5 * sigma);
    }
}

// ---------------------------------------------------------- sequence logP

TEST_CASE("sequence log-prob computes the truncated product") {
    Eigen::VectorXd p = vec({0.5, 0.3, 0.2});
    int first[] = {0};
    CHECK(sequence_log_prob(p, first) == doctest::Approx(std::log(0.5)));
    int pair[] = {1, 0};
    CHECK(sequence_log_prob(p, pair) ==
          doctest::Approx(-1.5404450409471488).epsilon(1e-14));
    int repeat[] = {1, 1};
    CHECK_THROWS_AS(sequence_log_prob(p, repeat), ValidationError);
    int out_of_range[] = {3};
    CHECK_THROWS_AS(sequence_log_prob(p, out_of_range), ValidationError);
}

// ------------------------------------------------------------- build flow

TEST_CASE("single-agent pool forces every layer") {
    AdapterParams params = AdapterParams::init(1, 8, 21);
    StateEncoding enc = encode_state(three_stage_state(), EncoderConfig{8});
    Rng rng = make_rng(6);
    LayeredWorkflow wf = build_workflow(enc, params, rng);
    REQUIRE(wf.depth() == params.max_layers);
    for (const auto& layer : wf.layers) CHECK(layer == std::vector<int>{0});
    CHECK(wf.log_prob == doctest::Approx(0.0));
}

TEST_CASE("fixed seed reproduces the workflow bit-identically") {
    AdapterParams params = AdapterParams::init(5, 16, 8);
    StateEncoding enc = encode_state(three_stage_state(), EncoderConfig{16});
    Rng rng_a = make_rng(123);
    Rng rng_b = make_rng(123);
    LayeredWorkflow a = build_workflow(enc, params, rng_a);
    LayeredWorkflow b = build_workflow(enc, params, rng_b);
    CHECK(a.layers == b.layers);
    CHECK(a.log_prob == b.log_prob);
}

TEST_CASE("near-zero temperature selects the descending-score prefix") {
    AdapterParams params = AdapterParams::init(4, 8, 55);
    params.temperature = 1e-6;
    StateEncoding enc = encode_state(three_stage_state(), EncoderConfig{8});
    Rng rng = make_rng(9);
    std::vector<LayerTrace> traces;
    LayeredWorkflow wf = build_workflow(enc, params, rng, nullptr, &traces);
    REQUIRE(traces.size() == wf.layers.size());
    for (std::size_t l = 0; l < traces.size(); ++l) {
        // With distinct scores the softmax is a point mass on the argmax,
        // so the layer is the length-1 greedy prefix.
        int argmax = 0;
        for (int i = 1; i < 4; ++i) {
            if (traces[l].scores[i] > traces[l].scores[argmax]) argmax = i;
        }
        CHECK(wf.layers[l] == std::vector<int>{argmax});
        auto seqs = oracle::enumerate_stopped_sequences(
            traces[l].probs, params.mass_threshold);
        REQUIRE(seqs.size() == 1);
        CHECK(seqs[0].sequence == wf.layers[l]);
        CHECK(seqs[0].probability == doctest::Approx(1.0));
    }
}

TEST_CASE("probability coherence holds along build_workflow layers") {
    AdapterParams params = AdapterParams::init(5, 8, 31, 0.8);
    params.mass_threshold = 0.7;
    StateEncoding enc = encode_state(three_stage_state(), EncoderConfig{8});
    Rng rng = make_rng(10);
    std::vector<LayerTrace> traces;
    build_workflow(enc, params, rng, nullptr, &traces);
    for (const auto& trace : traces) {
        auto seqs =
            oracle::enumerate_stopped_sequences(trace.probs, params.mass_threshold);
        double total = 0.0;
        for (const auto& sp : seqs) total += sp.probability;
        CHECK(std::abs(total - 1.0) <= 1e-9);
        CHECK(std::abs(trace.probs.sum() - 1.0) <= 1e-12);
    }
}
