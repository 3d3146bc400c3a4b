#include "evomas/serialize.hpp"

#include "evomas/errors.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

namespace evomas {

std::string format_double(double v) {
    // Shortest decimal that round-trips; matches nlohmann's double output.
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    double parsed = 0.0;
    std::sscanf(buf, "%lf", &parsed);
    for (int precision = 1; precision < 17; ++precision) {
        char shorter[32];
        std::snprintf(shorter, sizeof(shorter), "%.*g", precision, v);
        std::sscanf(shorter, "%lf", &parsed);
        if (parsed == v) return shorter;
    }
    return buf;
}

namespace {

ordered_json matrix_to_json(const Eigen::MatrixXd& m) {
    ordered_json rows = ordered_json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        ordered_json row = ordered_json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const ordered_json& j) {
    if (!j.is_array() || j.empty()) return Eigen::MatrixXd(0, 0);
    Eigen::MatrixXd m(j.size(), j[0].size());
    for (std::size_t r = 0; r < j.size(); ++r) {
        for (std::size_t c = 0; c < j[r].size(); ++c) {
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                j[r][c].get<double>();
        }
    }
    return m;
}

ordered_json vector_to_json(const Eigen::VectorXd& v) {
    ordered_json out = ordered_json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
    return out;
}

ordered_json assessment_to_json(const EvaluatorAssessment& a) {
    ordered_json j;
    j["verdict"] = std::string(verdict_name(a.verdict));
    j["confidence"] = a.confidence;
    ordered_json fb = ordered_json::array();
    for (int i = 0; i < kFeedbackDim; ++i) fb.push_back(a.feedback_features[i]);
    j["feedback"] = std::move(fb);
    return j;
}

EvaluatorAssessment assessment_from_json(const ordered_json& j) {
    EvaluatorAssessment a;
    auto verdict = verdict_from_name(j.at("verdict").get<std::string>());
    if (!verdict) throw ValidationError("unknown verdict in record");
    a.verdict = *verdict;
    a.confidence = j.at("confidence").get<double>();
    const auto& fb = j.at("feedback");
    for (int i = 0; i < kFeedbackDim && i < static_cast<int>(fb.size()); ++i) {
        a.feedback_features[i] = fb[static_cast<std::size_t>(i)].get<double>();
    }
    return a;
}

} // namespace

ordered_json task_state_to_json(const TaskState& state) {
    ordered_json j;
    j["objective_id"] = state.objective_id;
    ordered_json subtasks = ordered_json::array();
    for (const auto& s : state.plan.subtasks) {
        ordered_json st;
        st["stage_type"] = s.stage_type;
        st["status"] = std::string(status_name(s.status));
        subtasks.push_back(std::move(st));
    }
    j["subtasks"] = std::move(subtasks);
    if (state.plan.active_index) j["active_index"] = *state.plan.active_index;
    else j["active_index"] = nullptr;
    ordered_json artifacts = ordered_json::array();
    for (const auto& [idx, token] : state.completed_artifacts) {
        artifacts.push_back(ordered_json::array({idx, token}));
    }
    j["artifacts"] = std::move(artifacts);
    if (state.last_assessment) {
        j["assessment"] = assessment_to_json(*state.last_assessment);
    } else {
        j["assessment"] = nullptr;
    }
    j["stage"] = state.stage;
    j["refine_count"] = state.refine_count;
    return j;
}

TaskState task_state_from_json(const ordered_json& j) {
    TaskState state;
    state.objective_id = j.at("objective_id").get<std::uint64_t>();
    for (const auto& st : j.at("subtasks")) {
        auto status = status_from_name(st.at("status").get<std::string>());
        if (!status) throw ValidationError("unknown subtask status in record");
        state.plan.subtasks.push_back(
            {st.at("stage_type").get<std::string>(), *status});
    }
    if (!j.at("active_index").is_null()) {
        state.plan.active_index = j.at("active_index").get<int>();
    }
    for (const auto& pair : j.at("artifacts")) {
        state.completed_artifacts.emplace_back(pair[0].get<int>(),
                                               pair[1].get<int>());
    }
    if (!j.at("assessment").is_null()) {
        state.last_assessment = assessment_from_json(j.at("assessment"));
    }
    state.stage = j.at("stage").get<int>();
    state.refine_count = j.at("refine_count").get<int>();
    state.validate();
    return state;
}

ordered_json trajectory_to_json(const Trajectory& trajectory,
                                bool include_encodings) {
    ordered_json j;
    j["utility"] = trajectory.terminal_utility;
    if (trajectory.final_answer) j["final_answer"] = *trajectory.final_answer;
    else j["final_answer"] = nullptr;
    ordered_json steps = ordered_json::array();
    for (const auto& step : trajectory.steps) {
        ordered_json s;
        s["stage"] = step.stage;
        s["layers"] = step.workflow.layers;
        s["log_prob"] = step.workflow.log_prob;
        s["fallback"] = step.workflow.per_layer_fallback;
        s["verdict"] = std::string(verdict_name(step.record.assessment.verdict));
        s["step_reward"] = step.record.step_reward;
        s["early_exit"] = step.record.early_exit_triggered;
        s["outputs"] = step.record.per_layer_outputs;
        ordered_json probs = ordered_json::array();
        for (const auto& p : step.layer_probs) probs.push_back(vector_to_json(p));
        s["probs"] = std::move(probs);
        if (include_encodings) s["encoding"] = matrix_to_json(step.state_encoding);
        steps.push_back(std::move(s));
    }
    j["steps"] = std::move(steps);
    j["final_state"] = task_state_to_json(trajectory.final_state);
    return j;
}

Trajectory trajectory_from_json(const ordered_json& j) {
    Trajectory trajectory;
    trajectory.terminal_utility = j.at("utility").get<double>();
    if (!j.at("final_answer").is_null()) {
        trajectory.final_answer = j.at("final_answer").get<int>();
    }
    for (const auto& s : j.at("steps")) {
        TrajectoryStep step;
        step.stage = s.at("stage").get<int>();
        auto layers = s.at("layers").get<std::vector<std::vector<int>>>();
        auto fallback = s.at("fallback").get<std::vector<bool>>();
        step.workflow = LayeredWorkflow(std::move(layers),
                                        s.at("log_prob").get<double>(),
                                        std::move(fallback));
        step.record.assessment = make_assessment(
            *verdict_from_name(s.at("verdict").get<std::string>()));
        step.record.step_reward = s.at("step_reward").get<double>();
        step.record.early_exit_triggered = s.at("early_exit").get<bool>();
        step.record.per_layer_outputs =
            s.at("outputs").get<std::vector<std::vector<int>>>();
        for (const auto& p : s.at("probs")) {
            Eigen::VectorXd v(p.size());
            for (std::size_t i = 0; i < p.size(); ++i) {
                v[static_cast<Eigen::Index>(i)] = p[i].get<double>();
            }
            step.layer_probs.push_back(std::move(v));
        }
        if (s.contains("encoding")) {
            step.state_encoding = matrix_from_json(s.at("encoding"));
        }
        trajectory.steps.push_back(std::move(step));
    }
    trajectory.final_state = task_state_from_json(j.at("final_state"));
    return trajectory;
}

ordered_json snapshot_record(const StateEncoding& encoding,
                             const AdapterParams& params, int stage) {
    ordered_json j;
    j["type"] = "snapshot";
    j["stage"] = stage;
    ordered_json layers = ordered_json::array();
    std::set<int> selected;
    for (int layer = 0; layer < params.max_layers; ++layer) {
        LayerTrace trace = forward_layer(encoding, params, selected);
        ordered_json entry;
        entry["p"] = vector_to_json(trace.probs);
        int greedy = 0;
        for (Eigen::Index i = 1; i < trace.probs.size(); ++i) {
            if (trace.probs[i] > trace.probs[greedy]) greedy = static_cast<int>(i);
        }
        entry["greedy"] = greedy;
        // Greedy prefix until the mass threshold, mirroring the sampler's
        // near-zero-temperature limit.
        std::vector<int> order(static_cast<std::size_t>(trace.probs.size()));
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            if (trace.probs[a] != trace.probs[b]) {
                return trace.probs[a] > trace.probs[b];
            }
            return a < b;
        });
        std::vector<int> greedy_layer;
        double mass = 0.0;
        for (int idx : order) {
            greedy_layer.push_back(idx);
            mass += trace.probs[idx];
            if (mass >= params.mass_threshold) break;
        }
        entry["greedy_layer"] = greedy_layer;
        layers.push_back(std::move(entry));
        selected.insert(greedy_layer.begin(), greedy_layer.end());
    }
    j["layers"] = std::move(layers);
    return j;
}

} // namespace evomas
