#include "evomas/oracle.hpp"

#include "evomas/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <tuple>

namespace evomas::oracle {

namespace {

void enumerate_dfs(const Eigen::VectorXd& probs, double mass_threshold,
                   std::vector<int>& sequence, std::vector<bool>& picked,
                   double cumulative, double probability,
                   std::vector<SequenceProb>& out) {
    bool any_candidate = false;
    for (int i = 0; i < probs.size(); ++i) {
        if (picked[static_cast<std::size_t>(i)] || probs[i] < kProbabilityFloor) {
            continue;
        }
        any_candidate = true;
        double conditional = probs[i] / (1.0 - cumulative);
        double next_cumulative = cumulative + probs[i];
        double next_probability = probability * conditional;
        sequence.push_back(i);
        picked[static_cast<std::size_t>(i)] = true;
        if (next_cumulative >= mass_threshold) {
            out.push_back({sequence, next_probability});
        } else {
            enumerate_dfs(probs, mass_threshold, sequence, picked,
                          next_cumulative, next_probability, out);
        }
        picked[static_cast<std::size_t>(i)] = false;
        sequence.pop_back();
    }
    if (!any_candidate && !sequence.empty()) {
        // Candidate set exhausted below the threshold (floor exclusions or
        // rounding at rho = 1); the sampler stops here too.
        out.push_back({sequence, probability});
    }
}

} // namespace

std::vector<SequenceProb> enumerate_stopped_sequences(const Eigen::VectorXd& probs,
                                                      double mass_threshold) {
    if (probs.size() > kMaxEnumerationAgents) {
        throw CapacityError("enumeration capped at 8 agents");
    }
    if (!(mass_threshold > 0.0 && mass_threshold <= 1.0)) {
        throw ParameterError("mass threshold must lie in (0, 1]");
    }
    double sum = 0.0;
    for (int i = 0; i < probs.size(); ++i) {
        if (!(probs[i] >= 0.0) || !std::isfinite(probs[i])) {
            throw ValidationError("probability entries must be finite and >= 0");
        }
        sum += probs[i];
    }
    if (std::abs(sum - 1.0) > 1e-9) {
        throw ValidationError("probabilities must sum to 1 within 1e-9");
    }

    std::vector<SequenceProb> out;
    std::vector<int> sequence;
    std::vector<bool> picked(static_cast<std::size_t>(probs.size()), false);
    enumerate_dfs(probs, mass_threshold, sequence, picked, 0.0, 1.0, out);
    return out;
}

namespace {

using Mask = std::uint32_t;

// (success probability before evaluator noise, early-exit present) with its
// probability under the policy's workflow distribution.
struct FeatureAtom {
    double success_prob = 0.0;
    bool early_exit = false;
    double probability = 1.0;
};

// Oracle-side stage outcome evaluation, written independently of
// stage_success_probability so DP-vs-rollout comparisons cross two routes.
struct StageEvaluator {
    const AgentPool& pool;
    const OutcomeModel& model;

    double success_from_features(const std::string& stage_type, Mask mask,
                                 int irrelevant_instances) const {
        auto it = model.required_roles.find(stage_type);
        if (it == model.required_roles.end() || it->second.empty()) return 0.0;
        double best = -1.0;
        bool ensemble = false;
        for (int i = 0; i < pool.size(); ++i) {
            if ((mask & (Mask{1} << i)) == 0) continue;
            const AgentSpec& agent = pool.at(i);
            if (it->second.count(agent.role) > 0) {
                best = std::max(best, agent.capability_for(
                                          stage_type, model.default_capability));
            } else if (agent.role == RoleTag::Ensemble &&
                       model.ensemble_bonus > 0.0) {
                ensemble = true;
            }
        }
        if (best < 0.0) return 0.0;
        double p = best;
        if (ensemble) p += model.ensemble_bonus;
        p -= model.distractor_penalty * irrelevant_instances;
        return std::clamp(p, 0.0, 1.0);
    }

    // Mirrors the environment's rule: an Ensemble agent only escapes the
    // penalty when the model grants it a bonus.
    bool irrelevant_for(const std::string& stage_type, int agent_id) const {
        const AgentSpec& agent = pool.at(agent_id);
        if (agent.role == RoleTag::Ensemble && model.ensemble_bonus > 0.0) {
            return false;
        }
        auto it = model.required_roles.find(stage_type);
        if (it == model.required_roles.end()) return true;
        return it->second.count(agent.role) == 0;
    }

    bool has_early_exit(Mask mask) const {
        for (int i = 0; i < pool.size(); ++i) {
            if ((mask & (Mask{1} << i)) && pool.at(i).role == RoleTag::EarlyExit) {
                return true;
            }
        }
        return false;
    }
};

std::set<int> mask_to_set(Mask mask, int n) {
    std::set<int> s;
    for (int i = 0; i < n; ++i) {
        if (mask & (Mask{1} << i)) s.insert(i);
    }
    return s;
}

int popcount_irrelevant(Mask mask, const StageEvaluator& eval,
                        const std::string& stage_type, int n) {
    int count = 0;
    for (int i = 0; i < n; ++i) {
        if ((mask & (Mask{1} << i)) && eval.irrelevant_for(stage_type, i)) {
            ++count;
        }
    }
    return count;
}

// Per-layer selected-set distribution induced by one categorical p.
std::map<Mask, double> layer_set_distribution(const Eigen::VectorXd& probs,
                                              double mass_threshold) {
    std::map<Mask, double> sets;
    for (const auto& sp : enumerate_stopped_sequences(probs, mass_threshold)) {
        Mask mask = 0;
        for (int idx : sp.sequence) mask |= Mask{1} << idx;
        sets[mask] += sp.probability;
    }
    return sets;
}

// DP node: active subtask, consecutive refines, last verdict (0 none,
// 1 success, 2 refine, 3 fail), meta-step. Any Failed subtask zeroes the
// utility, so only zero-failure nodes are expanded.
using DpKey = std::tuple<int, int, int, int>;

struct ExactDp {
    const TaskTemplate& task;
    const AgentPool& pool;
    const OutcomeModel& model;
    const PolicySpec& policy;
    int max_meta_steps;
    StageEvaluator evaluator;
    std::map<DpKey, double> memo;
    // stage type -> feature atoms, for state-independent policies.
    std::map<std::string, std::vector<FeatureAtom>> fixed_atoms;
    // per-step atoms for deterministic workflow policies.
    std::map<std::pair<std::string, int>, std::vector<FeatureAtom>> step_atoms;

    double value(int active, int refines, int verdict, int t) {
        const int horizon = static_cast<int>(task.stage_types.size());
        if (active == horizon) return 1.0;
        if (t == max_meta_steps) return 0.0;
        DpKey key{active, refines, verdict, t};
        if (auto it = memo.find(key); it != memo.end()) return it->second;

        const std::string& stage_type =
            task.stage_types[static_cast<std::size_t>(active)];
        std::vector<FeatureAtom> atoms = workflow_atoms(active, refines, verdict, t);

        double total = 0.0;
        for (const FeatureAtom& atom : atoms) {
            double p_eval = atom.success_prob * (1.0 - model.noise) +
                            (1.0 - atom.success_prob) * model.noise;
            double v_success;
            if (active + 1 == horizon) {
                v_success = 1.0; // all subtasks completed; early exit is moot
            } else if (atom.early_exit) {
                v_success = 0.0;
            } else {
                v_success = value(active + 1, 0, 1, t + 1);
            }
            double v_failure;
            if (refines >= model.max_refines) {
                v_failure = 0.0; // escalates to Fail; utility unreachable
            } else if (atom.early_exit) {
                v_failure = 0.0;
            } else {
                v_failure = value(active, refines + 1, 2, t + 1);
            }
            total += atom.probability *
                     (p_eval * v_success + (1.0 - p_eval) * v_failure);
        }
        (void)stage_type;
        memo[key] = total;
        return total;
    }

    std::vector<FeatureAtom> workflow_atoms(int active, int refines, int verdict,
                                            int t) {
        const std::string& stage_type =
            task.stage_types[static_cast<std::size_t>(active)];
        if (const auto* fixed = std::get_if<FixedDistributionPolicy>(&policy)) {
            auto it = fixed_atoms.find(stage_type);
            if (it == fixed_atoms.end()) {
                auto layer_sets =
                    layer_set_distribution(fixed->probs, fixed->mass_threshold);
                it = fixed_atoms
                         .emplace(stage_type,
                                  combine_fixed_layers(layer_sets, fixed->layers,
                                                       stage_type))
                         .first;
            }
            return it->second;
        }
        if (const auto* det = std::get_if<FixedWorkflowPolicy>(&policy)) {
            auto key = std::make_pair(stage_type, t);
            auto it = step_atoms.find(key);
            if (it == step_atoms.end()) {
                it = step_atoms.emplace(key, deterministic_atoms(*det, stage_type, t))
                         .first;
            }
            return it->second;
        }
        const auto& adapter = std::get<AdapterPolicy>(policy);
        return adapter_atoms(adapter, stage_type, active, refines, verdict, t);
    }

    std::vector<FeatureAtom> combine_fixed_layers(
        const std::map<Mask, double>& layer_sets, int layers,
        const std::string& stage_type) {
        const int n = pool.size();
        std::map<std::pair<Mask, int>, double> prefix{{{0, 0}, 1.0}};
        for (int layer = 0; layer < layers; ++layer) {
            std::map<std::pair<Mask, int>, double> next;
            for (const auto& [state, prob] : prefix) {
                for (const auto& [mask, q] : layer_sets) {
                    int irr = popcount_irrelevant(mask, evaluator, stage_type, n);
                    next[{state.first | mask, state.second + irr}] += prob * q;
                }
            }
            prefix = std::move(next);
        }
        return prefix_to_atoms(prefix, stage_type);
    }

    std::vector<FeatureAtom> deterministic_atoms(const FixedWorkflowPolicy& det,
                                                 const std::string& stage_type,
                                                 int t) {
        if (det.per_step.empty()) {
            throw ValidationError("deterministic policy has no workflows");
        }
        std::size_t idx = std::min(static_cast<std::size_t>(t),
                                   det.per_step.size() - 1);
        const LayeredWorkflow& workflow = det.per_step[idx];
        Mask mask = 0;
        int irr = 0;
        for (const auto& layer : workflow.layers) {
            for (int agent : layer) {
                if (agent < 0 || agent >= pool.size()) {
                    throw ValidationError("workflow references an agent outside the pool");
                }
                mask |= Mask{1} << agent;
                if (evaluator.irrelevant_for(stage_type, agent)) ++irr;
            }
        }
        FeatureAtom atom;
        atom.success_prob = evaluator.success_from_features(stage_type, mask, irr);
        atom.early_exit = evaluator.has_early_exit(mask);
        atom.probability = 1.0;
        return {atom};
    }

    std::vector<FeatureAtom> adapter_atoms(const AdapterPolicy& adapter,
                                           const std::string& stage_type,
                                           int active, int refines, int verdict,
                                           int t) {
        const int n = pool.size();
        TaskState state = reconstruct_state(active, refines, verdict, t);
        StateEncoding enc = encode_state(state, adapter.encoder);

        std::map<std::pair<Mask, int>, double> prefix{{{0, 0}, 1.0}};
        for (int layer = 0; layer < adapter.params.max_layers; ++layer) {
            // One forward pass per distinct context set at this depth.
            std::map<Mask, std::map<Mask, double>> per_context;
            for (const auto& [state_key, prob] : prefix) {
                (void)prob;
                Mask context = state_key.first;
                if (per_context.count(context)) continue;
                LayerTrace trace = forward_layer(enc, adapter.params,
                                                 mask_to_set(context, n));
                per_context[context] = layer_set_distribution(
                    trace.probs, adapter.params.mass_threshold);
            }
            std::map<std::pair<Mask, int>, double> next;
            for (const auto& [state_key, prob] : prefix) {
                for (const auto& [mask, q] : per_context[state_key.first]) {
                    int irr = popcount_irrelevant(mask, evaluator, stage_type, n);
                    next[{state_key.first | mask, state_key.second + irr}] +=
                        prob * q;
                }
            }
            prefix = std::move(next);
        }
        return prefix_to_atoms(prefix, stage_type);
    }

    std::vector<FeatureAtom> prefix_to_atoms(
        const std::map<std::pair<Mask, int>, double>& prefix,
        const std::string& stage_type) {
        std::vector<FeatureAtom> atoms;
        atoms.reserve(prefix.size());
        for (const auto& [state_key, prob] : prefix) {
            FeatureAtom atom;
            atom.success_prob = evaluator.success_from_features(
                stage_type, state_key.first, state_key.second);
            atom.early_exit = evaluator.has_early_exit(state_key.first);
            atom.probability = prob;
            atoms.push_back(atom);
        }
        return atoms;
    }

    TaskState reconstruct_state(int active, int refines, int verdict, int t) const {
        TaskState state;
        state.objective_id = task.objective_id();
        for (std::size_t i = 0; i < task.stage_types.size(); ++i) {
            SubtaskStatus status = static_cast<int>(i) < active
                                       ? SubtaskStatus::Completed
                                       : SubtaskStatus::Pending;
            state.plan.subtasks.push_back({task.stage_types[i], status});
            if (status == SubtaskStatus::Completed) {
                state.completed_artifacts.emplace_back(static_cast<int>(i),
                                                       static_cast<int>(i) + 1);
            }
        }
        state.plan.active_index = active;
        state.stage = t;
        state.refine_count = refines;
        if (verdict == 1) state.last_assessment = make_assessment(Verdict::Success);
        if (verdict == 2) state.last_assessment = make_assessment(Verdict::Refine);
        if (verdict == 3) state.last_assessment = make_assessment(Verdict::Fail);
        return state;
    }
};

} // namespace

double exact_policy_success(const PolicySpec& policy, const TaskTemplate& task,
                            const AgentPool& pool, const OutcomeModel& model,
                            int max_meta_steps) {
    task.validate();
    model.validate();
    if (max_meta_steps < 1 || max_meta_steps > 16) {
        throw CapacityError("meta-step budget must lie in [1, 16]");
    }
    const int horizon = static_cast<int>(task.stage_types.size());
    if (std::holds_alternative<AdapterPolicy>(policy)) {
        if (pool.size() > 5 || horizon > 3) {
            throw CapacityError(
                "adapter-policy exact evaluation capped at 5 agents, 3 subtasks");
        }
        std::get<AdapterPolicy>(policy).params.validate();
    } else {
        if (pool.size() > kMaxEnumerationAgents || horizon > 6) {
            throw CapacityError(
                "fixed-policy exact evaluation capped at 8 agents, 6 subtasks");
        }
    }
    ExactDp dp{task, pool, model, policy, max_meta_steps,
               StageEvaluator{pool, model}};
    return dp.value(0, 0, 0, 0);
}

DeterministicSearchResult best_deterministic_sequence(const TaskTemplate& task,
                                                      const AgentPool& pool,
                                                      const OutcomeModel& model,
                                                      int max_meta_steps,
                                                      int layers) {
    task.validate();
    model.validate();
    const int n = pool.size();
    const int horizon = static_cast<int>(task.stage_types.size());
    if (n > kMaxEnumerationAgents || horizon > 6 || layers > 4 ||
        max_meta_steps > 16 || max_meta_steps < 1) {
        throw CapacityError("deterministic search capped at 8 agents, 6 subtasks, 4 layers");
    }

    StageEvaluator evaluator{pool, model};
    long action_count = 1;
    for (int l = 0; l < layers; ++l) action_count *= n;

    // Features per (action, stage type) are state-independent.
    struct ActionFeatures {
        double success_prob;
        bool early_exit;
    };
    std::map<std::string, std::vector<ActionFeatures>> features_by_stage;
    std::vector<std::vector<int>> action_agents(
        static_cast<std::size_t>(action_count));
    for (long a = 0; a < action_count; ++a) {
        long rest = a;
        std::vector<int> agents(static_cast<std::size_t>(layers));
        for (int l = 0; l < layers; ++l) {
            agents[static_cast<std::size_t>(l)] = static_cast<int>(rest % n);
            rest /= n;
        }
        action_agents[static_cast<std::size_t>(a)] = agents;
    }
    for (const auto& stage : task.stage_types) {
        if (features_by_stage.count(stage)) continue;
        std::vector<ActionFeatures> features;
        features.reserve(static_cast<std::size_t>(action_count));
        for (long a = 0; a < action_count; ++a) {
            Mask mask = 0;
            int irr = 0;
            for (int agent : action_agents[static_cast<std::size_t>(a)]) {
                mask |= Mask{1} << agent;
                if (evaluator.irrelevant_for(stage, agent)) ++irr;
            }
            features.push_back({evaluator.success_from_features(stage, mask, irr),
                                evaluator.has_early_exit(mask)});
        }
        features_by_stage.emplace(stage, std::move(features));
    }

    // Backward induction over (active, refines, t); Fail zeroes the value.
    std::map<std::tuple<int, int, int>, std::pair<double, long>> memo;
    std::function<double(int, int, int)> value = [&](int active, int refines,
                                                     int t) -> double {
        if (active == horizon) return 1.0;
        if (t == max_meta_steps) return 0.0;
        auto key = std::make_tuple(active, refines, t);
        if (auto it = memo.find(key); it != memo.end()) return it->second.first;
        const auto& features =
            features_by_stage[task.stage_types[static_cast<std::size_t>(active)]];
        double best_value = -1.0;
        long best_action = 0;
        for (long a = 0; a < action_count; ++a) {
            const auto& f = features[static_cast<std::size_t>(a)];
            double p_eval =
                f.success_prob * (1.0 - model.noise) + (1.0 - f.success_prob) * model.noise;
            double v_success = (active + 1 == horizon) ? 1.0
                               : f.early_exit          ? 0.0
                                        : value(active + 1, 0, t + 1);
            double v_failure = (refines >= model.max_refines || f.early_exit)
                                   ? 0.0
                                   : value(active, refines + 1, t + 1);
            double v = p_eval * v_success + (1.0 - p_eval) * v_failure;
            if (v > best_value) {
                best_value = v;
                best_action = a;
            }
        }
        memo[key] = {best_value, best_action};
        return best_value;
    };

    DeterministicSearchResult result;
    result.success = value(0, 0, 0);
    // Workflows along the all-success path.
    int active = 0;
    int t = 0;
    while (active < horizon && t < max_meta_steps) {
        long action = memo[std::make_tuple(active, 0, t)].second;
        std::vector<std::vector<int>> wf_layers;
        for (int agent : action_agents[static_cast<std::size_t>(action)]) {
            wf_layers.push_back({agent});
        }
        result.sequence.emplace_back(std::move(wf_layers));
        ++active;
        ++t;
    }
    return result;
}

} // namespace evomas::oracle
