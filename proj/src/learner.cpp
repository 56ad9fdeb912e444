#include "opshape/learner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "opshape/oracle.hpp"
#include "opshape/random.hpp"

namespace opshape {

Critic::Critic(int num_states, int horizon, bool time_indexed, double lr_e, double lr_i, double gamma_e,
               double gamma_i)
    : num_states_(num_states), horizon_(horizon), time_indexed_(time_indexed), lr_e_(lr_e), lr_i_(lr_i),
      gamma_e_(gamma_e), gamma_i_(gamma_i) {
    const std::size_t size = time_indexed ? static_cast<std::size_t>(num_states) * static_cast<std::size_t>(horizon)
                                          : static_cast<std::size_t>(num_states);
    v_e_.assign(size, 0.0);
    v_i_.assign(size, 0.0);
}

PolicyKind parse_policy_kind(const std::string& name) {
    if (name == "softmax") return PolicyKind::softmax;
    if (name == "q_learning") return PolicyKind::q_learning;
    throw ModelError("unknown policy kind '" + name + "'");
}

std::string to_string(PolicyKind kind) { return kind == PolicyKind::softmax ? "softmax" : "q_learning"; }

void validate(const TrainConfig& config, const Mdp& mdp) {
    auto in_unit = [](double v) { return v > 0.0 && v <= 1.0; };
    if (config.iterations < 1) throw ModelError("train.iterations must be >= 1");
    if (config.iteration_steps < 1) throw ModelError("train.iteration_steps must be >= 1");
    if (config.warmup_iterations < 0) throw ModelError("train.warmup_iterations must be >= 0");
    if (config.record_every < 1) throw ModelError("train.record_every must be >= 1");
    if (!(config.temperature > 0.0)) throw ModelError("train.temperature must be > 0");
    if (!(config.epsilon_greedy >= 0.0 && config.epsilon_greedy <= 1.0)) {
        throw ModelError("train.epsilon_greedy must lie in [0, 1]");
    }
    if (!in_unit(config.lr_actor)) throw ModelError("train.lr_actor must lie in (0, 1]");
    if (!in_unit(config.lr_e)) throw ModelError("train.lr_e must lie in (0, 1]");
    if (!in_unit(config.lr_i)) throw ModelError("train.lr_i must lie in (0, 1]");
    if (!in_unit(config.lr_q)) throw ModelError("train.lr_q must lie in (0, 1]");
    if (config.decision_state < 0 || config.decision_state >= mdp.num_states()) {
        throw ModelError("train.decision_state out of range");
    }
    validate(config.shaper);
}

TrainingAbort::TrainingAbort(long long step, const std::string& quantity)
    : std::runtime_error("non-finite " + quantity + " at step " + std::to_string(step)), step_(step),
      quantity_(quantity) {}

namespace {

/// Action preferences or Q-values, per (s, t) or per s.
class ActionTable {
public:
    ActionTable(int num_states, int num_actions, int horizon, bool time_indexed)
        : num_states_(num_states), num_actions_(num_actions), time_indexed_(time_indexed),
          values_(static_cast<std::size_t>(time_indexed ? num_states * horizon : num_states) *
                      static_cast<std::size_t>(num_actions),
                  0.0) {}

    double* row(StateId s, int t) {
        const std::size_t slot = time_indexed_ ? static_cast<std::size_t>(t) * static_cast<std::size_t>(num_states_) +
                                                     static_cast<std::size_t>(s)
                                               : static_cast<std::size_t>(s);
        return values_.data() + slot * static_cast<std::size_t>(num_actions_);
    }

private:
    int num_states_;
    int num_actions_;
    bool time_indexed_;
    std::vector<double> values_;
};

ActionId argmax_first(const double* row, int n) {
    return static_cast<ActionId>(std::max_element(row, row + n) - row);
}

void softmax(const double* prefs, int n, double temperature, std::vector<double>& out) {
    out.resize(static_cast<std::size_t>(n));
    const double top = *std::max_element(prefs, prefs + n);
    double total = 0.0;
    for (int a = 0; a < n; ++a) {
        out[static_cast<std::size_t>(a)] = std::exp((prefs[a] - top) / temperature);
        total += out[static_cast<std::size_t>(a)];
    }
    for (auto& p : out) {
        p /= total;
    }
}

void require_finite(double v, long long step, const char* what) {
    if (!std::isfinite(v)) {
        throw TrainingAbort(step, what);
    }
}

StateId sample_next(const Mdp& env, StateId s, ActionId a, Rng& rng, std::vector<double>& scratch) {
    const auto& succ = env.successors(s, a);
    if (succ.size() == 1) {
        return succ.front().next;
    }
    scratch.clear();
    for (const auto& tr : succ) {
        scratch.push_back(tr.prob);
    }
    return succ[static_cast<std::size_t>(sample_index(scratch, rng))].next;
}

}  // namespace

bool greedy_in_optimal_set(const Mdp& env, const std::vector<std::vector<ActionId>>& greedy,
                           const OptimalActionSet& optimal) {
    std::vector<char> next(static_cast<std::size_t>(env.num_states()), 0);
    std::vector<StateId> support;
    for (StateId s = 0; s < env.num_states(); ++s) {
        if (env.start_distribution()[static_cast<std::size_t>(s)] > 0.0) {
            support.push_back(s);
        }
    }
    std::vector<StateId> next_support;
    for (int t = 0; t < env.horizon() && !support.empty(); ++t) {
        next_support.clear();
        for (StateId s : support) {
            if (env.is_terminal(s)) {
                continue;
            }
            const ActionId a = greedy[static_cast<std::size_t>(t)][static_cast<std::size_t>(s)];
            if (!optimal.contains(s, t, a)) {
                return false;
            }
            for (const auto& tr : env.successors(s, a)) {
                if (!next[static_cast<std::size_t>(tr.next)]) {
                    next[static_cast<std::size_t>(tr.next)] = 1;
                    next_support.push_back(tr.next);
                }
            }
        }
        for (StateId s : next_support) {
            next[static_cast<std::size_t>(s)] = 0;
        }
        std::swap(support, next_support);
    }
    return true;
}

ValueTable markov_v_star_i(const Mdp& env, const OptimalActionSet& optimal, const IntrinsicStream& im,
                           double gamma_i) {
    ValueTable v(env.num_states(), env.horizon());
    for (int t = env.horizon() - 1; t >= 0; --t) {
        for (StateId s = 0; s < env.num_states(); ++s) {
            if (env.is_terminal(s)) {
                continue;
            }
            double best = -std::numeric_limits<double>::infinity();
            for (ActionId a : optimal.at(s, t)) {
                double q = 0.0;
                for (const auto& tr : env.successors(s, a)) {
                    q += tr.prob * (im.peek(tr.next) + gamma_i * v(tr.next, t + 1));
                }
                best = std::max(best, q);
            }
            v(s, t) = best;
        }
    }
    return v;
}

LearningCurve train(const Mdp& env, const TrainConfig& config, const OptimalActionSet* optimal) {
    validate(config, env);
    const int S = env.num_states();
    const int A = env.num_actions();
    const int N = env.horizon();
    const double gamma_e = env.gamma_e();
    const double gamma_i = config.shaper.gamma_i;
    const ShaperKind kind = config.shaper.kind;

    OptimalActionSet owned;
    Solution exact;
    const bool ideal = kind == ShaperKind::adops_ideal;
    if (optimal == nullptr || ideal) {
        exact = value_iteration(env);
        if (optimal == nullptr) {
            owned = optimal_action_set(exact.q);
            optimal = &owned;
        }
    }

    Rng rng(config.seed);
    IntrinsicStream im(config.im, S);
    Shaper shaper(config.shaper);
    Critic critic(S, N, config.time_indexed, config.lr_e, config.lr_i, gamma_e, gamma_i);
    ActionTable table(S, A, N, config.time_indexed);
    ValueTable v_star_i;
    if (ideal) {
        v_star_i = markov_v_star_i(env, *optimal, im, gamma_i);
    }

    LearningCurve curve;
    curve.seed = config.seed;
    std::vector<double> probs;
    std::vector<double> scratch;
    std::vector<std::vector<ActionId>> greedy(static_cast<std::size_t>(N), std::vector<ActionId>(static_cast<std::size_t>(S)));
    auto greedy_flag = [&] {
        for (int t = 0; t < N; ++t) {
            for (StateId s = 0; s < S; ++s) {
                greedy[static_cast<std::size_t>(t)][static_cast<std::size_t>(s)] = argmax_first(table.row(s, t), A);
            }
            if (!config.time_indexed) {
                std::fill(greedy.begin() + 1, greedy.end(), greedy.front());
                break;
            }
        }
        return greedy_in_optimal_set(env, greedy, *optimal);
    };
    auto action_probs = [&](StateId s, int t) {
        const double* row = table.row(s, t);
        if (config.policy == PolicyKind::softmax) {
            softmax(row, A, config.temperature, probs);
        } else {
            probs.assign(static_cast<std::size_t>(A), config.epsilon_greedy / A);
            probs[static_cast<std::size_t>(argmax_first(row, A))] += 1.0 - config.epsilon_greedy;
        }
    };

    StateId s = sample_index(env.start_distribution(), rng);
    int t = 0;
    int episodes = 0;
    double ext_sum = 0.0, raw_sum = 0.0, shaped_sum = 0.0;
    double last_ext = 0.0, last_raw = 0.0, last_shaped = 0.0;
    long long step = 0;

    for (int it = 0; it < config.iterations; ++it) {
        for (int k = 0; k < config.iteration_steps; ++k, ++step) {
            action_probs(s, t);
            const ActionId a = sample_index(probs, rng);
            const StateId next = sample_next(env, s, a, rng, scratch);
            const bool done = t == N - 1 || env.is_terminal(next);
            const double r = env.reward(s, a, next, t);
            const double f = im.next(next);
            require_finite(f, step, "intrinsic reward");

            const double v_e_next = done ? 0.0 : critic.v_e(next, t + 1);
            const double v_i_next = done ? 0.0 : critic.v_i(next, t + 1);
            ValueContext ctx{};
            if (ideal) {
                ctx = {exact.v(s, t), exact.q(s, a, t), v_star_i(s, t), done ? 0.0 : v_star_i(next, t + 1)};
            } else {
                ctx = {critic.v_e(s, t), r + gamma_e * v_e_next, critic.v_i(s, t), v_i_next};
            }
            const double f_shaped = shaper.step({t, s, a, next, f, done}, needs_values(kind) ? &ctx : nullptr);
            require_finite(f_shaped, step, "shaped intrinsic reward");

            const double delta_e = r + gamma_e * v_e_next - critic.v_e(s, t);
            const double delta_i = f_shaped + gamma_i * v_i_next - critic.v_i(s, t);
            require_finite(delta_e, step, "extrinsic TD error");
            require_finite(delta_i, step, "intrinsic TD error");
            critic.v_e_at(s, t) += config.lr_e * delta_e;
            critic.v_i_at(s, t) += config.lr_i * delta_i;

            double* row = table.row(s, t);
            if (it < config.warmup_iterations) {
                // Critics only.
            } else if (config.policy == PolicyKind::softmax) {
                const double advantage = delta_e + delta_i;
                for (ActionId b = 0; b < A; ++b) {
                    row[b] += config.lr_actor * advantage * ((b == a ? 1.0 : 0.0) - probs[static_cast<std::size_t>(b)]);
                    require_finite(row[b], step, "actor preference");
                }
            } else {
                double target = shaped_reward(r, f_shaped);
                if (!done) {
                    const double* next_row = table.row(next, t + 1);
                    target += gamma_e * *std::max_element(next_row, next_row + A);
                }
                row[a] += config.lr_q * (target - row[a]);
                require_finite(row[a], step, "Q value");
            }

            ext_sum += r;
            raw_sum += f;
            shaped_sum += f_shaped;
            if (done) {
                ++episodes;
                last_ext = ext_sum;
                last_raw = raw_sum;
                last_shaped = shaped_sum;
                ext_sum = raw_sum = shaped_sum = 0.0;
                s = sample_index(env.start_distribution(), rng);
                t = 0;
            } else {
                s = next;
                ++t;
            }
        }
        shaper.end_iteration();
        if (ideal) {
            v_star_i = markov_v_star_i(env, *optimal, im, gamma_i);
        }
        if ((it + 1) % config.record_every == 0 || it + 1 == config.iterations) {
            action_probs(config.decision_state, 0);
            const double max_prob = *std::max_element(probs.begin(), probs.end());
            curve.records.push_back(
                {it + 1, episodes, last_ext, last_raw, last_shaped, shaper.zeta(), max_prob, greedy_flag()});
        }
    }
    curve.final_greedy_optimal = curve.records.back().greedy_optimal;
    return curve;
}

Critic exact_critic_snapshot(const Mdp& env, const Policy& policy, const ImConfig& im, const ShaperConfig& shaper) {
    const AugmentedGraph g = build_shaped_graph(env, im, shaper);
    const auto values = evaluate_shaped_policy(g, env, policy, shaper);
    const Solution extrinsic = policy_evaluation(env, policy);
    Critic critic(env.num_states(), env.horizon(), true, 1.0, 1.0, env.gamma_e(), shaper.gamma_i);
    ValueTable weight(env.num_states(), env.horizon());
    ValueTable plain_sum(env.num_states(), env.horizon());
    ValueTable plain_count(env.num_states(), env.horizon());
    for (int t = 0; t < env.horizon(); ++t) {
        for (StateId s = 0; s < env.num_states(); ++s) {
            critic.v_e_at(s, t) = extrinsic.v(s, t);
        }
    }
    for (std::size_t k = 0; k < g.nodes.size(); ++k) {
        const auto& node = g.nodes[k];
        if (node.ended) {
            continue;
        }
        critic.v_i_at(node.s, node.t) += values.reach[k] * values.v_i[k];
        weight(node.s, node.t) += values.reach[k];
        plain_sum(node.s, node.t) += values.v_i[k];
        plain_count(node.s, node.t) += 1.0;
    }
    for (int t = 0; t < env.horizon(); ++t) {
        for (StateId s = 0; s < env.num_states(); ++s) {
            double& v = critic.v_i_at(s, t);
            if (weight(s, t) > 0.0) {
                v /= weight(s, t);
            } else if (plain_count(s, t) > 0.0) {
                v = plain_sum(s, t) / plain_count(s, t);
            }
        }
    }
    return critic;
}

Critic td_policy_evaluation(const Mdp& env, const Policy& policy, int episodes, double lr, std::uint64_t seed) {
    Critic critic(env.num_states(), env.horizon(), true, lr > 0.0 ? lr : 1.0, 1.0, env.gamma_e(), 1.0);
    ValueTable visits(env.num_states(), env.horizon());
    Rng rng(seed);
    std::vector<double> scratch;
    for (int ep = 0; ep < episodes; ++ep) {
        StateId s = sample_index(env.start_distribution(), rng);
        for (int t = 0; t < env.horizon(); ++t) {
            const ActionId a = sample_index(policy.distribution(s, t), rng);
            const StateId next = sample_next(env, s, a, rng, scratch);
            const bool done = t == env.horizon() - 1 || env.is_terminal(next);
            const double target = env.reward(s, a, next, t) + (done ? 0.0 : env.gamma_e() * critic.v_e(next, t + 1));
            const double step = lr > 0.0 ? lr : 1.0 / (visits(s, t) += 1.0);
            critic.v_e_at(s, t) += step * (target - critic.v_e(s, t));
            if (done) {
                break;
            }
            s = next;
        }
    }
    return critic;
}

}  // namespace opshape
