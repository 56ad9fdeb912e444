#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "opshape/intrinsic.hpp"
#include "opshape/mdp.hpp"
#include "opshape/shaping.hpp"

namespace opshape {

/// Tabular extrinsic and intrinsic state values, indexed by (s, t) or by s
/// alone. Column t = N reads as 0.
class Critic {
public:
    Critic() = default;
    Critic(int num_states, int horizon, bool time_indexed, double lr_e, double lr_i, double gamma_e, double gamma_i);

    double v_e(StateId s, int t) const { return t >= horizon_ ? 0.0 : v_e_[index(s, t)]; }
    double v_i(StateId s, int t) const { return t >= horizon_ ? 0.0 : v_i_[index(s, t)]; }
    double& v_e_at(StateId s, int t) { return v_e_[index(s, t)]; }
    double& v_i_at(StateId s, int t) { return v_i_[index(s, t)]; }

    double lr_e() const { return lr_e_; }
    double lr_i() const { return lr_i_; }
    double gamma_e() const { return gamma_e_; }
    double gamma_i() const { return gamma_i_; }
    bool time_indexed() const { return time_indexed_; }
    int horizon() const { return horizon_; }

private:
    std::size_t index(StateId s, int t) const {
        return time_indexed_ ? static_cast<std::size_t>(t) * static_cast<std::size_t>(num_states_) +
                                   static_cast<std::size_t>(s)
                             : static_cast<std::size_t>(s);
    }
    int num_states_ = 0;
    int horizon_ = 0;
    bool time_indexed_ = true;
    double lr_e_ = 0.1;
    double lr_i_ = 0.1;
    double gamma_e_ = 0.99;
    double gamma_i_ = 0.99;
    std::vector<double> v_e_;
    std::vector<double> v_i_;
};

enum class PolicyKind { softmax, q_learning };

PolicyKind parse_policy_kind(const std::string& name);
std::string to_string(PolicyKind kind);

struct TrainConfig {
    int iterations = 200;
    /// Environment steps per iteration; zeta advances once per iteration.
    int iteration_steps = 32;
    std::uint64_t seed = 0;
    PolicyKind policy = PolicyKind::softmax;
    double temperature = 1.0;
    double epsilon_greedy = 0.1;
    double lr_actor = 0.1;
    double lr_e = 0.1;
    double lr_i = 0.1;
    double lr_q = 0.1;
    /// When false, actor and critics share one entry per state across time.
    bool time_indexed = true;
    /// Leading iterations during which only the critics learn.
    int warmup_iterations = 0;
    /// Record one row every `record_every` iterations.
    int record_every = 1;
    StateId decision_state = 0;
    ImConfig im;
    ShaperConfig shaper;
};

void validate(const TrainConfig& config, const Mdp& mdp);

struct CurveRecord {
    int iteration;
    int episode;
    double ext_return;
    double int_return_raw;
    double int_return_shaped;
    double zeta;
    double max_action_prob;
    bool greedy_optimal;
};

struct LearningCurve {
    std::uint64_t seed = 0;
    std::vector<CurveRecord> records;
    bool final_greedy_optimal = false;
};

/// Raised when an update produces a non-finite value.
class TrainingAbort : public std::runtime_error {
public:
    TrainingAbort(long long step, const std::string& quantity);
    long long step() const { return step_; }
    const std::string& quantity() const { return quantity_; }

private:
    long long step_;
    std::string quantity_;
};

/**
 * Runs one seed. Returns are undiscounted sums over the last completed
 * episode. `optimal` is the extrinsic optimal action set used for the
 * greedy flag; it is computed when null.
 */
LearningCurve train(const Mdp& env, const TrainConfig& config, const OptimalActionSet* optimal = nullptr);

/// Whether every action of the greedy policy along its reachable support
/// lies in the optimal set.
bool greedy_in_optimal_set(const Mdp& env, const std::vector<std::vector<ActionId>>& greedy,
                           const OptimalActionSet& optimal);

/**
 * Exact critic values for a fixed policy: v_e = V^pi_E, and v_i the exact
 * intrinsic value on the augmented graph (raw IM for the ADOPS family,
 * shaped otherwise), averaged over the history nodes of each (s, t) with
 * weights equal to their reach probability.
 */
Critic exact_critic_snapshot(const Mdp& env, const Policy& policy, const ImConfig& im, const ShaperConfig& shaper);

/// Restricted intrinsic optimum for a Markov IM reward R_I(s') under the
/// extrinsically optimal actions. Terminal states have value 0.
ValueTable markov_v_star_i(const Mdp& env, const OptimalActionSet& optimal, const IntrinsicStream& im,
                           double gamma_i);

/// TD(0) evaluation of a fixed policy for `episodes` episodes.
Critic td_policy_evaluation(const Mdp& env, const Policy& policy, int episodes, double lr, std::uint64_t seed);

}  // namespace opshape
