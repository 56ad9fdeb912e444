#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

/// Finite-horizon MDPs and their exact solvers.
namespace opshape {

using StateId = int;
using ActionId = int;

/// Default tolerance used when comparing Q-values for optimal action sets.
inline constexpr double kDefaultTieTolerance = 1e-9;

/// Thrown for malformed models, policies or solver inputs.
class ModelError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct Transition {
    StateId next;
    double prob;
};

/// Reward signature (s, a, s', t). Time dependence is allowed.
using RewardFn = std::function<double(StateId, ActionId, StateId, int)>;

/**
 * A finite MDP with a finite horizon N. Decision epochs are t = 0..N-1 and
 * value tables carry a zero boundary column at t = N.
 *
 * Terminal states end an episode on arrival. They must be zero-reward
 * self-loops, so the solvers need no special casing for them.
 *
 * Immutable after construction.
 */
class Mdp {
public:
    Mdp(int num_states, int num_actions, std::vector<double> start_distribution,
        std::vector<std::vector<std::vector<Transition>>> transitions, RewardFn reward,
        double gamma_e, int horizon, std::vector<bool> terminal = {});

    int num_states() const { return num_states_; }
    int num_actions() const { return num_actions_; }
    int horizon() const { return horizon_; }
    double gamma_e() const { return gamma_e_; }
    const std::vector<double>& start_distribution() const { return start_; }

    /// Successors of (s, a) with nonzero probability.
    const std::vector<Transition>& successors(StateId s, ActionId a) const {
        return transitions_[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)];
    }
    double reward(StateId s, ActionId a, StateId next, int t) const { return reward_(s, a, next, t); }
    const RewardFn& reward_fn() const { return reward_; }
    bool is_terminal(StateId s) const { return terminal_[static_cast<std::size_t>(s)]; }

private:
    int num_states_;
    int num_actions_;
    std::vector<double> start_;
    std::vector<std::vector<std::vector<Transition>>> transitions_;
    RewardFn reward_;
    double gamma_e_;
    int horizon_;
    std::vector<bool> terminal_;
};

/// V(s, t) for t in [0, N]; column N is the zero boundary.
class ValueTable {
public:
    ValueTable() = default;
    ValueTable(int num_states, int horizon)
        : num_states_(num_states), horizon_(horizon),
          values_(static_cast<std::size_t>(num_states) * static_cast<std::size_t>(horizon + 1), 0.0) {}

    double& operator()(StateId s, int t) { return values_[index(s, t)]; }
    double operator()(StateId s, int t) const { return values_[index(s, t)]; }
    int num_states() const { return num_states_; }
    int horizon() const { return horizon_; }

private:
    std::size_t index(StateId s, int t) const {
        return static_cast<std::size_t>(t) * static_cast<std::size_t>(num_states_) + static_cast<std::size_t>(s);
    }
    int num_states_ = 0;
    int horizon_ = 0;
    std::vector<double> values_;
};

/// Q(s, a, t) for t in [0, N-1].
class QTable {
public:
    QTable() = default;
    QTable(int num_states, int num_actions, int horizon)
        : num_states_(num_states), num_actions_(num_actions), horizon_(horizon),
          values_(static_cast<std::size_t>(num_states) * static_cast<std::size_t>(num_actions) *
                      static_cast<std::size_t>(horizon),
                  0.0) {}

    double& operator()(StateId s, ActionId a, int t) { return values_[index(s, a, t)]; }
    double operator()(StateId s, ActionId a, int t) const { return values_[index(s, a, t)]; }
    std::span<const double> row(StateId s, int t) const {
        return {values_.data() + index(s, 0, t), static_cast<std::size_t>(num_actions_)};
    }
    int num_states() const { return num_states_; }
    int num_actions() const { return num_actions_; }
    int horizon() const { return horizon_; }

private:
    std::size_t index(StateId s, ActionId a, int t) const {
        return (static_cast<std::size_t>(t) * static_cast<std::size_t>(num_states_) + static_cast<std::size_t>(s)) *
                   static_cast<std::size_t>(num_actions_) +
               static_cast<std::size_t>(a);
    }
    int num_states_ = 0;
    int num_actions_ = 0;
    int horizon_ = 0;
    std::vector<double> values_;
};

/**
 * Time-dependent stochastic policy pi(a | s, t). The container does not
 * enforce normalization; policy_evaluation rejects rows that do not sum to 1.
 */
class Policy {
public:
    Policy() = default;
    Policy(int num_states, int num_actions, int horizon);

    static Policy uniform(int num_states, int num_actions, int horizon);
    /// actions[t][s] is the action taken at (s, t).
    static Policy deterministic(int num_actions, const std::vector<std::vector<ActionId>>& actions);

    double& prob(StateId s, ActionId a, int t) { return probs_[index(s, a, t)]; }
    double prob(StateId s, ActionId a, int t) const { return probs_[index(s, a, t)]; }
    std::span<const double> distribution(StateId s, int t) const {
        return {probs_.data() + index(s, 0, t), static_cast<std::size_t>(num_actions_)};
    }
    void set_action(StateId s, int t, ActionId a);

    int num_states() const { return num_states_; }
    int num_actions() const { return num_actions_; }
    int horizon() const { return horizon_; }

private:
    std::size_t index(StateId s, ActionId a, int t) const {
        return (static_cast<std::size_t>(t) * static_cast<std::size_t>(num_states_) + static_cast<std::size_t>(s)) *
                   static_cast<std::size_t>(num_actions_) +
               static_cast<std::size_t>(a);
    }
    int num_states_ = 0;
    int num_actions_ = 0;
    int horizon_ = 0;
    std::vector<double> probs_;
};

/// Per (s, t) set of actions within tie_tolerance of the row maximum.
class OptimalActionSet {
public:
    OptimalActionSet() = default;
    OptimalActionSet(int num_states, int horizon, double tie_tolerance)
        : num_states_(num_states), horizon_(horizon), tie_tolerance_(tie_tolerance),
          sets_(static_cast<std::size_t>(num_states) * static_cast<std::size_t>(horizon)) {}

    const std::vector<ActionId>& at(StateId s, int t) const { return sets_[index(s, t)]; }
    std::vector<ActionId>& at(StateId s, int t) { return sets_[index(s, t)]; }
    bool contains(StateId s, int t, ActionId a) const;
    double tie_tolerance() const { return tie_tolerance_; }
    int num_states() const { return num_states_; }
    int horizon() const { return horizon_; }

private:
    std::size_t index(StateId s, int t) const {
        return static_cast<std::size_t>(t) * static_cast<std::size_t>(num_states_) + static_cast<std::size_t>(s);
    }
    int num_states_ = 0;
    int horizon_ = 0;
    double tie_tolerance_ = kDefaultTieTolerance;
    std::vector<std::vector<ActionId>> sets_;
};

struct Solution {
    ValueTable v;
    QTable q;
};

/// Backward induction for V* and Q*. An empty reward_override means the
/// MDP's own reward; `discount` overrides gamma_e when given (>= 0).
Solution value_iteration(const Mdp& mdp, const RewardFn& reward_override = {}, double discount = -1.0);

/// Exact V^pi and Q^pi by backward induction.
Solution policy_evaluation(const Mdp& mdp, const Policy& policy, const RewardFn& reward_override = {},
                           double discount = -1.0);

/// {a : Q[s,a,t] >= max_a Q[s,a,t] - tie_tolerance} for every (s, t).
OptimalActionSet optimal_action_set(const QTable& q, double tie_tolerance = kDefaultTieTolerance);

/// Actions of one Q row within tolerance of its maximum.
std::vector<ActionId> argmax_set(std::span<const double> row, double tie_tolerance);

/// sum_{j=from_t}^{end} gamma^{j-from_t} r_j.
double discounted_return(std::span<const double> rewards, double gamma, std::size_t from_t = 0);

/// Probability of being at s at time t when following `policy` from the
/// start distribution.
std::vector<std::vector<double>> occupancy(const Mdp& mdp, const Policy& policy);

}  // namespace opshape
