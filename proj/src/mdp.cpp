#include "opshape/mdp.hpp"

#include <algorithm>
#include <limits>
#include <cmath>
#include <numeric>
#include <sstream>

namespace opshape {

namespace {

constexpr double kSumTolerance = 1e-12;

std::string where(StateId s, ActionId a, StateId next, int t) {
    std::ostringstream os;
    os << "(s=" << s << ", a=" << a << ", s'=" << next << ", t=" << t << ")";
    return os.str();
}

Solution backward_induction(const Mdp& mdp, const Policy* policy, const RewardFn& reward_override,
                            double discount) {
    const RewardFn& reward = reward_override ? reward_override : mdp.reward_fn();
    const double gamma = discount >= 0.0 ? discount : mdp.gamma_e();
    const int n = mdp.horizon();
    Solution out{ValueTable(mdp.num_states(), n), QTable(mdp.num_states(), mdp.num_actions(), n)};

    for (int t = n - 1; t >= 0; --t) {
        for (StateId s = 0; s < mdp.num_states(); ++s) {
            double best = -std::numeric_limits<double>::infinity();
            double expected = 0.0;
            for (ActionId a = 0; a < mdp.num_actions(); ++a) {
                double q = 0.0;
                for (const auto& tr : mdp.successors(s, a)) {
                    const double r = reward(s, a, tr.next, t);
                    if (!std::isfinite(r)) {
                        throw ModelError("non-finite reward at " + where(s, a, tr.next, t));
                    }
                    q += tr.prob * (r + gamma * out.v(tr.next, t + 1));
                }
                out.q(s, a, t) = q;
                best = std::max(best, q);
                if (policy != nullptr) {
                    expected += policy->prob(s, a, t) * q;
                }
            }
            out.v(s, t) = policy != nullptr ? expected : best;
        }
    }
    return out;
}

}  // namespace

Mdp::Mdp(int num_states, int num_actions, std::vector<double> start_distribution,
         std::vector<std::vector<std::vector<Transition>>> transitions, RewardFn reward, double gamma_e,
         int horizon, std::vector<bool> terminal)
    : num_states_(num_states), num_actions_(num_actions), start_(std::move(start_distribution)),
      transitions_(std::move(transitions)), reward_(std::move(reward)), gamma_e_(gamma_e), horizon_(horizon),
      terminal_(std::move(terminal)) {
    if (num_states_ <= 0 || num_actions_ <= 0) {
        throw ModelError("an MDP needs at least one state and one action");
    }
    if (horizon_ < 1) {
        throw ModelError("horizon must be >= 1");
    }
    if (!(gamma_e_ >= 0.0 && gamma_e_ <= 1.0)) {
        throw ModelError("gamma_e must lie in [0, 1]");
    }
    if (!reward_) {
        throw ModelError("reward function is empty");
    }
    if (start_.size() != static_cast<std::size_t>(num_states_)) {
        throw ModelError("start distribution has wrong length");
    }
    double start_sum = 0.0;
    for (double p : start_) {
        if (p < 0.0) {
            throw ModelError("negative start probability");
        }
        start_sum += p;
    }
    if (std::abs(start_sum - 1.0) > kSumTolerance) {
        throw ModelError("start distribution sums to " + std::to_string(start_sum));
    }
    if (terminal_.empty()) {
        terminal_.assign(static_cast<std::size_t>(num_states_), false);
    }
    if (terminal_.size() != static_cast<std::size_t>(num_states_)) {
        throw ModelError("terminal mask has wrong length");
    }
    if (transitions_.size() != static_cast<std::size_t>(num_states_)) {
        throw ModelError("transition tensor has wrong number of states");
    }
    for (StateId s = 0; s < num_states_; ++s) {
        auto& rows = transitions_[static_cast<std::size_t>(s)];
        if (rows.size() != static_cast<std::size_t>(num_actions_)) {
            throw ModelError("transition tensor has wrong number of actions at state " + std::to_string(s));
        }
        for (ActionId a = 0; a < num_actions_; ++a) {
            auto& row = rows[static_cast<std::size_t>(a)];
            std::erase_if(row, [](const Transition& tr) { return tr.prob == 0.0; });
            double sum = 0.0;
            for (const auto& tr : row) {
                if (tr.next < 0 || tr.next >= num_states_) {
                    throw ModelError("transition target out of range at " + where(s, a, tr.next, 0));
                }
                if (tr.prob < 0.0) {
                    throw ModelError("negative transition probability at " + where(s, a, tr.next, 0));
                }
                sum += tr.prob;
            }
            if (std::abs(sum - 1.0) > kSumTolerance) {
                throw ModelError("transition row (s=" + std::to_string(s) + ", a=" + std::to_string(a) +
                                 ") sums to " + std::to_string(sum));
            }
            if (terminal_[static_cast<std::size_t>(s)]) {
                if (row.size() != 1 || row.front().next != s) {
                    throw ModelError("terminal state " + std::to_string(s) + " must be a self-loop");
                }
                for (int t = 0; t < horizon_; ++t) {
                    if (reward_(s, a, s, t) != 0.0) {
                        throw ModelError("terminal state " + std::to_string(s) + " must have zero reward");
                    }
                }
            }
        }
    }
}

Policy::Policy(int num_states, int num_actions, int horizon)
    : num_states_(num_states), num_actions_(num_actions), horizon_(horizon),
      probs_(static_cast<std::size_t>(num_states) * static_cast<std::size_t>(num_actions) *
                 static_cast<std::size_t>(horizon),
             0.0) {}

Policy Policy::uniform(int num_states, int num_actions, int horizon) {
    Policy p(num_states, num_actions, horizon);
    std::fill(p.probs_.begin(), p.probs_.end(), 1.0 / num_actions);
    return p;
}

Policy Policy::deterministic(int num_actions, const std::vector<std::vector<ActionId>>& actions) {
    if (actions.empty() || actions.front().empty()) {
        throw ModelError("deterministic policy needs at least one (s, t) entry");
    }
    const int horizon = static_cast<int>(actions.size());
    const int num_states = static_cast<int>(actions.front().size());
    Policy p(num_states, num_actions, horizon);
    for (int t = 0; t < horizon; ++t) {
        if (actions[static_cast<std::size_t>(t)].size() != static_cast<std::size_t>(num_states)) {
            throw ModelError("ragged deterministic policy table");
        }
        for (StateId s = 0; s < num_states; ++s) {
            p.set_action(s, t, actions[static_cast<std::size_t>(t)][static_cast<std::size_t>(s)]);
        }
    }
    return p;
}

void Policy::set_action(StateId s, int t, ActionId a) {
    if (a < 0 || a >= num_actions_) {
        throw ModelError("action out of range: " + std::to_string(a));
    }
    for (ActionId b = 0; b < num_actions_; ++b) {
        prob(s, b, t) = b == a ? 1.0 : 0.0;
    }
}

bool OptimalActionSet::contains(StateId s, int t, ActionId a) const {
    const auto& set = at(s, t);
    return std::find(set.begin(), set.end(), a) != set.end();
}

Solution value_iteration(const Mdp& mdp, const RewardFn& reward_override, double discount) {
    return backward_induction(mdp, nullptr, reward_override, discount);
}

Solution policy_evaluation(const Mdp& mdp, const Policy& policy, const RewardFn& reward_override,
                           double discount) {
    if (policy.num_states() != mdp.num_states() || policy.num_actions() != mdp.num_actions() ||
        policy.horizon() < mdp.horizon()) {
        throw ModelError("policy shape does not match the MDP");
    }
    for (int t = 0; t < mdp.horizon(); ++t) {
        for (StateId s = 0; s < mdp.num_states(); ++s) {
            double sum = 0.0;
            for (double p : policy.distribution(s, t)) {
                if (p < 0.0) {
                    throw ModelError("negative policy probability at (s=" + std::to_string(s) +
                                     ", t=" + std::to_string(t) + ")");
                }
                sum += p;
            }
            if (std::abs(sum - 1.0) > kSumTolerance) {
                throw ModelError("policy distribution at (s=" + std::to_string(s) + ", t=" + std::to_string(t) +
                                 ") sums to " + std::to_string(sum));
            }
        }
    }
    return backward_induction(mdp, &policy, reward_override, discount);
}

std::vector<ActionId> argmax_set(std::span<const double> row, double tie_tolerance) {
    const double best = *std::max_element(row.begin(), row.end());
    std::vector<ActionId> out;
    for (std::size_t a = 0; a < row.size(); ++a) {
        if (row[a] >= best - tie_tolerance) {
            out.push_back(static_cast<ActionId>(a));
        }
    }
    return out;
}

OptimalActionSet optimal_action_set(const QTable& q, double tie_tolerance) {
    if (!(tie_tolerance > 0.0)) {
        throw ModelError("tie_tolerance must be positive");
    }
    OptimalActionSet out(q.num_states(), q.horizon(), tie_tolerance);
    for (int t = 0; t < q.horizon(); ++t) {
        for (StateId s = 0; s < q.num_states(); ++s) {
            out.at(s, t) = argmax_set(q.row(s, t), tie_tolerance);
        }
    }
    return out;
}

double discounted_return(std::span<const double> rewards, double gamma, std::size_t from_t) {
    if (rewards.empty()) {
        throw ModelError("discounted_return of an empty sequence");
    }
    if (from_t >= rewards.size()) {
        throw ModelError("from_t out of range");
    }
    double total = 0.0;
    double weight = 1.0;
    for (std::size_t j = from_t; j < rewards.size(); ++j) {
        total += weight * rewards[j];
        weight *= gamma;
    }
    return total;
}

std::vector<std::vector<double>> occupancy(const Mdp& mdp, const Policy& policy) {
    const auto n = static_cast<std::size_t>(mdp.horizon());
    std::vector<std::vector<double>> mass(n, std::vector<double>(static_cast<std::size_t>(mdp.num_states()), 0.0));
    mass[0] = mdp.start_distribution();
    for (std::size_t t = 0; t + 1 < n; ++t) {
        for (StateId s = 0; s < mdp.num_states(); ++s) {
            const double m = mass[t][static_cast<std::size_t>(s)];
            if (m == 0.0 || mdp.is_terminal(s)) {
                continue;
            }
            for (ActionId a = 0; a < mdp.num_actions(); ++a) {
                const double pa = policy.prob(s, a, static_cast<int>(t));
                if (pa == 0.0) {
                    continue;
                }
                for (const auto& tr : mdp.successors(s, a)) {
                    mass[t + 1][static_cast<std::size_t>(tr.next)] += m * pa * tr.prob;
                }
            }
        }
    }
    return mass;
}

}  // namespace opshape
