#pragma once

#include <cmath>
#include <vector>

#include "opshape/environments.hpp"
#include "opshape/mdp.hpp"

namespace fixtures {

using namespace opshape;

inline RewardFn zero_reward() {
    return [](StateId, ActionId, StateId, int) { return 0.0; };
}

/// s0 -> s1 -> ... -> terminal goal; one action; reward 1 on entering the goal.
inline Mdp chain(int length, double gamma, int horizon) {
    const int goal = length;
    std::vector<std::vector<std::vector<Transition>>> tr(static_cast<std::size_t>(length + 1));
    for (int s = 0; s <= length; ++s) tr[s] = {{{s == goal ? goal : s + 1, 1.0}}};
    std::vector<double> start(static_cast<std::size_t>(length + 1), 0.0);
    start[0] = 1.0;
    std::vector<bool> terminal(static_cast<std::size_t>(length + 1), false);
    terminal[goal] = true;
    return Mdp(length + 1, 1, start, tr,
               [goal](StateId s, ActionId, StateId next, int) { return s != goal && next == goal ? 1.0 : 0.0; },
               gamma, horizon, terminal);
}

/// One decision, then a terminal state; action a pays rewards[a].
inline Mdp bandit(std::vector<double> rewards) {
    const int actions = static_cast<int>(rewards.size());
    std::vector<std::vector<std::vector<Transition>>> tr(2, std::vector<std::vector<Transition>>(actions));
    for (int a = 0; a < actions; ++a) {
        tr[0][a] = {{1, 1.0}};
        tr[1][a] = {{1, 1.0}};
    }
    return Mdp(2, actions, {1.0, 0.0}, tr,
               [rewards](StateId s, ActionId a, StateId, int) { return s == 0 ? rewards[a] : 0.0; }, 0.99, 1,
               {false, true});
}

/// Two-state MDP with stochastic transitions and time-dependent reward.
inline Mdp stochastic(int horizon) {
    std::vector<std::vector<std::vector<Transition>>> tr = {
        {{{0, 0.3}, {1, 0.7}}, {{0, 0.9}, {1, 0.1}}},
        {{{0, 0.5}, {1, 0.5}}, {{1, 1.0}}},
    };
    return Mdp(2, 2, {0.6, 0.4}, tr,
               [](StateId s, ActionId a, StateId next, int t) { return 0.5 * s - 0.25 * a + next + 0.1 * t; }, 0.9,
               horizon);
}

inline Mdp two_path() { return build_env(EnvSpec{}); }

}  // namespace fixtures
