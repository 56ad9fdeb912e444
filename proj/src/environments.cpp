#include "opshape/environments.hpp"

#include <algorithm>

#include "opshape/random.hpp"

namespace opshape {

namespace {

struct Grid {
    int width;
    int height;
    StateId id(int x, int y) const { return y * width + x; }
    int x(StateId s) const { return s % width; }
    int y(StateId s) const { return s / width; }
};

// UP, RIGHT, DOWN, LEFT
constexpr int kDx[4] = {0, 1, 0, -1};
constexpr int kDy[4] = {-1, 0, 1, 0};

std::string coords(const Cell& c) {
    return "(" + std::to_string(c.x) + ", " + std::to_string(c.y) + ")";
}

int dims_or(int v, int fallback) { return v > 0 ? v : fallback; }

using TransitionTensor = std::vector<std::vector<std::vector<Transition>>>;

TransitionTensor deterministic_tensor(int num_states, int num_actions) {
    return TransitionTensor(static_cast<std::size_t>(num_states),
                            std::vector<std::vector<Transition>>(static_cast<std::size_t>(num_actions)));
}

void check_horizon(int horizon) {
    if (horizon < 1) {
        throw ModelError("horizon must be >= 1");
    }
}

Mdp build_two_path_chest(const EnvSpec& spec) {
    const int horizon = spec.horizon > 0 ? spec.horizon : 3;
    const double gamma = spec.gamma_e >= 0.0 ? spec.gamma_e : 0.99;
    check_horizon(horizon);
    constexpr StateId s0 = 0, left = 1, right = 2, goal = 3;
    auto tr = deterministic_tensor(4, 2);
    tr[s0][0] = {{left, 1.0}};
    tr[s0][1] = {{right, 1.0}};
    for (int a = 0; a < 2; ++a) {
        tr[left][static_cast<std::size_t>(a)] = {{goal, 1.0}};
        tr[right][static_cast<std::size_t>(a)] = {{goal, 1.0}};
        tr[goal][static_cast<std::size_t>(a)] = {{goal, 1.0}};
    }
    const double left_pay = spec.goal_reward;
    const double right_pay = spec.side_reward;
    RewardFn reward = [=](StateId s, ActionId, StateId next, int) {
        if (next == goal && s == left) {
            return left_pay;
        }
        if (next == goal && s == right) {
            return right_pay;
        }
        return 0.0;
    };
    return Mdp(4, 2, {1.0, 0.0, 0.0, 0.0}, std::move(tr), std::move(reward), gamma, horizon,
               {false, false, false, true});
}

Mdp build_long_corridor(const EnvSpec& spec) {
    if (spec.length < 1) {
        throw ModelError("corridor length must be >= 1");
    }
    const int length = spec.length;
    const int num_states = length + 1;
    const int horizon = spec.horizon > 0 ? spec.horizon : 2 * num_states;
    const double gamma = spec.gamma_e >= 0.0 ? spec.gamma_e : 0.99;
    check_horizon(horizon);
    const StateId goal = length;
    auto tr = deterministic_tensor(num_states, 2);
    for (StateId s = 0; s < length; ++s) {
        tr[static_cast<std::size_t>(s)][0] = {{std::max(0, s - 1), 1.0}};
        tr[static_cast<std::size_t>(s)][1] = {{s + 1, 1.0}};
    }
    tr[static_cast<std::size_t>(goal)][0] = {{goal, 1.0}};
    tr[static_cast<std::size_t>(goal)][1] = {{goal, 1.0}};
    const double goal_pay = spec.goal_reward;
    const double step_pay = spec.step_reward;
    RewardFn reward = [=](StateId s, ActionId, StateId next, int) {
        if (s == goal) {
            return 0.0;
        }
        double r = step_pay * (next - s);
        if (next == goal) {
            r += goal_pay;
        }
        return r;
    };
    std::vector<double> start(static_cast<std::size_t>(num_states), 0.0);
    start[0] = 1.0;
    std::vector<bool> terminal(static_cast<std::size_t>(num_states), false);
    terminal[static_cast<std::size_t>(goal)] = true;
    return Mdp(num_states, 2, std::move(start), std::move(tr), std::move(reward), gamma, horizon,
               std::move(terminal));
}

Mdp build_grid(const EnvSpec& spec, bool cliff) {
    const Grid g{dims_or(spec.width, 4), dims_or(spec.height, cliff ? 4 : 3)};
    if (g.width < 2 || g.height < 1) {
        throw ModelError("grid must be at least 2 x 1");
    }
    const int horizon = spec.horizon > 0 ? spec.horizon : 6;
    const double gamma = spec.gamma_e >= 0.0 ? spec.gamma_e : 0.99;
    check_horizon(horizon);
    const int num_states = g.width * g.height;
    std::vector<bool> terminal(static_cast<std::size_t>(num_states), false);
    std::vector<bool> is_cliff(static_cast<std::size_t>(num_states), false);
    StateId start = 0;
    StateId goal = 0;
    if (cliff) {
        start = g.id(0, g.height - 1);
        goal = g.id(g.width - 1, g.height - 1);
        for (int x = 1; x + 1 < g.width; ++x) {
            is_cliff[static_cast<std::size_t>(g.id(x, g.height - 1))] = true;
            terminal[static_cast<std::size_t>(g.id(x, g.height - 1))] = true;
        }
    } else {
        start = g.id(0, 0);
        goal = spec.goal ? cell_state(spec, *spec.goal) : g.id(g.width - 1, 0);
        if (goal == start) {
            throw ModelError("goal placed on the start cell " + coords({0, 0}));
        }
    }
    terminal[static_cast<std::size_t>(goal)] = true;

    auto tr = deterministic_tensor(num_states, 4);
    for (StateId s = 0; s < num_states; ++s) {
        for (int a = 0; a < 4; ++a) {
            StateId next = s;
            if (!terminal[static_cast<std::size_t>(s)]) {
                const int nx = g.x(s) + kDx[a];
                const int ny = g.y(s) + kDy[a];
                if (nx >= 0 && nx < g.width && ny >= 0 && ny < g.height) {
                    next = g.id(nx, ny);
                }
            }
            tr[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)] = {{next, 1.0}};
        }
    }
    const double goal_pay = spec.goal_reward;
    const double cost = cliff ? spec.step_cost : 0.0;
    const double cliff_pay = spec.cliff_reward;
    RewardFn reward = [=](StateId s, ActionId, StateId next, int) {
        if (terminal[static_cast<std::size_t>(s)]) {
            return 0.0;
        }
        if (next == goal) {
            return goal_pay;
        }
        if (is_cliff[static_cast<std::size_t>(next)]) {
            return cliff_pay;
        }
        return -cost;
    };
    std::vector<double> start_dist(static_cast<std::size_t>(num_states), 0.0);
    start_dist[static_cast<std::size_t>(start)] = 1.0;
    return Mdp(num_states, 4, std::move(start_dist), std::move(tr), std::move(reward), gamma, horizon,
               std::move(terminal));
}

}  // namespace

EnvKind parse_env_kind(const std::string& name) {
    if (name == "grid_world") return EnvKind::grid_world;
    if (name == "cliff_walk") return EnvKind::cliff_walk;
    if (name == "long_corridor") return EnvKind::long_corridor;
    if (name == "two_path_chest") return EnvKind::two_path_chest;
    throw ModelError("unknown environment kind '" + name + "'");
}

std::string to_string(EnvKind kind) {
    switch (kind) {
    case EnvKind::grid_world: return "grid_world";
    case EnvKind::cliff_walk: return "cliff_walk";
    case EnvKind::long_corridor: return "long_corridor";
    case EnvKind::two_path_chest: return "two_path_chest";
    }
    return "unknown";
}

StateId cell_state(const EnvSpec& spec, const Cell& cell) {
    auto reject = [&] { return ModelError("cell " + coords(cell) + " is outside the " + to_string(spec.kind)); };
    switch (spec.kind) {
    case EnvKind::two_path_chest:
        if (cell.y != 0 || cell.x < 0 || cell.x > 3) throw reject();
        return cell.x;
    case EnvKind::long_corridor:
        if (cell.y != 0 || cell.x < 0 || cell.x > spec.length) throw reject();
        return cell.x;
    case EnvKind::grid_world:
    case EnvKind::cliff_walk: {
        const int w = dims_or(spec.width, 4);
        const int h = dims_or(spec.height, spec.kind == EnvKind::cliff_walk ? 4 : 3);
        if (cell.x < 0 || cell.x >= w || cell.y < 0 || cell.y >= h) throw reject();
        return cell.y * w + cell.x;
    }
    }
    throw reject();
}

Mdp build_env(const EnvSpec& spec) {
    for (const auto& cell : spec.noisy_cells) {
        cell_state(spec, cell);
    }
    switch (spec.kind) {
    case EnvKind::two_path_chest: return build_two_path_chest(spec);
    case EnvKind::long_corridor: return build_long_corridor(spec);
    case EnvKind::cliff_walk: return build_grid(spec, true);
    case EnvKind::grid_world: return build_grid(spec, false);
    }
    throw ModelError("unknown environment kind");
}

EnvInfo describe_env(const EnvSpec& spec) {
    EnvInfo info;
    for (const auto& cell : spec.noisy_cells) {
        info.noisy_states.push_back(cell_state(spec, cell));
    }
    switch (spec.kind) {
    case EnvKind::two_path_chest:
        info.state_names = {"s0", "L1", "R1", "G"};
        info.action_names = {"LEFT", "RIGHT"};
        break;
    case EnvKind::long_corridor:
        for (int x = 0; x < spec.length; ++x) {
            info.state_names.push_back("c" + std::to_string(x));
        }
        info.state_names.push_back("goal");
        info.action_names = {"LEFT", "RIGHT"};
        break;
    case EnvKind::grid_world:
    case EnvKind::cliff_walk: {
        const int w = dims_or(spec.width, 4);
        const int h = dims_or(spec.height, spec.kind == EnvKind::cliff_walk ? 4 : 3);
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                info.state_names.push_back(coords({x, y}));
            }
        }
        info.action_names = {"UP", "RIGHT", "DOWN", "LEFT"};
        if (spec.kind == EnvKind::cliff_walk) {
            info.decision_state = (h - 1) * w;
        }
        break;
    }
    }
    return info;
}

Trajectory rollout(const Mdp& mdp, const Policy& policy, std::uint64_t seed) {
    Rng rng(seed);
    Trajectory out;
    StateId s = sample_index(mdp.start_distribution(), rng);
    for (int t = 0; t < mdp.horizon(); ++t) {
        const ActionId a = sample_index(policy.distribution(s, t), rng);
        const auto& succ = mdp.successors(s, a);
        StateId next = succ.front().next;
        if (succ.size() > 1) {
            std::vector<double> probs;
            probs.reserve(succ.size());
            for (const auto& tr : succ) {
                probs.push_back(tr.prob);
            }
            next = succ[static_cast<std::size_t>(sample_index(probs, rng))].next;
        }
        const bool done = t == mdp.horizon() - 1 || mdp.is_terminal(next);
        out.push_back({t, s, a, mdp.reward(s, a, next, t), next, done});
        if (done) {
            break;
        }
        s = next;
    }
    return out;
}

}  // namespace opshape
