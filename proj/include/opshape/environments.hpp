#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "opshape/mdp.hpp"

namespace opshape {

enum class EnvKind { grid_world, cliff_walk, long_corridor, two_path_chest };

EnvKind parse_env_kind(const std::string& name);
std::string to_string(EnvKind kind);

struct Cell {
    int x = 0;
    int y = 0;
    bool operator==(const Cell&) const = default;
};

/**
 * Parameters of a bundled environment. Zero / negative values for horizon
 * and gamma_e select the per-kind defaults.
 *
 *   two_path_chest  s0 -LEFT-> L1 -> G pays goal_reward, s0 -RIGHT-> R1 -> G
 *                   pays side_reward. G is terminal. Default N = 3.
 *   long_corridor   cells 0..length-1 plus a terminal goal reached by moving
 *                   RIGHT from the last cell. Optional dense step_reward per
 *                   cell of progress (moving LEFT pays it back).
 *                   Default N = 2 * (length + 1).
 *   cliff_walk      width x height, start bottom-left, goal bottom-right,
 *                   the cells between them are terminal cliffs. Each move
 *                   costs step_cost. Default 4 x 4, N = 6.
 *   grid_world      width x height, start (0,0), goal (width-1, 0) unless
 *                   placed explicitly. Default 4 x 3, N = 6.
 */
struct EnvSpec {
    EnvKind kind = EnvKind::two_path_chest;
    int width = 0;
    int height = 0;
    int length = 10;
    int horizon = 0;
    double gamma_e = -1.0;
    double goal_reward = 1.0;
    double side_reward = 0.5;
    double step_reward = 0.0;
    double step_cost = 0.01;
    double cliff_reward = -1.0;
    std::optional<Cell> goal;
    /// Cells whose novelty never decays (noisy-TV analogue).
    std::vector<Cell> noisy_cells;
};

/// Names and special states of a built environment.
struct EnvInfo {
    std::vector<std::string> state_names;
    std::vector<std::string> action_names;
    std::vector<StateId> noisy_states;
    StateId decision_state = 0;
};

/// Deterministic construction; identical spec gives an identical Mdp.
Mdp build_env(const EnvSpec& spec);
EnvInfo describe_env(const EnvSpec& spec);

/// Maps a cell to its state id, rejecting out-of-range cells with their
/// coordinates.
StateId cell_state(const EnvSpec& spec, const Cell& cell);

struct Step {
    int t;
    StateId s;
    ActionId a;
    double r_ext;
    StateId next;
    bool done;
};

using Trajectory = std::vector<Step>;

/// Samples one episode. Ends at the horizon or on entering a terminal state.
Trajectory rollout(const Mdp& mdp, const Policy& policy, std::uint64_t seed);

}  // namespace opshape
