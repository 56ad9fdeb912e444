#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"
#include "opshape/mdp.hpp"

namespace opshape {

/**
 * MDP spec document (JSON):
 *
 *   {
 *     "states": 4,               // or a list of state names
 *     "actions": ["LEFT", "RIGHT"],
 *     "horizon": 3,
 *     "gamma_e": 0.99,
 *     "start": [1, 0, 0, 0],     // or {"name": prob, ...}
 *     "transitions": [[s, a, s', prob], ...],
 *     "rewards": [[s, a, s', t | "any", value], ...],
 *     "terminal": [3]            // optional
 *   }
 *
 * States and actions may be referenced by index or by name. Unlisted
 * transitions have probability 0 and unlisted rewards are 0. A timed reward
 * entry takes precedence over an "any" entry for the same (s, a, s').
 */
Mdp mdp_from_json(const nlohmann::json& doc);
Mdp load_mdp(const std::filesystem::path& path);

}  // namespace opshape
