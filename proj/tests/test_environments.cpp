#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "fixtures.hpp"
#include "opshape/environments.hpp"

using namespace opshape;

TEST_CASE("two_path_chest defaults") {
    const EnvSpec spec;
    const Mdp mdp = build_env(spec);
    const EnvInfo info = describe_env(spec);
    CHECK(info.state_names == std::vector<std::string>{"s0", "L1", "R1", "G"});
    CHECK(info.action_names == std::vector<std::string>{"LEFT", "RIGHT"});
    CHECK(mdp.horizon() == 3);
    CHECK(mdp.is_terminal(3));
    const auto best = optimal_action_set(value_iteration(mdp).q);
    CHECK(best.at(info.decision_state, 0) == std::vector<ActionId>{0});
}

TEST_CASE("long corridor pays a single discounted reward") {
    EnvSpec spec;
    spec.kind = EnvKind::long_corridor;
    spec.length = 10;
    spec.gamma_e = 0.9;
    const Solution sol = value_iteration(build_env(spec));
    CHECK(sol.v(0, 0) == doctest::Approx(std::pow(0.9, 9)).epsilon(1e-14));
}

TEST_CASE("cliff walk optimal path avoids the cliff") {
    EnvSpec spec;
    spec.kind = EnvKind::cliff_walk;
    spec.step_cost = 0.01;
    spec.cliff_reward = -1.0;
    spec.goal_reward = 1.0;
    const Mdp mdp = build_env(spec);
    const Solution sol = value_iteration(mdp);
    std::vector<StateId> cliffs;
    for (int x = 1; x < 3; ++x) cliffs.push_back(cell_state(spec, {x, 3}));
    Policy greedy(mdp.num_states(), mdp.num_actions(), mdp.horizon());
    for (int t = 0; t < mdp.horizon(); ++t) {
        for (StateId s = 0; s < mdp.num_states(); ++s) {
            greedy.set_action(s, t, argmax_set(sol.q.row(s, t), 1e-12).front());
        }
    }
    const auto traj = rollout(mdp, greedy, 0);
    REQUIRE(!traj.empty());
    CHECK(traj.back().done);
    CHECK(traj.back().r_ext > 0.0);
    for (const auto& step : traj) {
        CHECK(std::find(cliffs.begin(), cliffs.end(), step.next) == cliffs.end());
    }
}

TEST_CASE("out-of-range cells are rejected") {
    EnvSpec spec;
    spec.kind = EnvKind::grid_world;
    spec.noisy_cells = {{7, 0}};
    CHECK_THROWS_AS(build_env(spec), ModelError);
}

TEST_CASE("rollouts of deterministic systems ignore the seed") {
    const Mdp mdp = fixtures::two_path();
    const Policy pi = Policy::deterministic(2, {{0, 0, 0, 0}, {0, 0, 0, 0}, {0, 0, 0, 0}});
    const auto a = rollout(mdp, pi, 1);
    const auto b = rollout(mdp, pi, 99);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].next == b[i].next);
        CHECK(a[i].r_ext == b[i].r_ext);
    }
}

TEST_CASE("stochastic rollouts differ by seed and respect the horizon") {
    const Mdp mdp = fixtures::stochastic(20);
    const Policy pi = Policy::uniform(2, 2, 20);
    const auto a = rollout(mdp, pi, 1);
    const auto b = rollout(mdp, pi, 2);
    CHECK(a.size() <= 20u);
    CHECK(b.size() <= 20u);
    bool differ = a.size() != b.size();
    for (std::size_t i = 0; !differ && i < a.size(); ++i) differ = a[i].next != b[i].next || a[i].a != b[i].a;
    CHECK(differ);
}

TEST_CASE("empirical returns match exact evaluation") {
    const Mdp mdp = fixtures::stochastic(6);
    const Policy pi = Policy::uniform(2, 2, 6);
    const Solution exact = policy_evaluation(mdp, pi);
    const double target = 0.6 * exact.v(0, 0) + 0.4 * exact.v(1, 0);
    const int n = 100'000;
    double sum = 0.0, sq = 0.0;
    for (int k = 0; k < n; ++k) {
        double g = 0.0, discount = 1.0;
        for (const auto& step : rollout(mdp, pi, static_cast<std::uint64_t>(k))) {
            g += discount * step.r_ext;
            discount *= mdp.gamma_e();
        }
        sum += g;
        sq += g * g;
    }
    const double mean = sum / n;
    const double se = std::sqrt((sq / n - mean * mean) / n);
    CHECK(std::abs(mean - target) <= 3.0 * se);
}
