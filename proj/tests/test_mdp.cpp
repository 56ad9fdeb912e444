#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <functional>

#include "fixtures.hpp"
#include "opshape/environments.hpp"
#include "opshape/mdp.hpp"
#include "opshape/mdp_io.hpp"

using namespace opshape;

namespace {

// Expected discounted return of an open-loop action sequence, following
// the done semantics (terminal arrival ends the episode).
double open_loop_return(const Mdp& mdp, const std::vector<ActionId>& seq) {
    std::vector<double> dist = mdp.start_distribution();
    double total = 0.0;
    double discount = 1.0;
    for (int t = 0; t < static_cast<int>(seq.size()); ++t) {
        std::vector<double> next(dist.size(), 0.0);
        for (StateId s = 0; s < mdp.num_states(); ++s) {
            if (dist[s] == 0.0) continue;
            for (const auto& tr : mdp.successors(s, seq[t])) {
                total += discount * dist[s] * tr.prob * mdp.reward(s, seq[t], tr.next, t);
                if (!mdp.is_terminal(tr.next)) next[tr.next] += dist[s] * tr.prob;
            }
        }
        dist = next;
        discount *= mdp.gamma_e();
    }
    return total;
}

double best_open_loop(const Mdp& mdp, std::vector<ActionId> prefix) {
    if (static_cast<int>(prefix.size()) == mdp.horizon()) return open_loop_return(mdp, prefix);
    double best = -1e300;
    for (ActionId a = 0; a < mdp.num_actions(); ++a) {
        prefix.push_back(a);
        best = std::max(best, best_open_loop(mdp, prefix));
        prefix.pop_back();
    }
    return best;
}

}  // namespace

TEST_CASE("zero reward gives zero values") {
    const Mdp mdp(1, 1, {1.0}, {{{{0, 1.0}}}}, fixtures::zero_reward(), 0.7, 5);
    const Solution sol = value_iteration(mdp);
    for (int t = 0; t <= 5; ++t) CHECK(sol.v(0, t) == 0.0);
}

TEST_CASE("single discounted reward") {
    const Solution sol = value_iteration(fixtures::chain(2, 0.5, 2));
    CHECK(sol.v(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(sol.v(1, 1) == 1.0);
}

TEST_CASE("two_path_chest values match open-loop enumeration") {
    const Mdp mdp = fixtures::two_path();
    const Solution sol = value_iteration(mdp);
    CHECK(sol.v(0, 0) == doctest::Approx(best_open_loop(mdp, {})).epsilon(1e-12));
    for (ActionId a = 0; a < mdp.num_actions(); ++a) {
        double best = -1e300;
        for (ActionId b = 0; b < mdp.num_actions(); ++b) {
            for (ActionId c = 0; c < mdp.num_actions(); ++c) best = std::max(best, open_loop_return(mdp, {a, b, c}));
        }
        CHECK(sol.q(0, a, 0) == doctest::Approx(best).epsilon(1e-12));
    }
}

TEST_CASE("policy evaluation of a constant reward") {
    std::vector<std::vector<std::vector<Transition>>> tr = {{{{0, 1.0}}, {{0, 1.0}}}};
    const Mdp mdp(1, 2, {1.0}, tr, [](StateId, ActionId, StateId, int) { return 1.0; }, 0.0, 1);
    const Solution sol = policy_evaluation(mdp, Policy::uniform(1, 2, 1));
    CHECK(sol.v(0, 0) == 1.0);
}

TEST_CASE("greedy policy attains the optimum") {
    const Mdp mdp = fixtures::stochastic(4);
    const Solution opt = value_iteration(mdp);
    std::vector<std::vector<ActionId>> actions(4, std::vector<ActionId>(2));
    for (int t = 0; t < 4; ++t) {
        for (StateId s = 0; s < 2; ++s) actions[t][s] = argmax_set(opt.q.row(s, t), 1e-12).front();
    }
    const Solution ev = policy_evaluation(mdp, Policy::deterministic(2, actions));
    for (int t = 0; t <= 4; ++t) {
        for (StateId s = 0; s < 2; ++s) CHECK(std::abs(ev.v(s, t) - opt.v(s, t)) <= 1e-12);
    }
}

TEST_CASE("random policy on two_path_chest matches Monte-Carlo") {
    const Mdp mdp = fixtures::two_path();
    Policy pi(4, 2, mdp.horizon());
    for (int t = 0; t < mdp.horizon(); ++t) {
        for (StateId s = 0; s < 4; ++s) {
            pi.prob(s, 0, t) = 0.3;
            pi.prob(s, 1, t) = 0.7;
        }
    }
    const double exact = policy_evaluation(mdp, pi).v(0, 0);
    const int n = 1'000'000;
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
    CHECK(std::abs(mean - exact) <= 3.0 * se);
}

TEST_CASE("optimal action sets respect the tie tolerance") {
    const std::vector<double> tie = {1.0, 1.0, 0.0};
    const std::vector<double> near = {1.0, 1.0 - 1e-12, 0.0};
    const std::vector<double> clear = {1.0, 0.5};
    CHECK(argmax_set(tie, 1e-9) == std::vector<ActionId>{0, 1});
    CHECK(argmax_set(near, 1e-9) == std::vector<ActionId>{0, 1});
    CHECK(argmax_set(clear, 1e-9) == std::vector<ActionId>{0});

    QTable q(1, 3, 1);
    q(0, 0, 0) = 1.0;
    q(0, 1, 0) = 1.0 - 1e-12;
    CHECK(optimal_action_set(q, 1e-9).at(0, 0) == std::vector<ActionId>{0, 1});
}

TEST_CASE("discounted return") {
    const std::vector<double> ones = {1, 1, 1};
    const std::vector<double> five = {5};
    const std::vector<double> ramp = {1, 2, 3};
    CHECK(discounted_return(ones, 0.5) == 1.75);
    CHECK(discounted_return(five, 0.99) == 5.0);
    CHECK(discounted_return(ramp, 0.5, 1) == 3.5);
}

TEST_CASE("invalid models are rejected") {
    std::vector<std::vector<std::vector<Transition>>> bad = {{{{0, 0.5}}}};
    CHECK_THROWS_AS(Mdp(1, 1, {1.0}, bad, fixtures::zero_reward(), 0.9, 2), ModelError);
    std::vector<std::vector<std::vector<Transition>>> ok = {{{{0, 1.0}}}};
    CHECK_THROWS_AS(Mdp(1, 1, {1.0}, ok, fixtures::zero_reward(), 1.5, 2), ModelError);
    CHECK_THROWS_AS(Mdp(1, 1, {1.0}, ok, fixtures::zero_reward(), 0.9, 0), ModelError);
}

TEST_CASE("MDP spec files round-trip through the solver") {
    const auto doc = nlohmann::json::parse(R"({
        "states": ["a", "b"], "actions": 1, "horizon": 2, "gamma_e": 0.5, "start": "a",
        "terminal": ["b"],
        "transitions": [["a", 0, "b", 1.0], ["b", 0, "b", 1.0]],
        "rewards": [["a", 0, "b", "any", 2.0]]
    })");
    const Mdp mdp = mdp_from_json(doc);
    CHECK(value_iteration(mdp).v(0, 0) == 2.0);
    auto broken = doc;
    broken.erase("horizon");
    CHECK_THROWS_AS(mdp_from_json(broken), ModelError);
}
