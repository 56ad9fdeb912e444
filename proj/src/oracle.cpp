#include "opshape/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <sstream>
#include <unordered_map>

namespace opshape {

namespace {

constexpr double kEqualityTolerance = 1e-9;

struct FrontierEntry {
    int node;
    IntrinsicStream im;
    Shaper shaper;
};

std::string set_string(const std::vector<ActionId>& set) {
    std::string out = "{";
    for (std::size_t i = 0; i < set.size(); ++i) {
        out += (i ? "," : "") + std::to_string(set[i]);
    }
    return out + "}";
}

bool contains(const std::vector<ActionId>& set, ActionId a) {
    return std::find(set.begin(), set.end(), a) != set.end();
}

/// Restricted extremum over the extrinsically optimal actions of the shaped
/// intrinsic value.
std::vector<double> restricted_extremum(const AugmentedGraph& g, const OptimalActionSet& extrinsic, bool maximize,
                                        bool shaped) {
    std::vector<double> v(g.nodes.size(), 0.0);
    for (std::size_t k = g.nodes.size(); k-- > 0;) {
        const auto& node = g.nodes[k];
        if (node.ended) {
            continue;
        }
        double best = maximize ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity();
        for (ActionId a : extrinsic.at(node.s, node.t)) {
            double q = 0.0;
            for (const auto& e : node.actions[static_cast<std::size_t>(a)]) {
                q += e.prob * ((shaped ? e.f_shaped : e.f_raw) + g.gamma_i * v[static_cast<std::size_t>(e.child)]);
            }
            best = maximize ? std::max(best, q) : std::min(best, q);
        }
        v[k] = best;
    }
    return v;
}

}  // namespace

AugmentedGraph build_augmented_graph(const Mdp& mdp, const ImConfig& im, const ShaperConfig& shaper,
                                     std::size_t max_nodes) {
    validate(shaper);
    ShaperConfig expand = shaper;
    if (needs_values(shaper.kind)) {
        expand.kind = ShaperKind::raw;
    }
    AugmentedGraph g;
    g.num_states = mdp.num_states();
    g.num_actions = mdp.num_actions();
    g.horizon = mdp.horizon();
    g.gamma_e = mdp.gamma_e();
    g.gamma_i = shaper.gamma_i;
    g.kind = shaper.kind;

    const IntrinsicStream im0(im, mdp.num_states());
    const Shaper shaper0(expand);
    std::vector<FrontierEntry> frontier;
    for (StateId s = 0; s < mdp.num_states(); ++s) {
        const double p = mdp.start_distribution()[static_cast<std::size_t>(s)];
        if (p > 0.0) {
            g.nodes.push_back({s, 0, false, {}});
            const int id = static_cast<int>(g.nodes.size()) - 1;
            g.roots.emplace_back(id, p);
            frontier.push_back({id, im0, shaper0});
        }
    }

    std::string key;
    for (int t = 0; t < mdp.horizon(); ++t) {
        std::vector<FrontierEntry> next_frontier;
        std::unordered_map<std::string, int> index;
        for (const auto& entry : frontier) {
            const StateId s = g.nodes[static_cast<std::size_t>(entry.node)].s;
            g.nodes[static_cast<std::size_t>(entry.node)].actions.resize(static_cast<std::size_t>(mdp.num_actions()));
            for (ActionId a = 0; a < mdp.num_actions(); ++a) {
                for (const auto& tr : mdp.successors(s, a)) {
                    IntrinsicStream im_next = entry.im;
                    Shaper shaper_next = entry.shaper;
                    const double f = im_next.next(tr.next);
                    const bool done = t == mdp.horizon() - 1 || mdp.is_terminal(tr.next);
                    const double f_shaped = shaper_next.step({t, s, a, tr.next, f, done});
                    const double r = mdp.reward(s, a, tr.next, t);

                    key.assign(reinterpret_cast<const char*>(&tr.next), sizeof(StateId));
                    key.push_back(done ? 'E' : 'L');
                    if (!done) {
                        im_next.append_digest(key);
                        shaper_next.append_digest(key);
                    }
                    auto [it, inserted] = index.try_emplace(key, static_cast<int>(g.nodes.size()));
                    if (inserted) {
                        if (g.nodes.size() >= max_nodes) {
                            throw CapacityError("augmented graph exceeds the cap of " + std::to_string(max_nodes) +
                                                    " nodes while expanding t=" + std::to_string(t),
                                                g.nodes.size() + 1);
                        }
                        g.nodes.push_back({tr.next, t + 1, done, {}});
                        if (!done) {
                            next_frontier.push_back({it->second, std::move(im_next), std::move(shaper_next)});
                        }
                    }
                    g.nodes[static_cast<std::size_t>(entry.node)].actions[static_cast<std::size_t>(a)].push_back(
                        {it->second, tr.next, tr.prob, r, f, f_shaped});
                }
            }
        }
        frontier = std::move(next_frontier);
    }
    return g;
}

std::vector<double> restricted_intrinsic_max(const AugmentedGraph& g, const OptimalActionSet& extrinsic) {
    return restricted_extremum(g, extrinsic, true, false);
}

void apply_ideal_adops(AugmentedGraph& g, const Solution& extrinsic, const std::vector<double>& v_star_i,
                       double epsilon) {
    for (std::size_t k = 0; k < g.nodes.size(); ++k) {
        auto& node = g.nodes[k];
        for (ActionId a = 0; a < static_cast<ActionId>(node.actions.size()); ++a) {
            for (auto& e : node.actions[static_cast<std::size_t>(a)]) {
                const AdopsInputs in{extrinsic.v(node.s, node.t),
                                     extrinsic.q(node.s, a, node.t),
                                     v_star_i[k],
                                     v_star_i[static_cast<std::size_t>(e.child)],
                                     g.gamma_i,
                                     e.f_raw,
                                     epsilon};
                e.f_shaped = e.f_raw + adops_f2(in);
            }
        }
    }
}

ShapedOptimum solve_shaped(const AugmentedGraph& g, double tie_tolerance) {
    const std::size_t n = g.nodes.size();
    ShapedOptimum out{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0),
                      std::vector<std::vector<double>>(n), std::vector<std::vector<ActionId>>(n)};
    std::vector<double> qe;
    std::vector<double> qi;
    for (std::size_t k = n; k-- > 0;) {
        const auto& node = g.nodes[k];
        if (node.ended) {
            continue;
        }
        const auto num_actions = node.actions.size();
        qe.assign(num_actions, 0.0);
        qi.assign(num_actions, 0.0);
        auto& q = out.q[k];
        q.assign(num_actions, 0.0);
        std::size_t best = 0;
        for (std::size_t a = 0; a < num_actions; ++a) {
            for (const auto& e : node.actions[a]) {
                const auto c = static_cast<std::size_t>(e.child);
                qe[a] += e.prob * (e.r_ext + g.gamma_e * out.v_e[c]);
                qi[a] += e.prob * (e.f_shaped + g.gamma_i * out.v_i[c]);
            }
            q[a] = qe[a] + qi[a];
            if (q[a] > q[best]) {
                best = a;
            }
        }
        out.v_e[k] = qe[best];
        out.v_i[k] = qi[best];
        out.argmax[k] = argmax_set(q, tie_tolerance);
    }
    return out;
}

std::vector<std::vector<ActionId>> optimal_policy_set_bruteforce(const AugmentedGraph& g, double tie_tolerance) {
    return solve_shaped(g, tie_tolerance).argmax;
}

std::vector<std::vector<ActionId>> optimal_policy_set_enumerated(const AugmentedGraph& g, double tie_tolerance,
                                                                 std::size_t max_policies) {
    std::vector<std::size_t> decision;
    std::size_t count = 1;
    for (std::size_t k = 0; k < g.nodes.size(); ++k) {
        if (g.nodes[k].ended) {
            continue;
        }
        decision.push_back(k);
        const auto arity = g.nodes[k].actions.size();
        if (count > max_policies / arity) {
            return {};
        }
        count *= arity;
    }
    const std::size_t n = g.nodes.size();
    std::vector<std::vector<double>> best_q(n);
    for (std::size_t k : decision) {
        best_q[k].assign(g.nodes[k].actions.size(), -std::numeric_limits<double>::infinity());
    }
    std::vector<std::size_t> choice(n, 0);
    std::vector<double> ve(n, 0.0);
    std::vector<double> vi(n, 0.0);
    for (std::size_t p = 0; p < count; ++p) {
        std::size_t code = p;
        for (std::size_t k : decision) {
            const auto arity = g.nodes[k].actions.size();
            choice[k] = code % arity;
            code /= arity;
        }
        for (std::size_t k = n; k-- > 0;) {
            const auto& node = g.nodes[k];
            if (node.ended) {
                continue;
            }
            double e_val = 0.0;
            double i_val = 0.0;
            for (const auto& e : node.actions[choice[k]]) {
                const auto c = static_cast<std::size_t>(e.child);
                e_val += e.prob * (e.r_ext + g.gamma_e * ve[c]);
                i_val += e.prob * (e.f_shaped + g.gamma_i * vi[c]);
            }
            ve[k] = e_val;
            vi[k] = i_val;
            auto& slot = best_q[k][choice[k]];
            slot = std::max(slot, e_val + i_val);
        }
    }
    std::vector<std::vector<ActionId>> out(n);
    for (std::size_t k : decision) {
        out[k] = argmax_set(best_q[k], tie_tolerance);
    }
    return out;
}

std::string to_string(ViolationKind kind) {
    switch (kind) {
    case ViolationKind::argmax_mismatch: return "argmax_mismatch";
    case ViolationKind::equality_condition: return "equality_condition";
    case ViolationKind::inequality_condition: return "inequality_condition";
    }
    return "unknown";
}

AugmentedGraph build_shaped_graph(const Mdp& mdp, const ImConfig& im, const ShaperConfig& shaper,
                                  double tie_tolerance, std::size_t max_nodes) {
    AugmentedGraph g = build_augmented_graph(mdp, im, shaper, max_nodes);
    if (shaper.kind == ShaperKind::adops_ideal) {
        const Solution extrinsic = value_iteration(mdp);
        const auto optimal = optimal_action_set(extrinsic.q, tie_tolerance);
        apply_ideal_adops(g, extrinsic, restricted_intrinsic_max(g, optimal), shaper.epsilon);
    }
    return g;
}

OptimalityReport check_optimality_preserved(const Mdp& mdp, const ImConfig& im, const ShaperConfig& shaper,
                                            double tie_tolerance, std::size_t max_nodes) {
    if (shaper.kind == ShaperKind::adops || shaper.kind == ShaperKind::adopes) {
        throw ModelError("shaper '" + to_string(shaper.kind) +
                         "' depends on a policy's critics; certify adops_ideal or evaluate a fixed policy");
    }
    const Solution extrinsic = value_iteration(mdp);
    const auto optimal = optimal_action_set(extrinsic.q, tie_tolerance);
    const AugmentedGraph g = build_shaped_graph(mdp, im, shaper, tie_tolerance, max_nodes);
    const ShapedOptimum opt = solve_shaped(g, tie_tolerance);
    const auto i_max = restricted_extremum(g, optimal, true, true);
    const auto i_min = restricted_extremum(g, optimal, false, true);

    OptimalityReport report;
    report.graph_nodes = g.nodes.size();
    for (std::size_t k = 0; k < g.nodes.size(); ++k) {
        const auto& node = g.nodes[k];
        if (node.ended) {
            continue;
        }
        const int id = static_cast<int>(k);
        const auto& baseline = optimal.at(node.s, node.t);
        const auto& shaped = opt.argmax[k];
        const bool match = baseline == shaped;
        report.rows.push_back({id, node.s, node.t, baseline, shaped, match});
        const auto& q = opt.q[k];
        const double q_best = *std::max_element(q.begin(), q.end());
        if (!match) {
            for (ActionId a = 0; a < static_cast<ActionId>(q.size()); ++a) {
                if (contains(baseline, a) != contains(shaped, a)) {
                    report.violations.push_back({ViolationKind::argmax_mismatch, id, node.s, node.t, a,
                                                 q[static_cast<std::size_t>(a)] - q_best});
                }
            }
        }
        if (i_max[k] - i_min[k] > kEqualityTolerance) {
            report.violations.push_back(
                {ViolationKind::equality_condition, id, node.s, node.t, -1, i_max[k] - i_min[k]});
        }
        const double v_min = extrinsic.v(node.s, node.t) + i_min[k];
        for (ActionId a = 0; a < static_cast<ActionId>(q.size()); ++a) {
            if (!contains(baseline, a) && q[static_cast<std::size_t>(a)] >= v_min - tie_tolerance) {
                report.violations.push_back({ViolationKind::inequality_condition, id, node.s, node.t, a,
                                             q[static_cast<std::size_t>(a)] - v_min});
            }
        }
    }
    const auto enumerated = optimal_policy_set_enumerated(g, tie_tolerance);
    if (!enumerated.empty()) {
        report.enumerated = true;
        report.enumeration_agrees = enumerated == opt.argmax;
    }
    return report;
}

IntrinsicValues compute_v_star_i(const Mdp& mdp, const ImConfig& im, double gamma_i, double tie_tolerance,
                                 std::size_t max_nodes) {
    ShaperConfig raw;
    raw.kind = ShaperKind::raw;
    raw.gamma_i = gamma_i;
    IntrinsicValues out{build_augmented_graph(mdp, im, raw, max_nodes), {}, ValueTable(mdp.num_states(), mdp.horizon())};
    const auto optimal = optimal_action_set(value_iteration(mdp).q, tie_tolerance);
    out.per_node = restricted_intrinsic_max(out.graph, optimal);
    std::vector<char> seen(static_cast<std::size_t>(mdp.num_states()) * static_cast<std::size_t>(mdp.horizon() + 1), 0);
    for (std::size_t k = 0; k < out.graph.nodes.size(); ++k) {
        const auto& node = out.graph.nodes[k];
        if (node.ended) {
            continue;
        }
        auto& flag = seen[static_cast<std::size_t>(node.t) * static_cast<std::size_t>(mdp.num_states()) +
                          static_cast<std::size_t>(node.s)];
        double& cell = out.table(node.s, node.t);
        cell = flag ? std::max(cell, out.per_node[k]) : out.per_node[k];
        flag = 1;
    }
    return out;
}

ShapedPolicyValues evaluate_shaped_policy(const AugmentedGraph& g, const Mdp& mdp, const Policy& policy,
                                          const ShaperConfig& shaper) {
    const Solution extrinsic = policy_evaluation(mdp, policy);
    const std::size_t n = g.nodes.size();
    ShapedPolicyValues out{std::vector<std::vector<double>>(n), std::vector<double>(n, 0.0),
                           std::vector<std::vector<double>>(n), std::vector<double>(n, 0.0),
                           std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
    for (const auto& [root, p] : g.roots) {
        out.reach[static_cast<std::size_t>(root)] += p;
    }
    for (std::size_t k = 0; k < n; ++k) {
        const auto& node = g.nodes[k];
        for (ActionId a = 0; a < static_cast<ActionId>(node.actions.size()); ++a) {
            const double pa = policy.prob(node.s, a, node.t);
            for (const auto& e : node.actions[static_cast<std::size_t>(a)]) {
                out.reach[static_cast<std::size_t>(e.child)] += out.reach[k] * pa * e.prob;
            }
        }
    }

    const bool practical = g.kind == ShaperKind::adops || g.kind == ShaperKind::adopes;
    const double zeta = g.kind == ShaperKind::adopes ? (shaper.zeta < 0.0 ? 0.0 : shaper.zeta) : 1.0;
    std::vector<double> v_e_graph(n, 0.0);
    for (std::size_t k = n; k-- > 0;) {
        const auto& node = g.nodes[k];
        if (node.ended) {
            continue;
        }
        const auto num_actions = node.actions.size();
        out.q_e[k].assign(num_actions, 0.0);
        out.q_ie[k].assign(num_actions, 0.0);
        out.v_e[k] = extrinsic.v(node.s, node.t);
        double v_i = 0.0;
        double v_e_shaped = 0.0;
        for (std::size_t a = 0; a < num_actions; ++a) {
            const auto action = static_cast<ActionId>(a);
            const double pa = policy.prob(node.s, action, node.t);
            out.q_e[k][a] = extrinsic.q(node.s, action, node.t);
            double qi = 0.0;
            double qe = 0.0;
            for (const auto& e : node.actions[a]) {
                const auto c = static_cast<std::size_t>(e.child);
                qi += e.prob * ((practical ? e.f_raw : e.f_shaped) + g.gamma_i * out.v_i[c]);
                qe += e.prob * (e.r_ext + g.gamma_e * v_e_graph[c]);
            }
            v_i += pa * qi;
            v_e_shaped += pa * qe;
            if (!practical) {
                out.q_ie[k][a] = qe + qi;
            }
        }
        out.v_i[k] = v_i;
        v_e_graph[k] = v_e_shaped;
        if (!practical) {
            out.v_ie[k] = v_e_shaped + v_i;
        }
    }
    if (!practical) {
        return out;
    }
    for (std::size_t k = 0; k < n; ++k) {
        const auto& node = g.nodes[k];
        if (node.ended) {
            continue;
        }
        for (std::size_t a = 0; a < node.actions.size(); ++a) {
            double correction = 0.0;
            for (const auto& e : node.actions[a]) {
                const auto c = static_cast<std::size_t>(e.child);
                const AdopsInputs in{out.v_e[k], out.q_e[k][a], out.v_i[k], out.v_i[c],
                                     g.gamma_i,  e.f_raw,       shaper.epsilon};
                correction += e.prob * (e.f_raw + zeta * adops_f2(in) + g.gamma_i * out.v_i[c]);
            }
            out.q_ie[k][a] = out.q_e[k][a] + correction;
        }
        out.v_ie[k] = out.v_e[k] + out.v_i[k];
    }
    return out;
}

PolicyCheck check_policy_properties(const AugmentedGraph& g, const Mdp& mdp, const Policy& policy,
                                    const ShaperConfig& shaper, double tie_tolerance) {
    const auto values = evaluate_shaped_policy(g, mdp, policy, shaper);
    PolicyCheck check;
    for (std::size_t k = 0; k < g.nodes.size(); ++k) {
        const auto& node = g.nodes[k];
        if (node.ended) {
            continue;
        }
        ++check.nodes_checked;
        const auto set_e = argmax_set(values.q_e[k], tie_tolerance);
        const auto set_ie = argmax_set(values.q_ie[k], tie_tolerance);
        if (set_e != set_ie) {
            if (check.argmax_violations == 0) {
                std::ostringstream msg;
                msg << "node " << k << " (s=" << node.s << ", t=" << node.t << "): argmax Q_E " << set_string(set_e)
                    << " vs argmax Q_IE " << set_string(set_ie);
                check.first_argmax = msg.str();
            }
            ++check.argmax_violations;
        }
        for (std::size_t a = 0; a < node.actions.size(); ++a) {
            const bool below_e = values.q_e[k][a] < values.v_e[k];
            const bool below_ie = values.q_ie[k][a] < values.v_ie[k] - tie_tolerance;
            if (below_e != below_ie) {
                if (check.sign_violations == 0) {
                    std::ostringstream msg;
                    msg.precision(17);
                    msg << "node " << k << " (s=" << node.s << ", t=" << node.t << ", a=" << a
                        << "): Q_E - V_E = " << values.q_e[k][a] - values.v_e[k]
                        << ", Q_IE - V_IE = " << values.q_ie[k][a] - values.v_ie[k];
                    check.first_sign = msg.str();
                }
                ++check.sign_violations;
            }
        }
    }
    return check;
}

bool is_strictly_self_greedy(const Mdp& mdp, const Policy& policy, double tie_tolerance) {
    const Solution values = policy_evaluation(mdp, policy);
    for (int t = 0; t < mdp.horizon(); ++t) {
        for (StateId s = 0; s < mdp.num_states(); ++s) {
            const auto dist = policy.distribution(s, t);
            const auto chosen = std::max_element(dist.begin(), dist.end());
            if (*chosen != 1.0) {
                return false;
            }
            const auto best = argmax_set(values.q.row(s, t), tie_tolerance);
            if (!contains(best, static_cast<ActionId>(chosen - dist.begin()))) {
                return false;
            }
        }
    }
    return true;
}

bool is_unstable(const AugmentedGraph& g, const Mdp& mdp, const ShaperConfig& shaper, const Policy& policy,
                 StateId s, int t, ActionId a_n, ActionId a_m, double tie_tolerance) {
    if (a_n == a_m) {
        return false;
    }
    Policy pi_n = policy;
    Policy pi_m = policy;
    pi_n.set_action(s, t, a_n);
    pi_m.set_action(s, t, a_m);
    const auto values_n = evaluate_shaped_policy(g, mdp, pi_n, shaper);
    const auto values_m = evaluate_shaped_policy(g, mdp, pi_m, shaper);
    bool any = false;
    for (std::size_t k = 0; k < g.nodes.size(); ++k) {
        const auto& node = g.nodes[k];
        if (node.ended || node.s != s || node.t != t) {
            continue;
        }
        any = true;
        const bool m_rejects_n =
            values_m.q_ie[k][static_cast<std::size_t>(a_n)] < values_m.v_ie[k] - tie_tolerance;
        const bool n_accepts_m =
            values_n.q_ie[k][static_cast<std::size_t>(a_m)] >= values_n.v_ie[k] - tie_tolerance;
        if (!(m_rejects_n && n_accepts_m)) {
            return false;
        }
    }
    return any;
}

InexpressibilityReport grm_inexpressibility_check(const Mdp& mdp, double tie_tolerance) {
    const Solution extrinsic = value_iteration(mdp);
    const auto reach = occupancy(mdp, Policy::uniform(mdp.num_states(), mdp.num_actions(), mdp.horizon()));
    for (int t = 0; t < mdp.horizon(); ++t) {
        for (StateId s = 0; s < mdp.num_states(); ++s) {
            if (reach[static_cast<std::size_t>(t)][static_cast<std::size_t>(s)] <= 0.0 || mdp.is_terminal(s)) {
                continue;
            }
            // With F' = R the intrinsic return of each action is its extrinsic Q.
            const auto row = extrinsic.q.row(s, t);
            const auto [lo, hi] = std::minmax_element(row.begin(), row.end());
            const double gap = *hi - *lo;
            if (gap > tie_tolerance) {
                return {s, t, std::vector<double>(row.begin(), row.end()), gap, true};
            }
        }
    }
    throw ModelError("no reachable state distinguishes actions; the counterexample does not apply");
}

std::size_t for_each_deterministic_policy(int num_states, int num_actions, int horizon,
                                          const std::function<void(const Policy&)>& fn, std::size_t max_policies) {
    const std::size_t digits = static_cast<std::size_t>(num_states) * static_cast<std::size_t>(horizon);
    std::size_t count = 1;
    for (std::size_t i = 0; i < digits; ++i) {
        if (count > max_policies / static_cast<std::size_t>(num_actions)) {
            throw CapacityError("more than " + std::to_string(max_policies) + " deterministic policies",
                                std::numeric_limits<std::size_t>::max());
        }
        count *= static_cast<std::size_t>(num_actions);
    }
    std::vector<std::vector<ActionId>> table(static_cast<std::size_t>(horizon),
                                             std::vector<ActionId>(static_cast<std::size_t>(num_states), 0));
    for (std::size_t p = 0; p < count; ++p) {
        std::size_t code = p;
        for (auto& row : table) {
            for (auto& a : row) {
                a = static_cast<ActionId>(code % static_cast<std::size_t>(num_actions));
                code /= static_cast<std::size_t>(num_actions);
            }
        }
        fn(Policy::deterministic(num_actions, table));
    }
    return count;
}

}  // namespace opshape
