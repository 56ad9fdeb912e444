#pragma once

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "opshape/intrinsic.hpp"
#include "opshape/mdp.hpp"
#include "opshape/shaping.hpp"

namespace opshape {

/// Raised when an augmented construction would exceed its configured size.
class CapacityError : public std::runtime_error {
public:
    CapacityError(const std::string& what, std::size_t required)
        : std::runtime_error(what), required_(required) {}
    std::size_t required() const { return required_; }

private:
    std::size_t required_;
};

struct AugmentedEdge {
    int child;
    StateId next;
    double prob;
    double r_ext;
    double f_raw;
    double f_shaped;
};

/**
 * One history-distinguished state. Nodes sharing (s, t) differ in the IM
 * statistics or shaper buffer accumulated along the way. `ended` marks the
 * leaf entered by a done transition; it has no actions.
 */
struct AugmentedNode {
    StateId s;
    int t;
    bool ended;
    std::vector<std::vector<AugmentedEdge>> actions;
};

/**
 * Layered DAG over (s, t, digest) for a single episode starting from fresh
 * IM and shaper state. Children always have larger indices than parents.
 */
struct AugmentedGraph {
    std::vector<AugmentedNode> nodes;
    std::vector<std::pair<int, double>> roots;
    int num_states = 0;
    int num_actions = 0;
    int horizon = 0;
    double gamma_e = 1.0;
    double gamma_i = 1.0;
    ShaperKind kind = ShaperKind::raw;
};

inline constexpr std::size_t kDefaultNodeCap = 1'000'000;

/// Expands the augmented graph. ADOPS-family kinds are expanded with the raw
/// IM as f_shaped; use apply_ideal_adops for the ideal correction.
AugmentedGraph build_augmented_graph(const Mdp& mdp, const ImConfig& im, const ShaperConfig& shaper,
                                     std::size_t max_nodes = kDefaultNodeCap);

/// Per node: V*_I restricted to the extrinsically optimal actions of its
/// (s, t), computed from the raw IM with the graph's gamma_i.
std::vector<double> restricted_intrinsic_max(const AugmentedGraph& g, const OptimalActionSet& extrinsic);

/// Rewrites every edge's f_shaped to F + F2 built from V*_E, Q*_E and V*_I.
void apply_ideal_adops(AugmentedGraph& g, const Solution& extrinsic, const std::vector<double>& v_star_i,
                       double epsilon);

/// Optimal values of R + F' with separate discounts, by backward induction.
/// Ties in the combined Q are broken toward the lowest action index.
struct ShapedOptimum {
    std::vector<double> v_e;
    std::vector<double> v_i;
    std::vector<std::vector<double>> q;
    std::vector<std::vector<ActionId>> argmax;
};

ShapedOptimum solve_shaped(const AugmentedGraph& g, double tie_tolerance = kDefaultTieTolerance);

/// Per-node optimal action sets of the shaped problem.
std::vector<std::vector<ActionId>> optimal_policy_set_bruteforce(const AugmentedGraph& g,
                                                                 double tie_tolerance = kDefaultTieTolerance);

/// Argmax sets from enumerating every deterministic node policy. Returns an
/// empty vector when the number of policies exceeds `max_policies`.
std::vector<std::vector<ActionId>> optimal_policy_set_enumerated(const AugmentedGraph& g, double tie_tolerance,
                                                                 std::size_t max_policies = std::size_t{1} << 20);

enum class ViolationKind { argmax_mismatch, equality_condition, inequality_condition };

std::string to_string(ViolationKind kind);

struct Violation {
    ViolationKind kind;
    int node;
    StateId s;
    int t;
    ActionId action;
    /// Q gap behind the violation (sign depends on the kind).
    double gap;
};

struct OptimalityRow {
    int node;
    StateId s;
    int t;
    std::vector<ActionId> baseline;
    std::vector<ActionId> shaped;
    bool match;
};

struct OptimalityReport {
    std::vector<OptimalityRow> rows;
    std::vector<Violation> violations;
    std::size_t graph_nodes = 0;
    /// Whether the enumeration cross-check ran and whether it agreed.
    bool enumerated = false;
    bool enumeration_agrees = false;
    bool preserved() const { return violations.empty(); }
};

/**
 * Compares the extrinsic optimal action sets with those of the shaped
 * problem at every non-ended node, and checks that all extrinsically optimal
 * behaviors share one shaped value (within 1e-9) while every extrinsically
 * suboptimal action falls strictly below it.
 *
 * Practical ADOPS and ADOPES depend on a policy's critics and are rejected;
 * use evaluate_shaped_policy for them.
 */
OptimalityReport check_optimality_preserved(const Mdp& mdp, const ImConfig& im, const ShaperConfig& shaper,
                                            double tie_tolerance = kDefaultTieTolerance,
                                            std::size_t max_nodes = kDefaultNodeCap);

/// Builds the graph for `shaper`, applying the ideal ADOPS correction when
/// requested.
AugmentedGraph build_shaped_graph(const Mdp& mdp, const ImConfig& im, const ShaperConfig& shaper,
                                  double tie_tolerance = kDefaultTieTolerance,
                                  std::size_t max_nodes = kDefaultNodeCap);

struct IntrinsicValues {
    AugmentedGraph graph;
    std::vector<double> per_node;
    /// Max over the history nodes sharing (s, t); 0 where none exists.
    ValueTable table;
};

IntrinsicValues compute_v_star_i(const Mdp& mdp, const ImConfig& im, double gamma_i,
                                 double tie_tolerance = kDefaultTieTolerance,
                                 std::size_t max_nodes = kDefaultNodeCap);

/**
 * Exact values of a fixed policy under shaping.
 *
 * For practical ADOPS / ADOPES the critic quantities are the exact V^pi_E,
 * Q^pi_E (from the environment) and V^pi_I of the raw IM on the graph, so
 * that Q_IE(n, a) = Q_E + E[F + zeta F2 + gamma_i V_I(n')] and
 * V_IE = V_E + V_I. For every other kind the shaped return is evaluated
 * directly on the graph.
 */
struct ShapedPolicyValues {
    std::vector<std::vector<double>> q_e;
    std::vector<double> v_e;
    std::vector<std::vector<double>> q_ie;
    std::vector<double> v_ie;
    std::vector<double> v_i;
    std::vector<double> reach;
};

ShapedPolicyValues evaluate_shaped_policy(const AugmentedGraph& g, const Mdp& mdp, const Policy& policy,
                                          const ShaperConfig& shaper);

struct PolicyCheck {
    int nodes_checked = 0;
    int argmax_violations = 0;
    int sign_violations = 0;
    /// First argmax mismatch, for diagnostics.
    std::string first_argmax;
    std::string first_sign;
};

/// argmax Q_IE == argmax Q_E and the sign equivalence
/// Q_E < V_E <=> Q_IE < V_IE at every non-ended node.
PolicyCheck check_policy_properties(const AugmentedGraph& g, const Mdp& mdp, const Policy& policy,
                                    const ShaperConfig& shaper, double tie_tolerance = kDefaultTieTolerance);

/// True when policy is deterministic and its action is the unique argmax of
/// its own Q^pi_E at every (s, t) it reaches with positive probability.
bool is_strictly_self_greedy(const Mdp& mdp, const Policy& policy, double tie_tolerance = kDefaultTieTolerance);

/**
 * One-action perturbation test at (s, t): pi_n and pi_m equal `policy`
 * except for taking a_n, respectively a_m, there. Unstable iff
 * Q^{pi_m}_IE(s, a_n) < V^{pi_m}_IE(s) and Q^{pi_n}_IE(s, a_m) >= V^{pi_n}_IE(s)
 * at every history node of (s, t) reachable in the graph.
 */
bool is_unstable(const AugmentedGraph& g, const Mdp& mdp, const ShaperConfig& shaper, const Policy& policy,
                 StateId s, int t, ActionId a_n, ActionId a_m, double tie_tolerance = kDefaultTieTolerance);

struct InexpressibilityReport {
    StateId s;
    int t;
    std::vector<double> returns;
    double gap;
    bool passed;
};

/// Counterexample F' = R: at the earliest reachable (s, t) whose actions
/// have distinct Q*_E, the intrinsic return depends on the action taken.
InexpressibilityReport grm_inexpressibility_check(const Mdp& mdp, double tie_tolerance = kDefaultTieTolerance);

/// Calls fn for every deterministic time-indexed policy; returns how many
/// were visited. Throws CapacityError if more than max_policies exist.
std::size_t for_each_deterministic_policy(int num_states, int num_actions, int horizon,
                                          const std::function<void(const Policy&)>& fn,
                                          std::size_t max_policies = std::size_t{1} << 20);

}  // namespace opshape
