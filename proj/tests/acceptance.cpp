// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "opshape/cli.hpp"
#include "opshape/oracle.hpp"
#include "opshape/shaping.hpp"

using namespace opshape;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigs = OPSHAPE_CONFIG_DIR;

struct Outcome {
    bool pass;
    std::string detail;
};

int failures = 0;

void criterion(int id, const char* title, double limit_seconds, const std::function<Outcome()>& body) {
    const auto start = std::chrono::steady_clock::now();
    Outcome out{false, ""};
    try {
        out = body();
    } catch (const std::exception& e) {
        out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = limit_seconds <= 0.0 || secs < limit_seconds;
    const bool pass = out.pass && in_time;
    failures += pass ? 0 : 1;
    std::printf("criterion %2d: %s  %s  (%s; %.2fs%s)\n", id, pass ? "PASS" : "FAIL", title, out.detail.c_str(), secs,
                in_time ? "" : ", over time limit");
    std::fflush(stdout);
}

void info(const std::string& line) {
    std::printf("     info: %s\n", line.c_str());
    std::fflush(stdout);
}

std::string fmt(const char* format, auto... args) {
    char buf[256];
    std::snprintf(buf, sizeof buf, format, args...);
    return buf;
}

ShaperConfig shaper(ShaperKind kind, int d = 1) {
    ShaperConfig s;
    s.kind = kind;
    s.d = d;
    s.gamma_i = 0.99;
    return s;
}

// Runs one episode of F values through a fresh streaming shaper.
std::vector<double> stream(const ShaperConfig& cfg, const std::vector<double>& f) {
    Shaper sh(cfg);
    std::vector<double> out;
    for (std::size_t t = 0; t < f.size(); ++t) {
        out.push_back(sh.step({static_cast<int>(t), 0, 0, 0, f[t], t + 1 == f.size()}));
    }
    return out;
}

std::vector<double> random_episode(std::mt19937_64& rng, int n) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> f(static_cast<std::size_t>(n));
    for (double& x : f) x = u(rng);
    return f;
}

ImConfig hack_bonus() {
    ImConfig im;
    im.kind = ImKind::count;
    im.beta = 0.6;
    im.states = {2};
    return im;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct Fixture {
    std::string name;
    Mdp mdp;
    ImConfig im;
};

std::vector<Fixture> small_fixtures() {
    ImConfig everywhere;
    everywhere.beta = 0.6;
    std::vector<std::vector<std::vector<Transition>>> bandit_tr = {{{{1, 1.0}}, {{1, 1.0}}}, {{{1, 1.0}}, {{1, 1.0}}}};
    const Mdp bandit(2, 2, {1.0, 0.0}, bandit_tr,
                     [](StateId s, ActionId a, StateId, int) { return s == 0 ? (a == 0 ? 1.0 : 0.5) : 0.0; }, 0.99, 1,
                     {false, true});
    return {{"two_path_chest+hack", build_env(EnvSpec{}), hack_bonus()},
            {"two_path_chest+count", build_env(EnvSpec{}), everywhere},
            {"bandit+count", bandit, everywhere}};
}

std::vector<Fixture> large_fixtures() {
    ImConfig everywhere;
    everywhere.beta = 0.6;
    EnvSpec corridor;
    corridor.kind = EnvKind::long_corridor;
    corridor.length = 3;
    corridor.horizon = 6;
    EnvSpec grid;
    grid.kind = EnvKind::grid_world;
    grid.width = 3;
    grid.height = 2;
    grid.horizon = 4;
    return {{"long_corridor(3)+count", build_env(corridor), everywhere},
            {"grid_world(3x2)+count", build_env(grid), everywhere}};
}

Policy random_policy(const Mdp& mdp, std::mt19937_64& rng) {
    std::exponential_distribution<double> e(1.0);
    Policy pi(mdp.num_states(), mdp.num_actions(), mdp.horizon());
    for (int t = 0; t < mdp.horizon(); ++t) {
        for (StateId s = 0; s < mdp.num_states(); ++s) {
            double total = 0.0;
            std::vector<double> w(static_cast<std::size_t>(mdp.num_actions()));
            for (double& x : w) total += (x = e(rng));
            for (ActionId a = 0; a < mdp.num_actions(); ++a) pi.prob(s, a, t) = w[a] / total;
        }
    }
    return pi;
}

struct SweepTotals {
    long policies = 0;
    long argmax_policies = 0;
    long sign_policies = 0;
    long self_greedy = 0;
    long self_greedy_bad = 0;
    std::string first;
};

// Practical ADOPS (zeta = 1, exact critics) over every deterministic policy
// of the small fixtures and 100 random stochastic policies of the larger ones.
const SweepTotals& adops_sweep() {
    static const SweepTotals totals = [] {
        SweepTotals out;
        auto cfg = shaper(ShaperKind::adops);
        cfg.zeta = 1.0;
        auto tally = [&](const Fixture& fx, const AugmentedGraph& g, const Policy& pi, bool deterministic) {
            const PolicyCheck c = check_policy_properties(g, fx.mdp, pi, cfg, 1e-9);
            ++out.policies;
            out.argmax_policies += c.argmax_violations > 0;
            out.sign_policies += c.sign_violations > 0;
            if (out.first.empty() && c.argmax_violations > 0) out.first = fx.name + ": " + c.first_argmax;
            if (deterministic && is_strictly_self_greedy(fx.mdp, pi)) {
                ++out.self_greedy;
                out.self_greedy_bad += c.argmax_violations > 0 || c.sign_violations > 0;
            }
        };
        for (const auto& fx : small_fixtures()) {
            const auto g = build_augmented_graph(fx.mdp, fx.im, cfg);
            for_each_deterministic_policy(fx.mdp.num_states(), fx.mdp.num_actions(), fx.mdp.horizon(),
                                          [&](const Policy& pi) { tally(fx, g, pi, true); });
        }
        std::mt19937_64 rng(29);
        for (const auto& fx : large_fixtures()) {
            const auto g = build_augmented_graph(fx.mdp, fx.im, cfg);
            for (int k = 0; k < 100; ++k) tally(fx, g, random_policy(fx.mdp, rng), false);
        }
        return out;
    }();
    return totals;
}

int count_greedy(const std::vector<LearningCurve>& curves) {
    int n = 0;
    for (const auto& c : curves) n += c.final_greedy_optimal ? 1 : 0;
    return n;
}

cli::RunConfig learning_config(const std::string& name, const fs::path& out) {
    cli::RunConfig cfg = cli::load_run_config(kConfigs / (name + ".json"));
    cfg.output = out / name;
    return cfg;
}

const std::vector<std::string> kLearningConfigs = {"hack_raw", "hack_adops", "hack_adopes", "corridor_pbim_blowup"};

}  // namespace

int main() {
    const fs::path work = fs::temp_directory_path() / "opshape_acceptance";
    fs::remove_all(work);

    criterion(1, "zero-sum matching for PBIM and GRM(D)", 5.0, [] {
        std::mt19937_64 rng(1);
        const double gammas[] = {0.5, 0.9, 0.99};
        double worst = 0.0;
        int streams = 0;
        for (int episode = 0; episode < 200; ++episode) {
            const int n = 1 + static_cast<int>(rng() % 64);
            const double g = gammas[rng() % 3];
            const auto f = random_episode(rng, n);
            std::vector<ShaperConfig> cfgs = {shaper(ShaperKind::pbim)};
            for (int d : {1, 2, 5, n - 1}) cfgs.push_back(shaper(ShaperKind::grm, std::max(d, 0)));
            for (auto cfg : cfgs) {
                cfg.gamma_i = g;
                const auto out = stream(cfg, f);
                double total = 0.0;
                for (int t = 0; t < n; ++t) total += std::pow(g, t) * out[t];
                worst = std::max(worst, std::abs(total));
                ++streams;
            }
        }
        return Outcome{worst <= 1e-9, fmt("%d streams, max |sum gamma^t F'_t| = %.3g, tol 1e-9", streams, worst)};
    });

    criterion(2, "GRM(0) is zero, GRM(D >= N-1) is bit-identical to PBIM", 1.0, [] {
        std::mt19937_64 rng(2);
        int nonzero = 0, mismatched = 0;
        for (int episode = 0; episode < 200; ++episode) {
            const int n = 1 + static_cast<int>(rng() % 64);
            const auto f = random_episode(rng, n);
            for (double x : stream(shaper(ShaperKind::grm, 0), f)) nonzero += x != 0.0;
            const auto pbim = stream(shaper(ShaperKind::pbim), f);
            for (int d : {n - 1, n, n + 7}) mismatched += stream(shaper(ShaperKind::grm, std::max(d, 0)), f) != pbim;
        }
        return Outcome{nonzero == 0 && mismatched == 0,
                       fmt("200 episodes: %d nonzero GRM(0) outputs, %d GRM/PBIM mismatches", nonzero, mismatched)};
    });

    criterion(3, "PBIM blowup 1/gamma^(N-1) at gamma=0.99, N=4500", 1.0, [] {
        const auto r = cli::blowup_demo(0.99, 4500, 1.0);
        return Outcome{r.inverse_discount > 1e19 && r.inverse_discount < 1e20 && !r.overflow,
                       fmt("1/gamma^(N-1) = %.4g, |F'_(N-1)| = %.4g, band (1e19, 1e20)", r.inverse_discount,
                           r.final_magnitude)};
    });

    criterion(4, "preservation certificates on the hack fixture", 30.0, [] {
        const Mdp mdp = build_env(EnvSpec{});
        auto pies = shaper(ShaperKind::pies);
        pies.zeta = 0.0;
        const std::vector<std::pair<ShaperConfig, bool>> cases = {{shaper(ShaperKind::raw), false},
                                                                  {shaper(ShaperKind::adops_ideal), true},
                                                                  {shaper(ShaperKind::grm, 1), true},
                                                                  {shaper(ShaperKind::pbim), true},
                                                                  {pies, true}};
        bool ok = true;
        std::string detail;
        for (const auto& [cfg, expect] : cases) {
            const auto report = check_optimality_preserved(mdp, hack_bonus(), cfg, 1e-9);
            const bool good = report.preserved() == expect && report.enumerated && report.enumeration_agrees;
            ok = ok && good;
            detail += (detail.empty() ? "" : ", ") + to_string(cfg.kind) + "=" +
                      (report.preserved() ? "preserved" : "violated") + (report.enumeration_agrees ? "" : "(enum!)");
        }
        return Outcome{ok, detail};
    });

    criterion(5, "argmax Q_IE == argmax Q_E for practical ADOPS", 60.0, [] {
        const auto& s = adops_sweep();
        return Outcome{s.argmax_policies == 0,
                       fmt("%ld of %ld policies violate", s.argmax_policies, s.policies) +
                           (s.first.empty() ? "" : "; first: " + s.first)};
    });
    {
        const auto& s = adops_sweep();
        info(fmt("self-greedy deterministic policies: %ld checked, %ld with any violation", s.self_greedy,
                 s.self_greedy_bad));
    }

    criterion(6, "Q_E < V_E <=> Q_IE < V_IE for practical ADOPS", 60.0, [] {
        const auto& s = adops_sweep();
        return Outcome{s.sign_policies == 0, fmt("%ld of %ld policies violate", s.sign_policies, s.policies)};
    });

    criterion(7, "GRM inexpressibility counterexample F' = R", 1.0, [] {
        std::vector<std::vector<std::vector<Transition>>> tr = {{{{1, 1.0}}, {{1, 1.0}}}, {{{1, 1.0}}, {{1, 1.0}}}};
        const Mdp bandit(2, 2, {1.0, 0.0}, tr,
                         [](StateId s, ActionId a, StateId, int) { return s == 0 ? (a == 0 ? 1.0 : 0.5) : 0.0; },
                         0.99, 1, {false, true});
        const auto b = grm_inexpressibility_check(bandit, 1e-9);
        const auto c = grm_inexpressibility_check(build_env(EnvSpec{}), 1e-9);
        return Outcome{b.passed && c.passed && b.gap > 1e-9 && c.gap > 1e-9,
                       fmt("bandit gap %.6g, two_path_chest gap %.6g", b.gap, c.gap)};
    });

    criterion(8, "PIES and ADOPES schedules", 1.0, [] {
        bool ok = true;
        auto down = ZetaSchedule::pies(4);
        auto up = ZetaSchedule::adopes(4);
        const double want_down[] = {0.75, 0.5, 0.25, 0.0, 0.0};
        const double want_up[] = {0.25, 0.5, 0.75, 1.0, 1.0};
        for (int k = 0; k < 5; ++k) {
            ok = ok && pies_update(down) == want_down[k];
            ok = ok && adopes_update(up) == want_up[k];
        }
        auto pies_cfg = shaper(ShaperKind::pies);
        pies_cfg.c = 4;
        auto adopes_cfg = shaper(ShaperKind::adopes);
        adopes_cfg.c = 4;
        Shaper pies(pies_cfg), adopes(adopes_cfg);
        for (int k = 0; k < 6; ++k) {
            pies.end_iteration();
            adopes.end_iteration();
        }
        std::mt19937_64 rng(8);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        int mismatches = 0;
        for (int t = 0; t < 500; ++t) {
            const ShapingEvent ev{t % 50, 0, 0, 0, u(rng), t % 50 == 49};
            const ValueContext ctx{u(rng), u(rng), u(rng), u(rng)};
            mismatches += pies.step(ev) != 0.0;
            const AdopsInputs in{ctx.v_e, ctx.q_e, ctx.v_i, ctx.v_i_next, adopes_cfg.gamma_i, ev.f_raw,
                                 adopes_cfg.epsilon};
            mismatches += adopes.step(ev, &ctx) != ev.f_raw + adops_f2(in);
        }
        ok = ok && mismatches == 0;
        return Outcome{ok, fmt("C=4 spot values checked, %d post-terminus mismatches in 1000 steps", mismatches)};
    });

    criterion(9, "learning-dynamics ordering", 600.0, [&] {
        const auto raw = cli::run(learning_config("hack_raw", work / "first")).curves;
        const auto adops = cli::run(learning_config("hack_adops", work / "first")).curves;
        const auto adopes = cli::run(learning_config("hack_adopes", work / "first")).curves;
        const auto pbim = cli::run(learning_config("corridor_pbim_blowup", work / "first")).curves;

        const int escaped = static_cast<int>(raw.size()) - count_greedy(raw);
        const int adops_in = count_greedy(adops);
        const int adopes_in = count_greedy(adopes);

        int saturated = 0;
        for (const auto& c : pbim) {
            const int window = std::max(1, static_cast<int>(c.records.size()) / 20);
            bool hit = false, zero_return = true;
            for (int i = 0; i < window; ++i) {
                hit = hit || c.records[i].max_action_prob > 0.99;
                zero_return = zero_return && c.records[i].ext_return == 0.0;
            }
            saturated += hit && zero_return;
        }
        info(fmt("raw escaped %d/20 (need >= 10), adops inside %d/20 (need >= 18), adopes inside %d/20 (need >= 18)",
                 escaped, adops_in, adopes_in));
        info(fmt("pbim corridor: %d/20 seeds saturate above 0.99 in the first 5%% with zero return (need >= 18)",
                 saturated));
        const bool ok = escaped >= 10 && adops_in >= 18 && adopes_in >= 18 && saturated >= 18;
        return Outcome{ok, fmt("raw %d, adops %d, adopes %d, pbim %d", escaped, adops_in, adopes_in, saturated)};
    });

    criterion(10, "byte-identical reruns of the learning configs", 0.0, [&] {
        int files = 0, differing = 0;
        for (const auto& name : kLearningConfigs) {
            const auto cfg = learning_config(name, work / "second");
            cli::run(cfg);
            for (std::uint64_t seed : cfg.seeds) {
                const std::string file = "seed_" + std::to_string(seed) + ".csv";
                const std::string a = slurp(work / "first" / name / file);
                const std::string b = slurp(work / "second" / name / file);
                ++files;
                differing += a.empty() || a != b;
            }
        }
        return Outcome{differing == 0, fmt("%d raw CSVs compared, %d differ", files, differing)};
    });

    std::printf("%d criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
