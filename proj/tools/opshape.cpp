#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "opshape/cli.hpp"
#include "opshape/mdp_io.hpp"

using namespace opshape;
using namespace opshape::cli;

namespace {

struct Common {
    std::string config;
    std::vector<std::string> overrides;
    std::string out;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("config", c.config, "JSON config file")->required()->check(CLI::ExistingFile);
    cmd->add_option("--set", c.overrides, "Override a config key (key=value), repeatable");
    cmd->add_option("--out", c.out, "Output directory (overrides the 'output' key)");
}

RunConfig load(const Common& c) {
    RunConfig config = load_run_config(c.config, c.overrides);
    if (!c.out.empty()) config.output = c.out;
    return config;
}

void emit(const nlohmann::json& doc, const std::string& path) {
    const std::string text = doc.dump(2) + "\n";
    if (path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
}

int cmd_run(const Common& c) {
    const RunConfig config = load(c);
    const RunOutput result = run(config);
    for (const auto& curve : result.curves) {
        const auto& last = curve.records.back();
        std::printf("seed %llu: final ext_return %.6g, greedy_optimal %d\n",
                    static_cast<unsigned long long>(curve.seed), last.ext_return, curve.final_greedy_optimal ? 1 : 0);
    }
    std::printf("wrote %zu files to %s\n", result.files.size(), config.output.string().c_str());
    return kOk;
}

int cmd_sweep(const Common& c, const std::vector<int>& ds) {
    const RunConfig config = load(c);
    for (const auto& e : sweep_d(config, ds)) {
        std::printf("rank %d: D=%d final ext_return %.6g\n", e.rank, e.d, e.final_return);
    }
    std::printf("ranking written to %s\n", (config.output / "ranking.csv").string().c_str());
    return kOk;
}

int cmd_verify(const Common& c) {
    const RunConfig config = load(c);
    const Environment env = build_environment(config);
    const OptimalityReport report =
        check_optimality_preserved(env.mdp, config.im, config.shaper, config.tie_tolerance, config.max_nodes);
    if (!c.out.empty()) std::filesystem::create_directories(c.out);
    emit(to_json(report, env.info), c.out.empty() ? "" : c.out + "/verify.json");
    return report.preserved() ? kOk : kViolated;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Optimality-preserving intrinsic reward shaping toolkit"};
    app.require_subcommand(1);

    Common run_opts, sweep_opts, verify_opts;
    std::vector<int> ds;
    double gamma = 0.99, f = 1.0, tolerance = kDefaultTieTolerance;
    int n = 4500;
    std::string mdp_path, solve_out;

    auto* run_cmd = app.add_subcommand("run", "Train every seed and write per-seed and aggregate CSVs");
    add_common(run_cmd, run_opts);

    auto* sweep_cmd = app.add_subcommand("sweep-d", "Run GRM(D) for several D and rank them");
    add_common(sweep_cmd, sweep_opts);
    sweep_cmd->add_option("--d", ds, "Delay values, comma separated")->required()->delimiter(',');

    auto* verify_cmd = app.add_subcommand("verify", "Certify optimality preservation with the exact oracle");
    add_common(verify_cmd, verify_opts);

    auto* blowup_cmd = app.add_subcommand("blowup-demo", "Report the PBIM final-step magnitude");
    blowup_cmd->add_option("--gamma", gamma, "Intrinsic discount in (0, 1]");
    blowup_cmd->add_option("--n", n, "Episode length (>= 2)");
    blowup_cmd->add_option("--f", f, "Constant intrinsic reward");

    auto* solve_cmd = app.add_subcommand("solve", "Dump V* and Q* for an MDP spec file");
    solve_cmd->add_option("mdp", mdp_path, "MDP spec JSON")->required()->check(CLI::ExistingFile);
    solve_cmd->add_option("--tol", tolerance, "Tie tolerance for optimal action sets");
    solve_cmd->add_option("--out", solve_out, "Write JSON here instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kConfigError;
    }

    try {
        if (*run_cmd) return cmd_run(run_opts);
        if (*sweep_cmd) return cmd_sweep(sweep_opts, ds);
        if (*verify_cmd) return cmd_verify(verify_opts);
        if (*blowup_cmd) {
            emit(to_json(blowup_demo(gamma, n, f)), "");
            return kOk;
        }
        if (*solve_cmd) {
            emit(solve_json(load_mdp(mdp_path), tolerance), solve_out);
            return kOk;
        }
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kConfigError;
    } catch (const ModelError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kConfigError;
    } catch (const TrainingAbort& e) {
        std::cerr << "aborted: " << e.what() << "\n";
        return kRuntimeAbort;
    } catch (const std::exception& e) {
        std::cerr << "aborted: " << e.what() << "\n";
        return kRuntimeAbort;
    }
    return kConfigError;
}
