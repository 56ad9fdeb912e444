#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "opshape/cli.hpp"

using namespace opshape;
using namespace opshape::cli;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigs = OPSHAPE_CONFIG_DIR;
const fs::path kTool = OPSHAPE_TOOL;

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("opshape_test_cli_" + name);
    fs::remove_all(dir);
    return dir;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::stringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
        std::vector<std::string> cells;
        std::stringstream fields(line);
        std::string cell;
        while (std::getline(fields, cell, ',')) cells.push_back(cell);
        if (!line.empty() && line.back() == ',') cells.emplace_back();
        rows.push_back(cells);
    }
    return rows;
}

int tool(const std::string& args) {
    const std::string cmd = kTool.string() + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

RunConfig hack(const std::string& kind, const std::vector<std::string>& extra = {}) {
    std::vector<std::string> overrides = {"shaper.kind=" + kind};
    overrides.insert(overrides.end(), extra.begin(), extra.end());
    return load_run_config(kConfigs / "hack_raw.json", overrides);
}

}  // namespace

TEST_CASE("config parsing") {
    const RunConfig cfg = hack("adops", {"seeds=[3, 1]", "train.iterations=50"});
    CHECK(cfg.shaper.kind == ShaperKind::adops);
    CHECK(cfg.train.shaper.kind == ShaperKind::adops);
    CHECK(cfg.seeds == std::vector<std::uint64_t>{1, 3});
    CHECK(cfg.train.iterations == 50);
    CHECK(cfg.im.states == std::vector<StateId>{2});

    const RunConfig file = load_run_config(kConfigs / "bandit_run.json");
    REQUIRE(file.mdp_file.has_value());
    CHECK(build_environment(file).info.state_names == std::vector<std::string>{"start", "done"});
}

TEST_CASE("config errors name the offending key") {
    auto key_of = [](const std::vector<std::string>& overrides) {
        try {
            hack("raw", overrides);
        } catch (const ConfigError& e) {
            return e.key();
        }
        return std::string("(none)");
    };
    CHECK(key_of({"shaper.delay=2"}) == "shaper.delay");
    CHECK(key_of({"train.iterations=\"many\""}) == "train.iterations");
    CHECK(key_of({"seeds=[1, 1]"}) == "seeds");
    CHECK(key_of({"seeds=[]"}) == "seeds");
    CHECK(key_of({"im.states=[\"X9\"]"}) == "im.states");
    CHECK(key_of({"im.kind=curiosity"}) == "im.kind");
    CHECK(key_of({"shaper.kind=grm", "shaper.d=-3"}) == "shaper");
    CHECK_THROWS_AS(apply_override(*std::make_unique<FlatConfig>(), "novalue"), ConfigError);
}

TEST_CASE("run writes one CSV per seed plus an aggregate") {
    RunConfig cfg = hack("raw", {"seeds=2", "train.iterations=40"});
    cfg.output = scratch("run");
    const auto first = run(cfg);
    CHECK(first.files.size() == 3);
    std::size_t csvs = 0;
    for (const auto& entry : fs::directory_iterator(cfg.output)) csvs += entry.path().extension() == ".csv";
    CHECK(csvs == 3);

    const std::string header =
        "iteration,episode,seed,ext_return,int_return_raw,int_return_shaped,zeta,max_action_prob,greedy_optimal,"
        "ext_return_smoothed";
    const std::string seed0 = slurp(cfg.output / "seed_0.csv");
    CHECK(seed0.rfind(header + "\n", 0) == 0);
    CHECK(seed0.find('\r') == std::string::npos);
    CHECK(slurp(cfg.output / "aggregate.csv").rfind(header + ",", 0) == 0);

    const std::string seed1 = slurp(cfg.output / "seed_1.csv");
    run(cfg);
    CHECK(slurp(cfg.output / "seed_0.csv") == seed0);
    CHECK(slurp(cfg.output / "seed_1.csv") == seed1);

    const auto a = parse_csv(seed0), b = parse_csv(seed1), agg = parse_csv(slurp(cfg.output / "aggregate.csv"));
    REQUIRE(a.size() == agg.size());
    for (std::size_t row = 1; row < agg.size(); ++row) {
        for (std::size_t col : {3u, 4u, 5u, 6u, 7u}) {
            const double mean = (std::stod(a[row][col]) + std::stod(b[row][col])) / 2.0;
            CHECK(std::abs(std::stod(agg[row][col]) - mean) <= 1e-12);
        }
        CHECK(agg[row][2] == "2");
        CHECK(a[row][9].empty());
    }
}

TEST_CASE("sweep over D") {
    RunConfig cfg = hack("grm", {"train.iterations=60"});
    cfg.output = scratch("sweep_dup");
    CHECK_THROWS_AS(sweep_d(cfg, {1, 2, 1}), ConfigError);
    RunConfig wrong = hack("pbim");
    CHECK_THROWS_AS(sweep_d(wrong, {1}), ConfigError);

    // GRM(0) issues nothing, so it replays the unshaped run exactly.
    RunConfig zero = hack("grm", {"train.iterations=60", "seeds=5"});
    zero.output = scratch("sweep_zero");
    const auto ranked = sweep_d(zero, {0});
    RunConfig none = hack("none", {"train.iterations=60", "seeds=5"});
    none.output = scratch("sweep_none");
    const auto baseline = run(none);
    std::vector<double> means;
    for (const auto& row : parse_csv(slurp(none.output / "aggregate.csv"))) {
        if (row[0] != "iteration") means.push_back(std::stod(row[3]));
    }
    double tail = 0.0;
    for (std::size_t i = means.size() - 10; i < means.size(); ++i) tail += means[i] / 10.0;
    CHECK(ranked.front().final_return == doctest::Approx(tail).epsilon(1e-12));
    CHECK(fs::exists(zero.output / "ranking.csv"));
    CHECK(fs::exists(zero.output / "d_0" / "aggregate.csv"));
}

TEST_CASE("short delays rank above long ones on the corridor") {
    RunConfig cfg = load_run_config(kConfigs / "corridor_grm_sweep.json");
    cfg.output = scratch("sweep_corridor");
    const int n = build_environment(cfg).mdp.horizon();
    const auto ranked = sweep_d(cfg, {n - 1, 1});
    CHECK(ranked.front().d == 1);
    CHECK(ranked.front().final_return > ranked.back().final_return);
}

TEST_CASE("blowup demo") {
    const auto paper = blowup_demo(0.99, 4500, 1.0);
    CHECK(paper.inverse_discount > 1e19);
    CHECK(paper.inverse_discount < 1e20);
    CHECK(!paper.overflow);
    CHECK(blowup_demo(1.0, 4500, 1.0).inverse_discount == 1.0);
    CHECK(blowup_demo(0.5, 11, 1.0).inverse_discount == 1024.0);
    const auto huge = blowup_demo(0.5, 5000, 1.0);
    CHECK(huge.overflow);
    CHECK(std::isinf(huge.final_magnitude));
    CHECK(huge.inverse_discount_log10 == doctest::Approx(4999 * std::log10(2.0)));
    CHECK_THROWS_AS(blowup_demo(0.0, 10, 1.0), ModelError);
    CHECK_THROWS_AS(blowup_demo(0.9, 1, 1.0), ModelError);
}

TEST_CASE("thread cap") {
    setenv("OPSHAPE_THREADS", "3", 1);
    CHECK(thread_count(10) == 3);
    CHECK(thread_count(2) == 2);
    unsetenv("OPSHAPE_THREADS");
}

TEST_CASE("tool exit codes") {
    const std::string verify = (kConfigs / "two_path_verify.json").string();
    CHECK(tool("verify " + verify) == 2);
    CHECK(tool("verify " + verify + " --set shaper.kind=adops_ideal") == 0);
    CHECK(tool("verify " + verify + " --set shaper.bogus=1") == 1);
    CHECK(tool("blowup-demo --gamma 0.99 --n 4500") == 0);
    CHECK(tool("solve " + (kConfigs / "bandit.json").string()) == 0);
    const fs::path out = scratch("abort");
    CHECK(tool("run " + (kConfigs / "corridor_pbim_blowup.json").string() +
               " --set seeds=1 --set train.iterations=1 --set shaper.gamma_i=0.5 --out " + out.string()) == 3);
    CHECK(tool("frobnicate") == 1);
}
