#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "opshape/environments.hpp"
#include "opshape/learner.hpp"
#include "opshape/oracle.hpp"

namespace opshape::cli {

enum ExitCode : int { kOk = 0, kConfigError = 1, kViolated = 2, kRuntimeAbort = 3 };

/// Invalid configuration; names the first offending key.
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& key, const std::string& problem)
        : std::runtime_error("config key '" + key + "': " + problem), key_(key) {}
    const std::string& key() const { return key_; }

private:
    std::string key_;
};

/// Dotted-key view of a config document. Arrays are leaves.
using FlatConfig = std::map<std::string, nlohmann::json>;

FlatConfig flatten(const nlohmann::json& doc);
/// Applies `key=value`; the value is read as JSON when it parses, else as a
/// string.
void apply_override(FlatConfig& config, const std::string& assignment);

struct RunConfig {
    EnvSpec env;
    std::optional<std::filesystem::path> mdp_file;
    ImConfig im;
    ShaperConfig shaper;
    TrainConfig train;
    std::vector<std::uint64_t> seeds{0};
    std::filesystem::path output = "out";
    double tie_tolerance = kDefaultTieTolerance;
    std::size_t max_nodes = kDefaultNodeCap;
};

/// Validates every key; relative file paths resolve against `base_dir`.
RunConfig parse_run_config(const FlatConfig& config, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});

struct Environment {
    Mdp mdp;
    EnvInfo info;
};

Environment build_environment(const RunConfig& config);

/// Number of worker threads: OPSHAPE_THREADS when set, else the hardware
/// concurrency, never more than `jobs`.
unsigned thread_count(std::size_t jobs);

/// Trains every seed (concurrently) and returns curves in ascending seed order.
std::vector<LearningCurve> train_seeds(const RunConfig& config, const Environment& env);

std::string seed_csv(const LearningCurve& curve);
std::string aggregate_csv(const std::vector<LearningCurve>& curves);

struct RunOutput {
    std::vector<LearningCurve> curves;
    std::vector<std::filesystem::path> files;
};

/// Writes seed_<k>.csv per seed and aggregate.csv into config.output.
RunOutput run(const RunConfig& config);

struct SweepEntry {
    int d;
    double final_return;
    int rank;
};

/// Runs GRM(D) for each D into output/d_<D>; ranks by the trailing-10 mean
/// of the aggregate extrinsic return at the end of training.
std::vector<SweepEntry> sweep_d(const RunConfig& config, const std::vector<int>& ds);

struct BlowupReport {
    double gamma_i;
    int n;
    double f;
    double inverse_discount;
    double inverse_discount_log10;
    double final_magnitude;
    double final_magnitude_log10;
    bool overflow;
};

/// |F'_{N-1}| = (sum_{i=0}^{N-2} gamma^i f) gamma^{-(N-1)} and 1/gamma^{N-1}.
/// Magnitudes beyond double range are reported as +inf with the flag set.
BlowupReport blowup_demo(double gamma_i, int n, double f);

nlohmann::json to_json(const BlowupReport& report);
nlohmann::json to_json(const OptimalityReport& report, const EnvInfo& info);
nlohmann::json solve_json(const Mdp& mdp, double tie_tolerance);

}  // namespace opshape::cli
