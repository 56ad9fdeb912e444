#include "opshape/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <set>
#include <thread>

#include "opshape/mdp_io.hpp"

namespace opshape::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys = {
        "env.builtin",        "env.file",          "env.width",           "env.height",
        "env.length",         "env.horizon",       "env.gamma_e",         "env.goal_reward",
        "env.side_reward",    "env.step_reward",   "env.step_cost",       "env.cliff_reward",
        "env.goal",           "env.noisy_cells",   "im.kind",             "im.beta",
        "im.lr",              "im.scale",          "im.seed",             "im.noisy_states",
        "im.states",          "shaper.kind",       "shaper.d",            "shaper.c",
        "shaper.epsilon",     "shaper.gamma_i",    "shaper.alpha",        "shaper.zeta",
        "train.iterations",   "train.iteration_steps", "train.policy",    "train.temperature",
        "train.epsilon_greedy", "train.lr_actor",  "train.lr_e",          "train.lr_i",
        "train.lr_q",         "train.time_indexed", "train.warmup_iterations", "train.record_every",
        "train.decision_state", "seeds",           "output",              "verify.tie_tolerance",
        "verify.max_nodes",
    };
    return keys;
}

void flatten_into(const json& node, const std::string& prefix, FlatConfig& out) {
    if (node.is_object() && (prefix.empty() || !node.empty())) {
        for (const auto& [key, value] : node.items()) {
            flatten_into(value, prefix.empty() ? key : prefix + "." + key, out);
        }
        return;
    }
    out[prefix] = node;
}

class Reader {
public:
    explicit Reader(const FlatConfig& config) : config_(config) {}

    bool has(const std::string& key) const { return config_.count(key) != 0; }
    const json& raw(const std::string& key) const { return config_.at(key); }

    double number(const std::string& key, double fallback) const {
        if (!has(key)) return fallback;
        const json& v = raw(key);
        if (!v.is_number()) throw ConfigError(key, "expected a number, got " + v.dump());
        const double x = v.get<double>();
        if (!std::isfinite(x)) throw ConfigError(key, "must be finite");
        return x;
    }

    long long integer(const std::string& key, long long fallback) const {
        if (!has(key)) return fallback;
        const json& v = raw(key);
        if (!v.is_number_integer()) throw ConfigError(key, "expected an integer, got " + v.dump());
        return v.get<long long>();
    }

    int small_integer(const std::string& key, int fallback) const {
        const long long v = integer(key, fallback);
        if (v < -1'000'000'000LL || v > 1'000'000'000LL) throw ConfigError(key, "out of range");
        return static_cast<int>(v);
    }

    bool boolean(const std::string& key, bool fallback) const {
        if (!has(key)) return fallback;
        const json& v = raw(key);
        if (!v.is_boolean()) throw ConfigError(key, "expected true or false, got " + v.dump());
        return v.get<bool>();
    }

    std::string string(const std::string& key, const std::string& fallback) const {
        if (!has(key)) return fallback;
        const json& v = raw(key);
        if (!v.is_string()) throw ConfigError(key, "expected a string, got " + v.dump());
        return v.get<std::string>();
    }

private:
    const FlatConfig& config_;
};

template <typename Fn>
auto keyed(const std::string& key, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const ModelError& e) {
        throw ConfigError(key, e.what());
    }
}

Cell read_cell(const json& v, const std::string& key) {
    if (!v.is_array() || v.size() != 2 || !v[0].is_number_integer() || !v[1].is_number_integer()) {
        throw ConfigError(key, "expected a cell [x, y], got " + v.dump());
    }
    return {v[0].get<int>(), v[1].get<int>()};
}

StateId read_state(const json& v, const std::vector<std::string>& names, const std::string& key) {
    if (v.is_number_integer()) {
        const int s = v.get<int>();
        if (s < 0 || s >= static_cast<int>(names.size())) {
            throw ConfigError(key, "state " + std::to_string(s) + " out of range");
        }
        return s;
    }
    if (v.is_string()) {
        const auto it = std::find(names.begin(), names.end(), v.get<std::string>());
        if (it == names.end()) throw ConfigError(key, "unknown state " + v.dump());
        return static_cast<StateId>(it - names.begin());
    }
    throw ConfigError(key, "expected a state index or name, got " + v.dump());
}

std::vector<StateId> read_states(const Reader& in, const std::string& key, const std::vector<std::string>& names) {
    std::vector<StateId> out;
    if (!in.has(key)) return out;
    const json& v = in.raw(key);
    if (!v.is_array()) throw ConfigError(key, "expected a list of states");
    for (const auto& item : v) {
        out.push_back(read_state(item, names, key));
    }
    return out;
}

std::vector<std::string> names_from_spec_file(const fs::path& path, int count) {
    std::ifstream file(path);
    json doc = json::parse(file, nullptr, false);
    std::vector<std::string> names;
    if (!doc.is_discarded() && doc.contains("states") && doc["states"].is_array()) {
        for (const auto& n : doc["states"]) names.push_back(n.get<std::string>());
    }
    if (names.empty()) {
        for (int s = 0; s < count; ++s) names.push_back(std::to_string(s));
    }
    return names;
}

std::vector<std::string> action_names_from_spec_file(const fs::path& path, int count) {
    std::ifstream file(path);
    json doc = json::parse(file, nullptr, false);
    std::vector<std::string> names;
    if (!doc.is_discarded() && doc.contains("actions") && doc["actions"].is_array()) {
        for (const auto& n : doc["actions"]) names.push_back(n.get<std::string>());
    }
    if (names.empty()) {
        for (int a = 0; a < count; ++a) names.push_back(std::to_string(a));
    }
    return names;
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

constexpr const char* kColumns =
    "iteration,episode,seed,ext_return,int_return_raw,int_return_shaped,zeta,max_action_prob,greedy_optimal,"
    "ext_return_smoothed";

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
}

double trailing_mean(const std::vector<double>& values, std::size_t end, std::size_t window) {
    const std::size_t begin = end + 1 > window ? end + 1 - window : 0;
    double total = 0.0;
    for (std::size_t i = begin; i <= end; ++i) total += values[i];
    return total / static_cast<double>(end + 1 - begin);
}

}  // namespace

FlatConfig flatten(const json& doc) {
    if (!doc.is_object()) throw ConfigError("(root)", "config must be a JSON object");
    FlatConfig out;
    flatten_into(doc, "", out);
    return out;
}

void apply_override(FlatConfig& config, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) {
        throw ConfigError(assignment, "override must look like key=value");
    }
    const std::string key = assignment.substr(0, eq);
    const std::string text = assignment.substr(eq + 1);
    json value = json::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;
    config[key] = std::move(value);
}

RunConfig parse_run_config(const FlatConfig& config, const fs::path& base_dir) {
    for (const auto& [key, value] : config) {
        if (!known_keys().count(key)) throw ConfigError(key, "unknown key");
    }
    const Reader in(config);
    RunConfig out;

    std::vector<std::string> names;
    if (in.has("env.file") == in.has("env.builtin")) {
        throw ConfigError("env.builtin", "exactly one of env.builtin and env.file is required");
    }
    if (in.has("env.file")) {
        fs::path file = in.string("env.file", "");
        if (file.is_relative()) file = base_dir / file;
        out.mdp_file = file;
        const Mdp mdp = keyed("env.file", [&] { return load_mdp(file); });
        names = names_from_spec_file(file, mdp.num_states());
    } else {
        EnvSpec& e = out.env;
        e.kind = keyed("env.builtin", [&] { return parse_env_kind(in.string("env.builtin", "")); });
        e.width = in.small_integer("env.width", e.width);
        e.height = in.small_integer("env.height", e.height);
        e.length = in.small_integer("env.length", e.length);
        e.horizon = in.small_integer("env.horizon", e.horizon);
        e.gamma_e = in.number("env.gamma_e", e.gamma_e);
        e.goal_reward = in.number("env.goal_reward", e.goal_reward);
        e.side_reward = in.number("env.side_reward", e.side_reward);
        e.step_reward = in.number("env.step_reward", e.step_reward);
        e.step_cost = in.number("env.step_cost", e.step_cost);
        e.cliff_reward = in.number("env.cliff_reward", e.cliff_reward);
        if (in.has("env.goal")) e.goal = read_cell(in.raw("env.goal"), "env.goal");
        if (in.has("env.noisy_cells")) {
            const json& cells = in.raw("env.noisy_cells");
            if (!cells.is_array()) throw ConfigError("env.noisy_cells", "expected a list of cells");
            for (const auto& c : cells) e.noisy_cells.push_back(read_cell(c, "env.noisy_cells"));
        }
        const auto info = keyed("env", [&] {
            build_env(e);
            return describe_env(e);
        });
        names = info.state_names;
        out.train.decision_state = info.decision_state;
    }

    ImConfig& im = out.im;
    im.kind = keyed("im.kind", [&] { return parse_im_kind(in.string("im.kind", to_string(im.kind))); });
    im.beta = in.number("im.beta", im.beta);
    if (im.beta < 0.0) throw ConfigError("im.beta", "must be >= 0");
    im.lr = in.number("im.lr", im.lr);
    if (!(im.lr > 0.0 && im.lr <= 1.0)) throw ConfigError("im.lr", "must lie in (0, 1]");
    im.scale = in.number("im.scale", im.scale);
    const long long im_seed = in.integer("im.seed", 0);
    if (im_seed < 0) throw ConfigError("im.seed", "must be >= 0");
    im.seed = static_cast<std::uint64_t>(im_seed);
    im.noisy_states = read_states(in, "im.noisy_states", names);
    im.states = read_states(in, "im.states", names);
    if (!out.mdp_file) {
        for (StateId s : describe_env(out.env).noisy_states) {
            if (std::find(im.noisy_states.begin(), im.noisy_states.end(), s) == im.noisy_states.end()) {
                im.noisy_states.push_back(s);
            }
        }
    }

    ShaperConfig& sh = out.shaper;
    sh.kind = keyed("shaper.kind", [&] { return parse_shaper_kind(in.string("shaper.kind", to_string(sh.kind))); });
    sh.d = in.small_integer("shaper.d", sh.d);
    sh.c = in.number("shaper.c", sh.c);
    sh.epsilon = in.number("shaper.epsilon", sh.epsilon);
    sh.gamma_i = in.number("shaper.gamma_i", sh.gamma_i);
    sh.alpha = in.number("shaper.alpha", sh.alpha);
    sh.zeta = in.number("shaper.zeta", sh.zeta);
    keyed("shaper", [&] { validate(sh); });

    TrainConfig& tr = out.train;
    tr.iterations = in.small_integer("train.iterations", tr.iterations);
    tr.iteration_steps = in.small_integer("train.iteration_steps", tr.iteration_steps);
    tr.policy = keyed("train.policy", [&] { return parse_policy_kind(in.string("train.policy", to_string(tr.policy))); });
    tr.temperature = in.number("train.temperature", tr.temperature);
    tr.epsilon_greedy = in.number("train.epsilon_greedy", tr.epsilon_greedy);
    tr.lr_actor = in.number("train.lr_actor", tr.lr_actor);
    tr.lr_e = in.number("train.lr_e", tr.lr_e);
    tr.lr_i = in.number("train.lr_i", tr.lr_i);
    tr.lr_q = in.number("train.lr_q", tr.lr_q);
    tr.time_indexed = in.boolean("train.time_indexed", tr.time_indexed);
    tr.warmup_iterations = in.small_integer("train.warmup_iterations", tr.warmup_iterations);
    tr.record_every = in.small_integer("train.record_every", tr.record_every);
    if (in.has("train.decision_state")) {
        tr.decision_state = read_state(in.raw("train.decision_state"), names, "train.decision_state");
    }
    tr.im = im;
    tr.shaper = sh;

    if (in.has("seeds")) {
        const json& v = in.raw("seeds");
        out.seeds.clear();
        if (v.is_number_integer()) {
            const long long n = v.get<long long>();
            if (n < 1 || n > 100000) throw ConfigError("seeds", "seed count must lie in [1, 100000]");
            for (long long k = 0; k < n; ++k) out.seeds.push_back(static_cast<std::uint64_t>(k));
        } else if (v.is_array() && !v.empty()) {
            for (const auto& s : v) {
                if (!s.is_number_integer() || s.get<long long>() < 0) {
                    throw ConfigError("seeds", "seeds must be non-negative integers, got " + s.dump());
                }
                out.seeds.push_back(s.get<std::uint64_t>());
            }
        } else {
            throw ConfigError("seeds", "expected a nonempty list of seeds or a seed count");
        }
        std::sort(out.seeds.begin(), out.seeds.end());
        if (std::adjacent_find(out.seeds.begin(), out.seeds.end()) != out.seeds.end()) {
            throw ConfigError("seeds", "seeds must be distinct");
        }
    }
    out.output = in.string("output", out.output.string());
    out.tie_tolerance = in.number("verify.tie_tolerance", out.tie_tolerance);
    if (!(out.tie_tolerance > 0.0)) throw ConfigError("verify.tie_tolerance", "must be > 0");
    const long long cap = in.integer("verify.max_nodes", static_cast<long long>(out.max_nodes));
    if (cap < 1) throw ConfigError("verify.max_nodes", "must be >= 1");
    out.max_nodes = static_cast<std::size_t>(cap);

    const Environment env = build_environment(out);
    keyed("train", [&] { validate(out.train, env.mdp); });
    keyed("im", [&] { IntrinsicStream(out.im, env.mdp.num_states()); });
    return out;
}

RunConfig load_run_config(const fs::path& path, const std::vector<std::string>& overrides) {
    std::ifstream file(path);
    if (!file) throw ConfigError("(file)", "cannot open " + path.string());
    json doc = json::parse(file, nullptr, false);
    if (doc.is_discarded()) throw ConfigError("(file)", path.string() + " is not valid JSON");
    FlatConfig flat = flatten(doc);
    for (const auto& o : overrides) apply_override(flat, o);
    return parse_run_config(flat, path.parent_path());
}

Environment build_environment(const RunConfig& config) {
    if (config.mdp_file) {
        Mdp mdp = keyed("env.file", [&] { return load_mdp(*config.mdp_file); });
        EnvInfo info;
        info.state_names = names_from_spec_file(*config.mdp_file, mdp.num_states());
        info.action_names = action_names_from_spec_file(*config.mdp_file, mdp.num_actions());
        return {std::move(mdp), std::move(info)};
    }
    return keyed("env", [&] { return Environment{build_env(config.env), describe_env(config.env)}; });
}

unsigned thread_count(std::size_t jobs) {
    unsigned n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("OPSHAPE_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1) n = static_cast<unsigned>(v);
    }
    return static_cast<unsigned>(std::min<std::size_t>(n, std::max<std::size_t>(jobs, 1)));
}

std::vector<LearningCurve> train_seeds(const RunConfig& config, const Environment& env) {
    const auto optimal = optimal_action_set(value_iteration(env.mdp).q, config.tie_tolerance);
    std::vector<LearningCurve> curves(config.seeds.size());
    std::vector<std::exception_ptr> errors(config.seeds.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t k = next++; k < config.seeds.size(); k = next++) {
            try {
                TrainConfig tc = config.train;
                tc.seed = config.seeds[k];
                curves[k] = train(env.mdp, tc, &optimal);
            } catch (...) {
                errors[k] = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    const unsigned threads = thread_count(config.seeds.size());
    for (unsigned i = 1; i < threads; ++i) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return curves;
}

std::string seed_csv(const LearningCurve& curve) {
    std::string out = std::string(kColumns) + "\n";
    for (const auto& r : curve.records) {
        out += std::to_string(r.iteration) + "," + std::to_string(r.episode) + "," + std::to_string(curve.seed) + "," +
               fmt(r.ext_return) + "," + fmt(r.int_return_raw) + "," + fmt(r.int_return_shaped) + "," + fmt(r.zeta) +
               "," + fmt(r.max_action_prob) + "," + (r.greedy_optimal ? "1" : "0") + ",\n";
    }
    return out;
}

std::string aggregate_csv(const std::vector<LearningCurve>& curves) {
    if (curves.empty()) throw std::invalid_argument("aggregate of zero curves");
    const std::size_t rows = curves.front().records.size();
    for (const auto& c : curves) {
        if (c.records.size() != rows) throw std::invalid_argument("curves differ in record count");
    }
    const double n = static_cast<double>(curves.size());
    std::string out = std::string(kColumns) +
                      ",ext_return_se,int_return_raw_se,int_return_shaped_se,zeta_se,max_action_prob_se,"
                      "greedy_optimal_se\n";
    auto stats = [&](std::size_t row, auto field) {
        double total = 0.0;
        for (const auto& c : curves) total += field(c.records[row]);
        const double mean = total / n;
        double ss = 0.0;
        for (const auto& c : curves) {
            const double d = field(c.records[row]) - mean;
            ss += d * d;
        }
        const double se = curves.size() > 1 ? std::sqrt(ss / (n - 1.0)) / std::sqrt(n) : 0.0;
        return std::pair{mean, se};
    };
    std::vector<double> ext_means(rows);
    for (std::size_t i = 0; i < rows; ++i) {
        ext_means[i] = stats(i, [](const CurveRecord& r) { return r.ext_return; }).first;
    }
    for (std::size_t i = 0; i < rows; ++i) {
        const auto episode = stats(i, [](const CurveRecord& r) { return static_cast<double>(r.episode); });
        const auto ext = stats(i, [](const CurveRecord& r) { return r.ext_return; });
        const auto raw = stats(i, [](const CurveRecord& r) { return r.int_return_raw; });
        const auto shaped = stats(i, [](const CurveRecord& r) { return r.int_return_shaped; });
        const auto zeta = stats(i, [](const CurveRecord& r) { return r.zeta; });
        const auto prob = stats(i, [](const CurveRecord& r) { return r.max_action_prob; });
        const auto greedy = stats(i, [](const CurveRecord& r) { return r.greedy_optimal ? 1.0 : 0.0; });
        out += std::to_string(curves.front().records[i].iteration) + "," + fmt(episode.first) + "," +
               std::to_string(curves.size()) + "," + fmt(ext.first) + "," + fmt(raw.first) + "," +
               fmt(shaped.first) + "," + fmt(zeta.first) + "," + fmt(prob.first) + "," + fmt(greedy.first) + "," +
               fmt(trailing_mean(ext_means, i, 10)) + "," + fmt(ext.second) + "," + fmt(raw.second) + "," +
               fmt(shaped.second) + "," + fmt(zeta.second) + "," + fmt(prob.second) + "," + fmt(greedy.second) +
               "\n";
    }
    return out;
}

RunOutput run(const RunConfig& config) {
    const Environment env = build_environment(config);
    RunOutput out;
    out.curves = train_seeds(config, env);
    fs::create_directories(config.output);
    for (const auto& curve : out.curves) {
        const fs::path path = config.output / ("seed_" + std::to_string(curve.seed) + ".csv");
        write_file(path, seed_csv(curve));
        out.files.push_back(path);
    }
    const fs::path aggregate = config.output / "aggregate.csv";
    write_file(aggregate, aggregate_csv(out.curves));
    out.files.push_back(aggregate);
    return out;
}

std::vector<SweepEntry> sweep_d(const RunConfig& config, const std::vector<int>& ds) {
    if (config.shaper.kind != ShaperKind::grm && config.shaper.kind != ShaperKind::grm_norm) {
        throw ConfigError("shaper.kind", "sweep-d needs grm or grm_norm, got " + to_string(config.shaper.kind));
    }
    if (ds.empty()) throw ConfigError("d", "no D values given");
    std::set<int> seen;
    for (int d : ds) {
        if (d < 0) throw ConfigError("d", "D must be >= 0, got " + std::to_string(d));
        if (!seen.insert(d).second) throw ConfigError("d", "duplicate D value " + std::to_string(d));
    }
    std::vector<SweepEntry> entries;
    for (int d : ds) {
        RunConfig cfg = config;
        cfg.shaper.d = d;
        cfg.train.shaper.d = d;
        cfg.output = config.output / ("d_" + std::to_string(d));
        const auto result = run(cfg);
        const std::size_t rows = result.curves.front().records.size();
        std::vector<double> means(rows, 0.0);
        for (std::size_t i = 0; i < rows; ++i) {
            for (const auto& c : result.curves) means[i] += c.records[i].ext_return;
            means[i] /= static_cast<double>(result.curves.size());
        }
        entries.push_back({d, trailing_mean(means, rows - 1, 10), 0});
    }
    std::vector<SweepEntry> ranked = entries;
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const SweepEntry& a, const SweepEntry& b) { return a.final_return > b.final_return; });
    std::string table = "rank,d,final_return\n";
    for (std::size_t i = 0; i < ranked.size(); ++i) {
        ranked[i].rank = static_cast<int>(i) + 1;
        table += std::to_string(ranked[i].rank) + "," + std::to_string(ranked[i].d) + "," +
                 fmt(ranked[i].final_return) + "\n";
    }
    fs::create_directories(config.output);
    write_file(config.output / "ranking.csv", table);
    return ranked;
}

BlowupReport blowup_demo(double gamma_i, int n, double f) {
    if (!(gamma_i > 0.0 && gamma_i <= 1.0)) throw ModelError("gamma_i must lie in (0, 1]");
    if (n < 2) throw ModelError("n must be >= 2");
    if (!std::isfinite(f)) throw ModelError("f must be finite");
    const double steps = static_cast<double>(n - 1);
    BlowupReport r{gamma_i, n, f, 0.0, 0.0, 0.0, 0.0, false};
    r.inverse_discount = std::pow(gamma_i, -steps);
    r.inverse_discount_log10 = -steps * std::log10(gamma_i);
    const double accumulated = gamma_i < 1.0 ? f * (1.0 - std::pow(gamma_i, steps)) / (1.0 - gamma_i) : f * steps;
    r.final_magnitude = std::abs(accumulated) * r.inverse_discount;
    r.final_magnitude_log10 = accumulated == 0.0 ? -std::numeric_limits<double>::infinity()
                                                 : std::log10(std::abs(accumulated)) + r.inverse_discount_log10;
    if (!std::isfinite(r.inverse_discount) || !std::isfinite(r.final_magnitude)) {
        r.overflow = true;
        r.inverse_discount = std::isfinite(r.inverse_discount) ? r.inverse_discount
                                                               : std::numeric_limits<double>::infinity();
        r.final_magnitude = std::numeric_limits<double>::infinity();
    }
    return r;
}

json to_json(const BlowupReport& r) {
    auto finite_or_null = [](double v) { return std::isfinite(v) ? json(v) : json("inf"); };
    return {{"gamma_i", r.gamma_i},
            {"n", r.n},
            {"f", r.f},
            {"inverse_discount", finite_or_null(r.inverse_discount)},
            {"inverse_discount_log10", r.inverse_discount_log10},
            {"final_magnitude", finite_or_null(r.final_magnitude)},
            {"final_magnitude_log10", std::isfinite(r.final_magnitude_log10) ? json(r.final_magnitude_log10) : json()},
            {"overflow", r.overflow}};
}

json to_json(const OptimalityReport& report, const EnvInfo& info) {
    auto state = [&](StateId s) {
        return s >= 0 && static_cast<std::size_t>(s) < info.state_names.size() ? info.state_names[s]
                                                                                : std::to_string(s);
    };
    auto actions = [&](const std::vector<ActionId>& set) {
        json out = json::array();
        for (ActionId a : set) {
            out.push_back(static_cast<std::size_t>(a) < info.action_names.size() ? info.action_names[a]
                                                                                 : std::to_string(a));
        }
        return out;
    };
    json rows = json::array();
    for (const auto& r : report.rows) {
        rows.push_back({{"node", r.node},
                        {"s", state(r.s)},
                        {"t", r.t},
                        {"baseline", actions(r.baseline)},
                        {"shaped", actions(r.shaped)},
                        {"match", r.match}});
    }
    json violations = json::array();
    for (const auto& v : report.violations) {
        violations.push_back({{"kind", to_string(v.kind)},
                              {"node", v.node},
                              {"s", state(v.s)},
                              {"t", v.t},
                              {"action", v.action >= 0 ? actions({v.action})[0] : json()},
                              {"gap", v.gap}});
    }
    return {{"verdict", report.preserved() ? "preserved" : "violated"},
            {"graph_nodes", report.graph_nodes},
            {"enumerated", report.enumerated},
            {"enumeration_agrees", report.enumeration_agrees},
            {"rows", rows},
            {"violations", violations}};
}

json solve_json(const Mdp& mdp, double tie_tolerance) {
    const Solution sol = value_iteration(mdp);
    const auto optimal = optimal_action_set(sol.q, tie_tolerance);
    json v = json::array();
    json q = json::array();
    json best = json::array();
    for (int t = 0; t <= mdp.horizon(); ++t) {
        json row = json::array();
        for (StateId s = 0; s < mdp.num_states(); ++s) row.push_back(sol.v(s, t));
        v.push_back(row);
    }
    for (int t = 0; t < mdp.horizon(); ++t) {
        json q_t = json::array();
        json best_t = json::array();
        for (StateId s = 0; s < mdp.num_states(); ++s) {
            const auto row = sol.q.row(s, t);
            q_t.push_back(std::vector<double>(row.begin(), row.end()));
            best_t.push_back(optimal.at(s, t));
        }
        q.push_back(q_t);
        best.push_back(best_t);
    }
    return {{"horizon", mdp.horizon()}, {"gamma_e", mdp.gamma_e()}, {"v", v}, {"q", q}, {"optimal_actions", best}};
}

}  // namespace opshape::cli
