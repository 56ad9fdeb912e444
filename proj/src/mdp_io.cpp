#include "opshape/mdp_io.hpp"

#include <fstream>
#include <map>
#include <memory>
#include <tuple>

namespace opshape {

namespace {

using nlohmann::json;

struct Names {
    int count = 0;
    std::map<std::string, int> index;
};

Names read_names(const json& doc, const char* key) {
    if (!doc.contains(key)) {
        throw ModelError(std::string("MDP spec is missing key '") + key + "'");
    }
    const json& v = doc.at(key);
    Names out;
    if (v.is_number_integer()) {
        out.count = v.get<int>();
    } else if (v.is_array()) {
        out.count = static_cast<int>(v.size());
        for (int i = 0; i < out.count; ++i) {
            out.index[v[static_cast<std::size_t>(i)].get<std::string>()] = i;
        }
    } else {
        throw ModelError(std::string("key '") + key + "' must be a count or a list of names");
    }
    if (out.count <= 0) {
        throw ModelError(std::string("key '") + key + "' must be positive");
    }
    return out;
}

int resolve(const json& ref, const Names& names, const char* what) {
    int id = -1;
    if (ref.is_number_integer()) {
        id = ref.get<int>();
    } else if (ref.is_string()) {
        auto it = names.index.find(ref.get<std::string>());
        if (it == names.index.end()) {
            throw ModelError(std::string("unknown ") + what + " '" + ref.get<std::string>() + "'");
        }
        id = it->second;
    } else {
        throw ModelError(std::string("bad ") + what + " reference " + ref.dump());
    }
    if (id < 0 || id >= names.count) {
        throw ModelError(std::string(what) + " index out of range: " + std::to_string(id));
    }
    return id;
}

using Key = std::tuple<int, int, int>;

struct RewardTable {
    std::map<Key, double> any_time;
    std::map<std::tuple<int, int, int, int>, double> timed;

    double operator()(StateId s, ActionId a, StateId next, int t) const {
        if (auto it = timed.find({s, a, next, t}); it != timed.end()) {
            return it->second;
        }
        if (auto it = any_time.find({s, a, next}); it != any_time.end()) {
            return it->second;
        }
        return 0.0;
    }
};

}  // namespace

Mdp mdp_from_json(const json& doc) {
    const Names states = read_names(doc, "states");
    const Names actions = read_names(doc, "actions");
    for (const char* key : {"horizon", "gamma_e", "start", "transitions"}) {
        if (!doc.contains(key)) {
            throw ModelError(std::string("MDP spec is missing key '") + key + "'");
        }
    }
    const int horizon = doc.at("horizon").get<int>();
    const double gamma = doc.at("gamma_e").get<double>();

    std::vector<double> start(static_cast<std::size_t>(states.count), 0.0);
    const json& start_doc = doc.at("start");
    if (start_doc.is_array()) {
        if (start_doc.size() != start.size()) {
            throw ModelError("start list must have one entry per state");
        }
        for (std::size_t i = 0; i < start.size(); ++i) {
            start[i] = start_doc[i].get<double>();
        }
    } else if (start_doc.is_object()) {
        for (const auto& [name, p] : start_doc.items()) {
            start[static_cast<std::size_t>(resolve(json(name), states, "state"))] = p.get<double>();
        }
    } else {
        start[static_cast<std::size_t>(resolve(start_doc, states, "state"))] = 1.0;
    }

    std::vector<std::vector<std::vector<Transition>>> transitions(
        static_cast<std::size_t>(states.count),
        std::vector<std::vector<Transition>>(static_cast<std::size_t>(actions.count)));
    for (const json& row : doc.at("transitions")) {
        if (!row.is_array() || row.size() != 4) {
            throw ModelError("transition entries are [s, a, s', prob], got " + row.dump());
        }
        const int s = resolve(row[0], states, "state");
        const int a = resolve(row[1], actions, "action");
        const int next = resolve(row[2], states, "state");
        transitions[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)].push_back({next, row[3].get<double>()});
    }

    auto table = std::make_shared<RewardTable>();
    if (doc.contains("rewards")) {
        for (const json& row : doc.at("rewards")) {
            if (!row.is_array() || row.size() != 5) {
                throw ModelError("reward entries are [s, a, s', t|\"any\", value], got " + row.dump());
            }
            const int s = resolve(row[0], states, "state");
            const int a = resolve(row[1], actions, "action");
            const int next = resolve(row[2], states, "state");
            const double value = row[4].get<double>();
            if (row[3].is_string() && row[3].get<std::string>() == "any") {
                table->any_time[{s, a, next}] = value;
            } else if (row[3].is_number_integer()) {
                const int t = row[3].get<int>();
                if (t < 0 || t >= horizon) {
                    throw ModelError("reward time out of range: " + row.dump());
                }
                table->timed[{s, a, next, t}] = value;
            } else {
                throw ModelError("reward time must be an index or \"any\": " + row.dump());
            }
        }
    }

    std::vector<bool> terminal(static_cast<std::size_t>(states.count), false);
    if (doc.contains("terminal")) {
        for (const json& ref : doc.at("terminal")) {
            terminal[static_cast<std::size_t>(resolve(ref, states, "state"))] = true;
        }
    }

    RewardFn reward = [table](StateId s, ActionId a, StateId next, int t) { return (*table)(s, a, next, t); };
    return Mdp(states.count, actions.count, std::move(start), std::move(transitions), std::move(reward), gamma,
               horizon, std::move(terminal));
}

Mdp load_mdp(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ModelError("cannot open MDP spec " + path.string());
    }
    json doc;
    try {
        in >> doc;
    } catch (const json::parse_error& e) {
        throw ModelError("cannot parse MDP spec " + path.string() + ": " + e.what());
    }
    return mdp_from_json(doc);
}

}  // namespace opshape
