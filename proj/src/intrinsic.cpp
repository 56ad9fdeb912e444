#include "opshape/intrinsic.hpp"

#include <cmath>
#include <cstring>

#include "opshape/random.hpp"

namespace opshape {

namespace {

template <typename T>
void append_bytes(std::string& out, const T& value) {
    char buf[sizeof(T)];
    std::memcpy(buf, &value, sizeof(T));
    out.append(buf, sizeof(T));
}

std::vector<char> mask_of(const std::vector<StateId>& states, int num_states, const char* what) {
    std::vector<char> mask(static_cast<std::size_t>(num_states), 0);
    for (StateId s : states) {
        if (s < 0 || s >= num_states) {
            throw ModelError(std::string(what) + " references state " + std::to_string(s) + " out of range");
        }
        mask[static_cast<std::size_t>(s)] = 1;
    }
    return mask;
}

}  // namespace

NoveltyModel::NoveltyModel(int num_states, double lr, std::uint64_t seed)
    : target_(static_cast<std::size_t>(num_states)), predictor_(static_cast<std::size_t>(num_states), 0.0), lr_(lr) {
    if (!(lr > 0.0 && lr <= 1.0)) {
        throw ModelError("predictor learning rate must lie in (0, 1]");
    }
    Rng rng(seed);
    for (auto& v : target_) {
        v = uniform01(rng);
    }
}

NoveltyModel::NoveltyModel(std::vector<double> target, std::vector<double> predictor, double lr)
    : target_(std::move(target)), predictor_(std::move(predictor)), lr_(lr) {
    if (target_.size() != predictor_.size()) {
        throw ModelError("target and predictor tables differ in size");
    }
    if (!(lr > 0.0 && lr <= 1.0)) {
        throw ModelError("predictor learning rate must lie in (0, 1]");
    }
}

double NoveltyModel::error(StateId s) const {
    const double diff = target(s) - predictor(s);
    return diff * diff;
}

void NoveltyModel::learn(StateId s) {
    auto& p = predictor_.at(static_cast<std::size_t>(s));
    p += lr_ * (target(s) - p);
}

double count_bonus(VisitCounts& counts, StateId s, double beta) {
    const double bonus = beta / std::sqrt(static_cast<double>(counts.count(s)) + 1.0);
    counts.increment(s);
    return bonus;
}

double prediction_error_bonus(NoveltyModel& model, StateId s) {
    const double bonus = model.error(s);
    model.learn(s);
    return bonus;
}

ImKind parse_im_kind(const std::string& name) {
    if (name == "none") return ImKind::none;
    if (name == "count") return ImKind::count;
    if (name == "rnd_tabular") return ImKind::rnd_tabular;
    if (name == "constant") return ImKind::constant;
    throw ModelError("unknown intrinsic motivation kind '" + name + "'");
}

std::string to_string(ImKind kind) {
    switch (kind) {
    case ImKind::none: return "none";
    case ImKind::count: return "count";
    case ImKind::rnd_tabular: return "rnd_tabular";
    case ImKind::constant: return "constant";
    }
    return "unknown";
}

IntrinsicStream::IntrinsicStream(const ImConfig& config, int num_states)
    : config_(config), num_states_(num_states) {
    if (config.beta < 0.0) {
        throw ModelError("im.beta must be >= 0");
    }
    emit_mask_ = mask_of(config.states, num_states, "im.states");
    if (config.states.empty()) {
        std::fill(emit_mask_.begin(), emit_mask_.end(), 1);
    }
    noisy_mask_ = mask_of(config.noisy_states, num_states, "im.noisy_states");
    reset();
}

void IntrinsicStream::reset() {
    counts_ = VisitCounts(num_states_);
    if (config_.kind == ImKind::rnd_tabular) {
        model_ = NoveltyModel(num_states_, config_.lr, config_.seed);
    }
}

bool IntrinsicStream::emits(StateId s) const { return emit_mask_.at(static_cast<std::size_t>(s)) != 0; }
bool IntrinsicStream::noisy(StateId s) const { return noisy_mask_.at(static_cast<std::size_t>(s)) != 0; }

double IntrinsicStream::next(StateId s) {
    if (config_.kind == ImKind::none || !emits(s)) {
        return 0.0;
    }
    if (noisy(s) || config_.kind == ImKind::constant) {
        return config_.scale * config_.beta;
    }
    if (config_.kind == ImKind::count) {
        return config_.scale * count_bonus(counts_, s, config_.beta);
    }
    return config_.scale * prediction_error_bonus(model_, s);
}

double IntrinsicStream::peek(StateId s) const {
    if (config_.kind == ImKind::none || !emits(s)) {
        return 0.0;
    }
    if (noisy(s) || config_.kind == ImKind::constant) {
        return config_.scale * config_.beta;
    }
    if (config_.kind == ImKind::count) {
        return config_.scale * config_.beta / std::sqrt(static_cast<double>(counts_.count(s)) + 1.0);
    }
    return config_.scale * model_.error(s);
}

void IntrinsicStream::append_digest(std::string& out) const {
    switch (config_.kind) {
    case ImKind::count:
        for (StateId s = 0; s < num_states_; ++s) {
            if (emits(s) && !noisy(s)) {
                append_bytes(out, counts_.count(s));
            }
        }
        break;
    case ImKind::rnd_tabular:
        for (StateId s = 0; s < num_states_; ++s) {
            if (emits(s) && !noisy(s)) {
                append_bytes(out, model_.predictor(s));
            }
        }
        break;
    case ImKind::none:
    case ImKind::constant:
        break;
    }
}

}  // namespace opshape
