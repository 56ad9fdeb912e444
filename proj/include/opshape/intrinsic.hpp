#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "opshape/mdp.hpp"

namespace opshape {

/// Per-state visit counts. Nondecreasing within a run.
class VisitCounts {
public:
    explicit VisitCounts(int num_states = 0) : counts_(static_cast<std::size_t>(num_states), 0) {}

    std::uint64_t count(StateId s) const { return counts_.at(static_cast<std::size_t>(s)); }
    void increment(StateId s) { ++counts_.at(static_cast<std::size_t>(s)); }
    void set(StateId s, std::uint64_t n) { counts_.at(static_cast<std::size_t>(s)) = n; }
    const std::vector<std::uint64_t>& raw() const { return counts_; }

private:
    std::vector<std::uint64_t> counts_;
};

/**
 * Tabular analogue of random network distillation: a fixed random target
 * per state and a learned predictor. The bonus is the squared prediction
 * error, after which the predictor moves toward the target by `lr`.
 */
class NoveltyModel {
public:
    NoveltyModel() = default;
    NoveltyModel(int num_states, double lr, std::uint64_t seed);
    NoveltyModel(std::vector<double> target, std::vector<double> predictor, double lr);

    double target(StateId s) const { return target_.at(static_cast<std::size_t>(s)); }
    double predictor(StateId s) const { return predictor_.at(static_cast<std::size_t>(s)); }
    double lr() const { return lr_; }
    double error(StateId s) const;
    void learn(StateId s);
    const std::vector<double>& predictors() const { return predictor_; }

private:
    std::vector<double> target_;
    std::vector<double> predictor_;
    double lr_ = 1.0;
};

/// beta / sqrt(count(s) + 1), then increments count(s).
double count_bonus(VisitCounts& counts, StateId s, double beta);

/// (target(s) - predictor(s))^2, then predictor(s) += lr * (target(s) - predictor(s)).
double prediction_error_bonus(NoveltyModel& model, StateId s);

enum class ImKind { none, count, rnd_tabular, constant };

ImKind parse_im_kind(const std::string& name);
std::string to_string(ImKind kind);

struct ImConfig {
    ImKind kind = ImKind::count;
    double beta = 0.6;
    double lr = 0.5;
    /// Multiplier applied to every bonus before shaping.
    double scale = 1.0;
    std::uint64_t seed = 0;
    /// States whose bonus is the constant beta and never decays.
    std::vector<StateId> noisy_states;
    /// When nonempty, only these states emit a bonus.
    std::vector<StateId> states;
};

/**
 * Per-run intrinsic reward generator. The bonus is for the state being
 * entered, so F_t depends only on the visitation history up to t.
 *
 * State persists across episodes and is reset only explicitly.
 */
class IntrinsicStream {
public:
    IntrinsicStream() = default;
    IntrinsicStream(const ImConfig& config, int num_states);

    /// Bonus for arriving in `s`; updates the novelty statistics.
    double next(StateId s);
    /// Bonus that next(s) would return, without side effects.
    double peek(StateId s) const;
    void reset();

    /// Appends a byte encoding of the mutable state (for exact history
    /// augmentation).
    void append_digest(std::string& out) const;

    const ImConfig& config() const { return config_; }
    const VisitCounts& counts() const { return counts_; }
    const NoveltyModel& model() const { return model_; }
    VisitCounts& counts() { return counts_; }

private:
    bool emits(StateId s) const;
    bool noisy(StateId s) const;

    ImConfig config_;
    int num_states_ = 0;
    std::vector<char> emit_mask_;
    std::vector<char> noisy_mask_;
    VisitCounts counts_;
    NoveltyModel model_;
};

}  // namespace opshape
