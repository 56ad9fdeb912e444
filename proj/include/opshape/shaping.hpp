#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "opshape/mdp.hpp"

namespace opshape {

/// One step of the raw intrinsic stream as seen by a shaper.
struct ShapingEvent {
    int t = 0;
    StateId s = 0;
    ActionId a = 0;
    StateId s_next = 0;
    double f_raw = 0.0;
    bool done = false;
};

/// Thrown when a shaper receives events out of order.
class ShapingError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/**
 * Per-episode buffer shared by the matching shapers.
 *
 * `issued` holds the (possibly mean-subtracted) rewards that later steps
 * must match, `raw` the unmodified F values, `shaped` the emitted F'.
 * F-bar survives episode boundaries and is smoothed once per episode.
 */
class EpisodeLedger {
public:
    explicit EpisodeLedger(double alpha = 0.05, double f_bar = 0.0);

    /// Validates ordering; throws ShapingError for an event after done or a
    /// skipped timestep.
    void admit(const ShapingEvent& ev) const;
    /// Buffers the step's values; at done closes the episode and updates F-bar.
    void record(const ShapingEvent& ev, double issued, double shaped, double gamma_i);
    /// Clears the per-episode buffers after done.
    void reset();

    bool closed() const { return closed_; }
    int steps() const { return static_cast<int>(raw_.size()); }
    double f_bar() const { return f_bar_; }
    double alpha() const { return alpha_; }
    /// Running sum_i gamma_i^i F'_i for the current (or just closed) episode.
    double discounted_shaped() const { return u_; }
    const std::vector<double>& issued() const { return issued_; }
    const std::vector<double>& raw() const { return raw_; }
    const std::vector<double>& shaped() const { return shaped_; }

private:
    double alpha_;
    double f_bar_;
    double u_ = 0.0;
    double discount_ = 1.0;
    bool closed_ = false;
    std::vector<double> issued_;
    std::vector<double> raw_;
    std::vector<double> shaped_;
};

/// F_t, or F_t minus the ledger's F-bar when normalized.
double issued_value(const EpisodeLedger& ledger, double f_raw, bool normalized);

/// Final-step correction -sum_{j=from}^{t-1} gamma^{j-t} issued_j, in
/// ascending j. Shared by PBIM and GRM(D) so that their streams coincide.
double tail_correction(const std::vector<double>& issued, double gamma_i, int from, int t);

double pbim_step(EpisodeLedger& ledger, const ShapingEvent& ev, double gamma_i, bool normalized);
double grm_delay_step(EpisodeLedger& ledger, const ShapingEvent& ev, double gamma_i, int d, bool normalized);

/// m(t, t') over 0 <= t, t' < n. Must pass validate() before use.
class MatchingFunction {
public:
    MatchingFunction() = default;
    explicit MatchingFunction(int n);
    static MatchingFunction identity(int n);
    static MatchingFunction delay(int n, int d);

    int horizon() const { return n_; }
    double operator()(int t, int t_prime) const { return table_.at(index(t, t_prime)); }
    void set(int t, int t_prime, double value);
    bool validated() const { return validated_; }
    /// Runs check_matching and throws ModelError listing the first failure.
    void validate();

private:
    std::size_t index(int t, int t_prime) const {
        return static_cast<std::size_t>(t) * static_cast<std::size_t>(n_) + static_cast<std::size_t>(t_prime);
    }
    int n_ = 0;
    std::vector<double> table_;
    bool validated_ = false;
};

enum class MatchingFailure { out_of_range, not_fully_matching, not_future_agnostic };

struct MatchingViolation {
    MatchingFailure kind;
    int t;
    int t_prime;
    /// The offending entry, or the column sum for not_fully_matching.
    double value;
};

struct MatchingReport {
    std::vector<MatchingViolation> violations;
    bool ok() const { return violations.empty(); }
};

MatchingReport check_matching(const MatchingFunction& m, int n);
std::string describe(const MatchingViolation& v);

/// General matching. On an early done, every reward's unmatched remainder
/// is subtracted at the final step.
double grm_general_step(EpisodeLedger& ledger, const ShapingEvent& ev, double gamma_i, const MatchingFunction& m);

enum class ZetaDirection { down, up };

/**
 * Linear coefficient schedule with step 1/C. The value after n updates is
 * evaluated in closed form, which keeps spot values such as 0.5 at n = C/2
 * exact instead of accumulating rounding error.
 */
class ZetaSchedule {
public:
    ZetaSchedule() = default;
    ZetaSchedule(double c, ZetaDirection direction, double zeta0);
    static ZetaSchedule pies(double c) { return {c, ZetaDirection::down, 1.0}; }
    static ZetaSchedule adopes(double c) { return {c, ZetaDirection::up, 0.0}; }

    double zeta() const { return zeta_; }
    double c() const { return c_; }
    std::uint64_t updates() const { return n_; }
    ZetaDirection direction() const { return direction_; }
    double advance();

private:
    double c_ = 1.0;
    ZetaDirection direction_ = ZetaDirection::down;
    double zeta0_ = 1.0;
    std::uint64_t n_ = 0;
    double zeta_ = 1.0;
};

/// Advances a down-schedule and returns the new zeta.
double pies_update(ZetaSchedule& schedule);
/// Advances an up-schedule and returns the new zeta.
double adopes_update(ZetaSchedule& schedule);
double pies_step(const ZetaSchedule& schedule, double f);
double adopes_step(const ZetaSchedule& schedule, double f, double f2);

struct AdopsInputs {
    double v_e = 0.0;
    double q_e = 0.0;
    double v_i = 0.0;
    double v_i_next = 0.0;
    double gamma_i = 0.99;
    double f = 0.0;
    double epsilon = 1e-7;
};

struct OmegaDecomposition {
    double omega;
    bool c1;
    bool c2;
    bool c3;
};

OmegaDecomposition omega_decomposition(const AdopsInputs& in);
/// q_e < v_e: min(0, omega - epsilon); otherwise max(0, omega).
double adops_f2(const AdopsInputs& in);
/// Indicator form omega - (C1 + C2) omega - C3 epsilon.
double adops_f2_indicator(const AdopsInputs& in);
inline double shaped_reward(double r_ext, double f_shaped) { return r_ext + f_shaped; }

enum class ShaperKind { none, raw, pbim, pbim_norm, grm, grm_norm, pies, adops_ideal, adops, adopes };

ShaperKind parse_shaper_kind(const std::string& name);
std::string to_string(ShaperKind kind);
bool needs_values(ShaperKind kind);

struct ShaperConfig {
    ShaperKind kind = ShaperKind::raw;
    int d = 1;
    double c = 15000.0;
    double epsilon = 1e-7;
    double gamma_i = 0.99;
    double alpha = 0.05;
    /// Initial zeta; negative selects 1 for pies and 0 for adopes.
    double zeta = -1.0;
};

void validate(const ShaperConfig& config);

/// Critic quantities for one transition, needed by the ADOPS family.
struct ValueContext {
    double v_e;
    double q_e;
    double v_i;
    double v_i_next;
};

/**
 * Streaming shaper for one training run. Episodes start implicitly after
 * a done event; zeta advances only through end_iteration().
 */
class Shaper {
public:
    explicit Shaper(const ShaperConfig& config);

    double step(const ShapingEvent& ev, const ValueContext* values = nullptr);
    /// F2 of the last ADOPS-family step (0 for other kinds).
    double last_f2() const { return last_f2_; }
    void end_iteration();
    double zeta() const;

    const ShaperConfig& config() const { return config_; }
    const EpisodeLedger& ledger() const { return ledger_; }
    /// Byte encoding of the state that determines future outputs within the
    /// current episode.
    void append_digest(std::string& out) const;

private:
    ShaperConfig config_;
    EpisodeLedger ledger_;
    ZetaSchedule schedule_;
    double last_f2_ = 0.0;
};

}  // namespace opshape
