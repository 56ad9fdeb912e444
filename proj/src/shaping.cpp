#include "opshape/shaping.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>

namespace opshape {

EpisodeLedger::EpisodeLedger(double alpha, double f_bar) : alpha_(alpha), f_bar_(f_bar) {
    if (!(alpha > 0.0 && alpha <= 1.0)) {
        throw ModelError("smoothing factor alpha must lie in (0, 1]");
    }
}

void EpisodeLedger::admit(const ShapingEvent& ev) const {
    if (closed_) {
        throw ShapingError("event at t=" + std::to_string(ev.t) + " after done without reset");
    }
    if (ev.t != steps()) {
        throw ShapingError("expected event for t=" + std::to_string(steps()) + ", got t=" + std::to_string(ev.t));
    }
}

void EpisodeLedger::record(const ShapingEvent& ev, double issued, double shaped, double gamma_i) {
    issued_.push_back(issued);
    raw_.push_back(ev.f_raw);
    shaped_.push_back(shaped);
    u_ += discount_ * shaped;
    discount_ *= gamma_i;
    if (ev.done) {
        closed_ = true;
        double total = 0.0;
        for (double f : raw_) {
            total += f;
        }
        const double mean = total / static_cast<double>(raw_.size());
        f_bar_ = (1.0 - alpha_) * f_bar_ + alpha_ * mean;
    }
}

void EpisodeLedger::reset() {
    closed_ = false;
    u_ = 0.0;
    discount_ = 1.0;
    issued_.clear();
    raw_.clear();
    shaped_.clear();
}

double issued_value(const EpisodeLedger& ledger, double f_raw, bool normalized) {
    return normalized ? f_raw - ledger.f_bar() : f_raw;
}

double tail_correction(const std::vector<double>& issued, double gamma_i, int from, int t) {
    double sum = 0.0;
    for (int j = std::max(from, 0); j < t; ++j) {
        sum += -std::pow(gamma_i, j - t) * issued[static_cast<std::size_t>(j)];
    }
    return sum;
}

double pbim_step(EpisodeLedger& ledger, const ShapingEvent& ev, double gamma_i, bool normalized) {
    ledger.admit(ev);
    const double issued = issued_value(ledger, ev.f_raw, normalized);
    const double out = ev.done ? tail_correction(ledger.issued(), gamma_i, 0, ev.t) : issued;
    ledger.record(ev, issued, out, gamma_i);
    return out;
}

double grm_delay_step(EpisodeLedger& ledger, const ShapingEvent& ev, double gamma_i, int d, bool normalized) {
    if (d < 0) {
        throw ModelError("matching delay D must be >= 0");
    }
    ledger.admit(ev);
    const double issued = issued_value(ledger, ev.f_raw, normalized);
    double out = 0.0;
    if (ev.done) {
        out = tail_correction(ledger.issued(), gamma_i, ev.t - d, ev.t);
    } else if (ev.t < d) {
        out = issued;
    } else {
        const double earlier = d == 0 ? issued : ledger.issued()[static_cast<std::size_t>(ev.t - d)];
        out = issued - std::pow(gamma_i, -d) * earlier;
    }
    ledger.record(ev, issued, out, gamma_i);
    return out;
}

MatchingFunction::MatchingFunction(int n) : n_(n), table_(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0.0) {
    if (n < 1) {
        throw ModelError("matching horizon must be >= 1");
    }
}

MatchingFunction MatchingFunction::identity(int n) {
    MatchingFunction m(n);
    for (int t = 0; t < n; ++t) {
        m.set(t, t, 1.0);
    }
    return m;
}

MatchingFunction MatchingFunction::delay(int n, int d) {
    if (d < 0) {
        throw ModelError("matching delay D must be >= 0");
    }
    MatchingFunction m(n);
    for (int t_prime = 0; t_prime < n; ++t_prime) {
        m.set(std::min(t_prime + d, n - 1), t_prime, 1.0);
    }
    return m;
}

void MatchingFunction::set(int t, int t_prime, double value) {
    if (t < 0 || t >= n_ || t_prime < 0 || t_prime >= n_) {
        throw ModelError("matching index (" + std::to_string(t) + ", " + std::to_string(t_prime) + ") out of range");
    }
    table_[index(t, t_prime)] = value;
    validated_ = false;
}

void MatchingFunction::validate() {
    const auto report = check_matching(*this, n_);
    if (!report.ok()) {
        throw ModelError("invalid matching function: " + describe(report.violations.front()) + " (" +
                         std::to_string(report.violations.size()) + " violations)");
    }
    validated_ = true;
}

MatchingReport check_matching(const MatchingFunction& m, int n) {
    MatchingReport report;
    if (n != m.horizon()) {
        report.violations.push_back({MatchingFailure::out_of_range, n, m.horizon(), 0.0});
        return report;
    }
    for (int t = 0; t < n; ++t) {
        for (int t_prime = 0; t_prime < n; ++t_prime) {
            const double v = m(t, t_prime);
            if (!(v >= 0.0 && v <= 1.0)) {
                report.violations.push_back({MatchingFailure::out_of_range, t, t_prime, v});
            }
            if (t_prime > t && v != 0.0) {
                report.violations.push_back({MatchingFailure::not_future_agnostic, t, t_prime, v});
            }
        }
    }
    for (int t_prime = 0; t_prime < n; ++t_prime) {
        double total = 0.0;
        for (int j = t_prime; j < n; ++j) {
            total += m(j, t_prime);
        }
        if (std::abs(total - 1.0) > 1e-12) {
            report.violations.push_back({MatchingFailure::not_fully_matching, -1, t_prime, total});
        }
    }
    return report;
}

std::string describe(const MatchingViolation& v) {
    std::ostringstream out;
    switch (v.kind) {
    case MatchingFailure::out_of_range:
        out << "m(" << v.t << ", " << v.t_prime << ") = " << v.value << " outside [0, 1]";
        break;
    case MatchingFailure::not_future_agnostic:
        out << "m(" << v.t << ", " << v.t_prime << ") = " << v.value << " matches a future reward";
        break;
    case MatchingFailure::not_fully_matching:
        out << "column t'=" << v.t_prime << " sums to " << v.value << ", not 1";
        break;
    }
    return out.str();
}

double grm_general_step(EpisodeLedger& ledger, const ShapingEvent& ev, double gamma_i, const MatchingFunction& m) {
    if (!m.validated()) {
        throw ModelError("matching function has not been validated");
    }
    if (ev.t >= m.horizon()) {
        throw ModelError("event t=" + std::to_string(ev.t) + " beyond matching horizon " +
                         std::to_string(m.horizon()));
    }
    ledger.admit(ev);
    const auto& issued = ledger.issued();
    const int t = ev.t;
    double out = 0.0;
    if (ev.done) {
        for (int i = 0; i < t; ++i) {
            double matched = 0.0;
            for (int j = i; j < t; ++j) {
                matched += m(j, i);
            }
            out += -std::pow(gamma_i, i - t) * issued[static_cast<std::size_t>(i)] * (1.0 - matched);
        }
    } else {
        double sum = 0.0;
        for (int i = 0; i < t; ++i) {
            sum += std::pow(gamma_i, i - t) * issued[static_cast<std::size_t>(i)] * m(t, i);
        }
        out = (1.0 - m(t, t)) * ev.f_raw - sum;
    }
    ledger.record(ev, ev.f_raw, out, gamma_i);
    return out;
}

ZetaSchedule::ZetaSchedule(double c, ZetaDirection direction, double zeta0)
    : c_(c), direction_(direction), zeta0_(zeta0), zeta_(zeta0) {
    if (!(c > 0.0) || !std::isfinite(c)) {
        throw ModelError("zeta decay horizon C must be a positive finite number");
    }
    if (!(zeta0 >= 0.0 && zeta0 <= 1.0)) {
        throw ModelError("initial zeta must lie in [0, 1]");
    }
}

double ZetaSchedule::advance() {
    ++n_;
    const double n = static_cast<double>(n_);
    if (direction_ == ZetaDirection::down) {
        zeta_ = std::max(0.0, (zeta0_ * c_ - n) / c_);
    } else {
        zeta_ = std::min(1.0, (zeta0_ * c_ + n) / c_);
    }
    return zeta_;
}

double pies_update(ZetaSchedule& schedule) {
    if (schedule.direction() != ZetaDirection::down) {
        throw ModelError("PIES requires a decreasing schedule");
    }
    return schedule.advance();
}

double adopes_update(ZetaSchedule& schedule) {
    if (schedule.direction() != ZetaDirection::up) {
        throw ModelError("ADOPES requires an increasing schedule");
    }
    return schedule.advance();
}

double pies_step(const ZetaSchedule& schedule, double f) { return schedule.zeta() * f; }

double adopes_step(const ZetaSchedule& schedule, double f, double f2) { return f + schedule.zeta() * f2; }

OmegaDecomposition omega_decomposition(const AdopsInputs& in) {
    const double omega = in.v_e - in.q_e + in.v_i - in.gamma_i * in.v_i_next - in.f;
    const bool below = in.q_e < in.v_e;
    return {omega, below && omega > 0.0, !below && omega < 0.0, below && omega <= 0.0};
}

double adops_f2(const AdopsInputs& in) {
    if (!(in.epsilon > 0.0)) {
        throw ModelError("ADOPS epsilon must be > 0");
    }
    const double omega = omega_decomposition(in).omega;
    if (in.q_e < in.v_e) {
        return std::min(0.0, omega - in.epsilon);
    }
    return std::max(0.0, omega);
}

double adops_f2_indicator(const AdopsInputs& in) {
    const auto d = omega_decomposition(in);
    const double c12 = (d.c1 ? 1.0 : 0.0) + (d.c2 ? 1.0 : 0.0);
    return d.omega - c12 * d.omega - (d.c3 ? in.epsilon : 0.0);
}

ShaperKind parse_shaper_kind(const std::string& name) {
    static const std::pair<const char*, ShaperKind> kinds[] = {
        {"none", ShaperKind::none},       {"raw", ShaperKind::raw},
        {"pbim", ShaperKind::pbim},       {"pbim_norm", ShaperKind::pbim_norm},
        {"grm", ShaperKind::grm},         {"grm_norm", ShaperKind::grm_norm},
        {"pies", ShaperKind::pies},       {"adops_ideal", ShaperKind::adops_ideal},
        {"adops", ShaperKind::adops},     {"adopes", ShaperKind::adopes},
    };
    for (const auto& [key, kind] : kinds) {
        if (name == key) {
            return kind;
        }
    }
    throw ModelError("unknown shaper kind '" + name + "'");
}

std::string to_string(ShaperKind kind) {
    switch (kind) {
    case ShaperKind::none: return "none";
    case ShaperKind::raw: return "raw";
    case ShaperKind::pbim: return "pbim";
    case ShaperKind::pbim_norm: return "pbim_norm";
    case ShaperKind::grm: return "grm";
    case ShaperKind::grm_norm: return "grm_norm";
    case ShaperKind::pies: return "pies";
    case ShaperKind::adops_ideal: return "adops_ideal";
    case ShaperKind::adops: return "adops";
    case ShaperKind::adopes: return "adopes";
    }
    return "unknown";
}

bool needs_values(ShaperKind kind) {
    return kind == ShaperKind::adops_ideal || kind == ShaperKind::adops || kind == ShaperKind::adopes;
}

void validate(const ShaperConfig& config) {
    if (config.d < 0) {
        throw ModelError("shaper.d must be >= 0");
    }
    if (!(config.c > 0.0) || !std::isfinite(config.c)) {
        throw ModelError("shaper.c must be > 0");
    }
    if (!(config.epsilon > 0.0)) {
        throw ModelError("shaper.epsilon must be > 0");
    }
    if (!(config.gamma_i > 0.0 && config.gamma_i <= 1.0)) {
        throw ModelError("shaper.gamma_i must lie in (0, 1]");
    }
    if (!(config.alpha > 0.0 && config.alpha <= 1.0)) {
        throw ModelError("shaper.alpha must lie in (0, 1]");
    }
    if (config.zeta > 1.0) {
        throw ModelError("shaper.zeta must lie in [0, 1]");
    }
}

namespace {

ZetaSchedule schedule_for(const ShaperConfig& config) {
    if (config.kind == ShaperKind::adopes) {
        return {config.c, ZetaDirection::up, config.zeta < 0.0 ? 0.0 : config.zeta};
    }
    return {config.c, ZetaDirection::down, config.zeta < 0.0 ? 1.0 : config.zeta};
}

}  // namespace

Shaper::Shaper(const ShaperConfig& config)
    : config_(config), ledger_((validate(config), config.alpha)), schedule_(schedule_for(config)) {}

double Shaper::step(const ShapingEvent& ev, const ValueContext* values) {
    if (ledger_.closed()) {
        ledger_.reset();
    }
    const double g = config_.gamma_i;
    last_f2_ = 0.0;
    switch (config_.kind) {
    case ShaperKind::pbim:
    case ShaperKind::pbim_norm:
        return pbim_step(ledger_, ev, g, config_.kind == ShaperKind::pbim_norm);
    case ShaperKind::grm:
    case ShaperKind::grm_norm:
        return grm_delay_step(ledger_, ev, g, config_.d, config_.kind == ShaperKind::grm_norm);
    default:
        break;
    }
    ledger_.admit(ev);
    double out = 0.0;
    switch (config_.kind) {
    case ShaperKind::none:
        break;
    case ShaperKind::raw:
        out = ev.f_raw;
        break;
    case ShaperKind::pies:
        out = pies_step(schedule_, ev.f_raw);
        break;
    default: {
        if (values == nullptr) {
            throw ModelError("shaper '" + to_string(config_.kind) + "' needs critic values");
        }
        const AdopsInputs in{values->v_e, values->q_e, values->v_i, values->v_i_next, g, ev.f_raw, config_.epsilon};
        last_f2_ = adops_f2(in);
        out = config_.kind == ShaperKind::adopes ? adopes_step(schedule_, ev.f_raw, last_f2_) : ev.f_raw + last_f2_;
        break;
    }
    }
    ledger_.record(ev, ev.f_raw, out, g);
    return out;
}

void Shaper::end_iteration() {
    if (config_.kind == ShaperKind::pies || config_.kind == ShaperKind::adopes) {
        schedule_.advance();
    }
}

double Shaper::zeta() const {
    switch (config_.kind) {
    case ShaperKind::pies:
    case ShaperKind::adopes:
        return schedule_.zeta();
    case ShaperKind::none:
        return 0.0;
    default:
        return 1.0;
    }
}

void Shaper::append_digest(std::string& out) const {
    if (ledger_.closed()) {
        return;
    }
    switch (config_.kind) {
    case ShaperKind::pbim:
    case ShaperKind::pbim_norm:
    case ShaperKind::grm:
    case ShaperKind::grm_norm: {
        const auto& issued = ledger_.issued();
        const std::size_t from =
            config_.kind == ShaperKind::grm || config_.kind == ShaperKind::grm_norm
                ? issued.size() - std::min(issued.size(), static_cast<std::size_t>(config_.d))
                : 0;
        for (std::size_t i = from; i < issued.size(); ++i) {
            char buf[sizeof(double)];
            std::memcpy(buf, &issued[i], sizeof(double));
            out.append(buf, sizeof(double));
        }
        break;
    }
    default:
        break;
    }
}

}  // namespace opshape
