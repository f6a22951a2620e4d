#include "twolocus/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "twolocus/errors.hpp"

namespace twolocus {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void require_positive_mu(const Parameters& p, const char* what) {
    check_parameters(p);
    if (!(p.mutation_rate > 0.0))
        throw DomainError(std::string(what) + " requires mu > 0 (degenerate parameters)");
}

}  // namespace

double ln_plus(double x) { return x > 1.0 ? std::log(x) : 0.0; }

bool ValidationReport::all_pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const RatioCheck& c) { return c.pass; });
}

ValidationReport validate_parameters(const Parameters& params, double threshold) {
    require_positive_mu(params, "validate_parameters");
    const double n = params.n(), mu = params.mutation_rate, s = params.selection;
    const double r = params.recombination_prob;
    ValidationReport rep;
    auto add = [&](std::string name, double v) {
        rep.checks.push_back({std::move(name), v, threshold, v < threshold});
    };
    add("s", s);
    add("1/(N mu)", 1.0 / (n * mu));
    add("N mu^2/s", n * mu * mu / s);
    add("r ln+(N r)/s", r * ln_plus(n * r) / s);
    add("(r/s) ln(N s)", r / s * std::log(n * s));
    add("(r/s) ln(s/mu)", r / s * std::log(s / mu));
    rep.warnings = parameter_warnings(params);
    return rep;
}

PowerLawVerdict power_law_check(double a, double b, double c) {
    std::ostringstream why;
    bool ok = true;
    if (!(c > 0.0)) {
        ok = false;
        why << "c must be > 0; ";
    }
    if (!(c < b)) {
        ok = false;
        why << "c must be < b (r ln+(Nr) << s); ";
    }
    if (!((1.0 + c) / 2.0 < a)) {
        ok = false;
        why << "a must exceed (1+c)/2 (N mu^2 << s); ";
    }
    if (!(a < 1.0)) {
        ok = false;
        why << "a must be < 1 (N mu >> 1); ";
    }
    std::string text = why.str();
    if (ok) {
        text = "0 < c < b and (1+c)/2 < a < 1 hold";
    } else {
        text.resize(text.size() - 2);
    }
    return {ok, text};
}

Parameters power_law_parameters(std::int64_t n, double a, double b, double c) {
    const double nd = static_cast<double>(n);
    return {n, std::pow(nd, -a), std::pow(nd, -c), std::pow(nd, -b)};
}

const char* regime_name(RegimeTag tag) {
    switch (tag) {
        case RegimeTag::recombination_dominating: return "recombination_dominating";
        case RegimeTag::mutation_dominating: return "mutation_dominating";
        case RegimeTag::indeterminate: return "indeterminate";
    }
    return "unknown";
}

Regime classify_regime(const Parameters& params, RegimeThresholds thresholds) {
    require_positive_mu(params, "classify_regime");
    const double n = params.n(), mu = params.mutation_rate, r = params.recombination_prob;
    Regime out;
    out.rho = r * ln_plus(n * r) / (n * mu * mu);
    if (out.rho > thresholds.hi)
        out.tag = RegimeTag::recombination_dominating;
    else if (out.rho <= thresholds.lo)
        out.tag = RegimeTag::mutation_dominating;
    else
        out.tag = RegimeTag::indeterminate;
    return out;
}

double t_star(const Parameters& params) {
    require_positive_mu(params, "t_star");
    const double n = params.n(), mu = params.mutation_rate, s = params.selection;
    const double r = params.recombination_prob;
    const double origin = std::max(n * mu * mu, r * ln_plus(n * r));
    const double arg = n * s * s * s / (mu * origin);
    if (!(arg > 0.0) || !std::isfinite(arg)) throw DomainError("t_star: logarithm argument not positive");
    return std::log(arg) / s;
}

// ---------------------------------------------------------------------------

double ConstantChain::C3(RegimeTag tag) const {
    if (tag == RegimeTag::indeterminate) throw ScheduleError("C3 depends on the regime");
    return tag == RegimeTag::recombination_dominating ? C3_r : C3_m;
}
double ConstantChain::K3(RegimeTag tag) const {
    if (tag == RegimeTag::indeterminate) throw ScheduleError("K3 depends on the regime");
    return tag == RegimeTag::recombination_dominating ? K3_r : K3_m;
}
double ConstantChain::C4(RegimeTag tag) const {
    if (tag == RegimeTag::indeterminate) throw ScheduleError("C4 depends on the regime");
    return tag == RegimeTag::recombination_dominating ? C4_r : C4_m;
}

ConstantChain derive_constants(double epsilon, double delta, const Parameters& params, double slack,
                               RegimeThresholds thresholds) {
    if (!(epsilon > 0.0 && epsilon < 1.0 / 16.0)) throw DomainError("epsilon must lie in (0, 1/16)");
    if (!(delta > 0.0 && delta < 0.25)) throw DomainError("delta must lie in (0, 1/4)");
    if (!(slack > 0.0)) throw DomainError("slack must be positive");
    const Regime regime = classify_regime(params, thresholds);

    ConstantChain c;
    c.epsilon = epsilon;
    c.delta = delta;
    c.slack = slack;
    const double up = 1.0 + slack;
    const double d2 = delta * delta;

    c.K = up * 6.0 / epsilon;
    c.C1 = up * std::max(std::log(5.0 * c.K / epsilon), std::log(8.0 / d2));
    c.C0m = up * 2.0 * std::log(2.0 * c.K / epsilon);
    c.C0m_plus = up * std::max(c.C0m, 14.0 * std::exp(-c.C1) +
                                          std::log(48.0 * c.K / (epsilon * (1.0 - d2) * (1.0 - d2))));
    c.C0r = up * std::max(std::log(c.K * c.K / epsilon), c.C1 + std::log(4.0));
    c.eta = 2.0 * c.K * std::exp(-c.C1);
    c.C2 = -c.C1 + std::log(std::exp(c.C1) / (2.0 * (1.0 + d2)) - 1.0) + std::log(1.0 / d2 - 1.0);
    c.con22_C = std::max(1.0, regime.rho);

    const double e1 = std::exp(-c.C1);
    const double e2c1 = std::exp(-2.0 * c.C1);
    c.K1r_plus = c.K * c.K * e2c1 * (2.0 * (c.C0r - c.C1) + 1.0) / epsilon;
    c.K1m_plus = (4.0 * c.K * std::exp(-2.0 * c.C1 + c.C0m) +
                  c.K * c.K * e2c1 * (2.0 * (c.C0r - c.C1) + 1.0) * c.con22_C) /
                 (2.0 * epsilon);
    c.K1r_minus = std::exp(-7.0 * e1) * (1.0 - 5.0 * e1) * (1.0 - d2) * (1.0 - d2) * e2c1 / 3.0;
    c.K1m_minus = (1.0 - d2) * std::exp(-7.0 * e1 - 2.0 * c.C1 - c.C0m_plus) -
                  std::sqrt(48.0 * c.K * std::exp(c.C0m_plus) / epsilon) *
                      std::exp(-2.0 * c.C1 - 2.0 * c.C0m_plus);

    const double span = c.C1 + c.C2;
    c.K0r = 2.0 * std::exp(2.0 * span) * c.K1r_plus;
    c.K0m = 2.0 * std::exp(2.0 * span) * c.K1m_plus;
    c.Kp1 = std::exp(2.0 * span) * span;
    c.Kp2 = std::exp(3.0 * span) * span;
    c.K2r_plus = 2.0 * c.K1r_plus * std::exp(2.0 * span);
    c.K2r_minus = c.K1r_minus / 2.0;
    c.K2m_plus = 2.0 * c.K1m_plus * std::exp(2.0 * span);
    c.K2m_minus = c.K1m_minus / 2.0;

    c.C3_r = c.C2 - 3.0 - std::log(c.K2r_plus / d2);
    c.C3_m = c.C2 - 3.0 - std::log(c.K2m_plus / d2);
    c.K3_r = c.K2r_minus * std::exp((c.C3_r - c.C2) - 2.0) / 2.0;
    c.K3_m = c.K2m_minus * std::exp((c.C3_m - c.C2) - 2.0) / 2.0;
    c.C4_r = c.C3_r + std::log((1.0 / d2 - 1.0) * (1.0 / c.K3_r - 1.0));
    c.C4_m = c.C3_m + std::log((1.0 / d2 - 1.0) * (1.0 / c.K3_m - 1.0));
    return c;
}

// ---------------------------------------------------------------------------

namespace {

double pick(RegimeTag tag, double rec, double mut, const char* what) {
    if (tag == RegimeTag::indeterminate)
        throw ScheduleError(std::string(what) + " needs a regime; classification is indeterminate");
    const double v = tag == RegimeTag::recombination_dominating ? rec : mut;
    if (std::isnan(v)) throw ScheduleError(std::string(what) + " is undefined for these parameters");
    return v;
}

}  // namespace

double PhaseSchedule::t3(RegimeTag tag) const { return pick(tag, t3_r, t3_m, "t3"); }
double PhaseSchedule::t4(RegimeTag tag) const { return pick(tag, t4_r, t4_m, "t4"); }
double PhaseSchedule::t5_minus(RegimeTag tag) const { return pick(tag, t5_minus_r, t5_minus_m, "t5-"); }
double PhaseSchedule::t5_plus(RegimeTag tag) const { return pick(tag, t5_plus_r, t5_plus_m, "t5+"); }

std::vector<std::string> ordering_violations(const PhaseSchedule& sc, RegimeTag tag) {
    const bool rec = tag == RegimeTag::recombination_dominating;
    const std::vector<std::pair<const char*, double>> seq{
        {"0", 0.0},
        {"t0m", sc.t0m},
        {"t0m+", sc.t0m_plus},
        {"t1", sc.t1},
        {"t2", sc.t2},
        {"t3", rec ? sc.t3_r : sc.t3_m},
        {"t4", rec ? sc.t4_r : sc.t4_m},
        {"t5-", rec ? sc.t5_minus_r : sc.t5_minus_m},
        {"t5+", rec ? sc.t5_plus_r : sc.t5_plus_m},
    };
    std::vector<std::string> out;
    const std::string prefix = rec ? "[recombination] " : "[mutation] ";
    for (std::size_t i = 1; i < seq.size(); ++i) {
        if (!(seq[i - 1].second < seq[i].second)) {
            std::ostringstream os;
            os << prefix << seq[i - 1].first << " = " << seq[i - 1].second << " is not < " << seq[i].first
               << " = " << seq[i].second;
            out.push_back(os.str());
        }
    }
    if (rec && !(sc.t0r > 0.0 && sc.t0r < sc.t1)) {
        std::ostringstream os;
        os << prefix << "t0r = " << sc.t0r << " is not inside (0, t1 = " << sc.t1 << ")";
        out.push_back(os.str());
    }
    return out;
}

PhaseSchedule phase_schedule(const Parameters& params, const ConstantChain& c, RegimeThresholds thresholds) {
    PhaseSchedule sc;
    sc.regime = classify_regime(params, thresholds);
    sc.constants = c;
    const double n = params.n(), mu = params.mutation_rate, s = params.selection;
    const double r = params.recombination_prob, d = c.delta;

    auto log_term = [&](const char* name, double arg) {
        if (!(arg > 0.0) || !std::isfinite(arg)) {
            std::ostringstream os;
            os << name << " (argument " << arg << ")";
            sc.invalid_terms.push_back(os.str());
            return kNaN;
        }
        return std::log(arg) / s;
    };

    const double ln_s_mu = log_term("ln(s/mu)", s / mu);
    const double ln_mut0 = log_term("ln(s/(N mu^2))", s / (n * mu * mu));

    // t0r: recombination case and mutation case with Nr >= e share a form.
    const bool rec_like = sc.regime.tag == RegimeTag::recombination_dominating || n * r >= std::exp(1.0);
    sc.t0r = rec_like ? log_term("ln(s/(mu sqrt(N r)))", s / (mu * std::sqrt(n * r))) - c.C0r / s
                      : ln_s_mu - c.C0r / s;
    sc.t0m = ln_mut0 - c.C0m / s;
    sc.t0m_plus = ln_mut0 + c.C0m_plus / s;
    sc.t1 = ln_s_mu - c.C1 / s;
    sc.t2 = ln_s_mu + c.C2 / s;

    const double lnr = std::log(n * r);
    const double base_r = (n * r > 1.0) ? log_term("ln(s^2/(mu r ln(N r)))", s * s / (mu * r * lnr))
                                        : (sc.invalid_terms.push_back("ln(N r) <= 0: recombination variant undefined"), kNaN);
    const double base_m = log_term("ln(s^2/(N mu^3))", s * s / (n * mu * mu * mu));
    sc.t3_r = base_r + c.C3_r / s;
    sc.t3_m = base_m + c.C3_m / s;
    sc.t4_r = base_r + c.C4_r / s;
    sc.t4_m = base_m + c.C4_m / s;

    const double sweep = log_term("ln(N s)", n * s);
    sc.t5_plus_r = sc.t4_r + sweep / (1.0 - 2.0 * d * d);
    sc.t5_minus_r = sc.t4_r + (1.0 - d) * sweep;
    sc.t5_plus_m = sc.t4_m + sweep / (1.0 - 2.0 * d * d);
    sc.t5_minus_m = sc.t4_m + (1.0 - d) * sweep;

    if (sc.regime.tag == RegimeTag::indeterminate) {
        for (auto tag : {RegimeTag::recombination_dominating, RegimeTag::mutation_dominating})
            for (auto& v : ordering_violations(sc, tag)) sc.ordering_violations.push_back(std::move(v));
    } else {
        sc.ordering_violations = ordering_violations(sc, sc.regime.tag);
    }
    return sc;
}

// ---------------------------------------------------------------------------

Window Window::widened(double slack) const {
    if (!(slack >= 1.0)) throw DomainError("window slack must be >= 1");
    Window w = *this;
    if (kind == Kind::multiplicative) {
        w.lo = lo / slack;
        w.hi = hi * slack;
    } else {
        w.lo = ceiling - (ceiling - lo) * slack;
        w.hi = ceiling;
    }
    return w;
}

PhasePredictions phase_predictions(const PhaseSchedule& sc, const Parameters& params, const ConstantChain& c,
                                   RegimeTag tag) {
    if (tag == RegimeTag::indeterminate) throw ScheduleError("phase predictions need a definite regime");
    const bool rec = tag == RegimeTag::recombination_dominating;
    const double n = params.n(), mu = params.mutation_rate, s = params.selection;
    const double r = params.recombination_prob;
    const double d2 = c.delta * c.delta;

    PhasePredictions out;
    out.regime = tag;
    out.t1 = sc.t1;
    out.t2 = sc.t2;
    out.t3 = rec ? sc.t3_r : sc.t3_m;
    out.t4 = rec ? sc.t4_r : sc.t4_m;

    const double e1 = std::exp(-c.C1);
    using K = Window::Kind;
    out.x1_t1 = {"X1(t1)/N", (1.0 - d2) * e1, (1.0 + d2) * e1, K::multiplicative, 0.0};
    out.x2_t1 = {"X2(t1)/N", (1.0 - d2) * e1, (1.0 + d2) * e1, K::multiplicative, 0.0};
    out.x3_t1_scale = rec ? r * std::log(n * r) : n * mu * mu;
    out.x3_t1_scaled = {"X3(t1) s/(N scale)", rec ? c.K1r_minus : c.K1m_minus, rec ? c.K1r_plus : c.K1m_plus,
                        K::multiplicative, 0.0};
    out.x1_t2 = {"X1(t2)/N", 0.5 - 1.5 * d2, 0.5 - d2 * d2 / 4.0, K::deficit, 0.5};
    out.x2_t2 = {"X2(t2)/N", 0.5 - 1.5 * d2, 0.5 - d2 * d2 / 4.0, K::deficit, 0.5};

    const double k3 = c.K3(tag);
    const double c3 = c.C3(tag);
    out.x3_t3 = {"X3(t3)/N", k3, d2, K::multiplicative, 0.0};
    const double expo = 1.0 - 3.0 * c.delta;
    out.x0_t3_upper = c.delta * std::exp(-expo * (c3 - c.C2)) * std::pow(out.x3_t1_scale / s, expo);
    out.x3_t4 = {"X3(t4)/N", 1.0 - 1.25 * d2, 1.0 - 0.75 * k3, K::deficit, 1.0};
    out.x12_t4_lower = k3 / 2.0;
    return out;
}

}  // namespace twolocus
