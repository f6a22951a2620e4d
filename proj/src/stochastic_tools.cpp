#include "twolocus/stochastic_tools.hpp"

#include <cmath>

#include "twolocus/errors.hpp"
#include "twolocus/rng.hpp"

namespace twolocus {

double bd_survival(double g, double t, std::int64_t initial) {
    if (!(g > 0.0 && g < 1.0)) throw DomainError("selection gap must lie in (0, 1)");
    if (!(t >= 0.0)) throw DomainError("time must be nonnegative");
    if (initial < 1) throw DomainError("initial must be >= 1");
    // 1 - (1-g) e^{-gt} computed as -expm1 form to keep precision near t = 0.
    const double denom = 1.0 - (1.0 - g) * std::exp(-g * t);
    const double p1 = std::min(1.0, g / denom);
    if (initial == 1) return p1;
    // 1 - (1 - p1)^k
    return -std::expm1(static_cast<double>(initial) * std::log1p(-p1));
}

double ruin_before(std::int64_t level_up, std::int64_t start, double q) {
    if (level_up < 1) throw DomainError("level_up must be positive");
    if (start < 0 || start > level_up) throw DomainError("start must lie in [0, level_up]");
    if (!(q > 0.0) || !std::isfinite(q)) throw DomainError("q must be positive and finite");
    if (start == 0) return 1.0;
    if (start == level_up) return 0.0;
    const double a = static_cast<double>(start), L = static_cast<double>(level_up);
    const double lq = std::log(q);
    if (lq == 0.0) return 1.0 - a / L;
    // (q^L - q^a) / (q^L - 1), rearranged so that no power exceeds 1.
    if (lq > 0.0) return std::expm1((a - L) * lq) / std::expm1(-L * lq);
    return std::exp(a * lq) * std::expm1((L - a) * lq) / std::expm1(L * lq);
}

double logistic_value(const LogisticCurve& c, double t) {
    return 1.0 / (1.0 + c.B_coeff * std::exp(-c.rate * (t - c.anchor_time)));
}

double logistic_derivative(const LogisticCurve& c, double t) {
    const double e = c.B_coeff * std::exp(-c.rate * (t - c.anchor_time));
    return c.rate * e / ((1.0 + e) * (1.0 + e));
}

double logistic_coefficient(double f0) {
    if (!(f0 > 0.0 && f0 < 1.0)) throw DomainError("logistic start value must lie in (0, 1)");
    return 1.0 / f0 - 1.0;
}

ResidualReport logistic_is_ode_solution(const LogisticCurve& c, int points, double span_rates, double h) {
    if (!(c.B_coeff > 0.0)) throw DomainError("B must be positive");
    if (!(c.rate > 0.0)) throw DomainError("rate must be positive");
    if (points < 2) throw DomainError("need at least two grid points");
    if (h <= 0.0) h = 1e-4 / c.rate;
    ResidualReport rep;
    rep.points = points;
    const double span = span_rates / c.rate;
    for (int i = 0; i < points; ++i) {
        const double t = c.anchor_time + span * i / (points - 1);
        const double f = logistic_value(c, t);
        const double rhs = c.rate * f * (1.0 - f);
        const double fd = (logistic_value(c, t + h) - logistic_value(c, t - h)) / (2.0 * h);
        const double res = std::abs(fd - rhs);
        rep.max_residual = std::max(rep.max_residual, res);
        rep.max_analytic_error = std::max(rep.max_analytic_error, std::abs(logistic_derivative(c, t) - rhs));
        if (i == points - 1) rep.tail_residual = res;
    }
    return rep;
}

namespace {

McEstimate bernoulli_estimate(std::int64_t hits, std::int64_t trials) {
    McEstimate e;
    e.trials = trials;
    e.mean = static_cast<double>(hits) / static_cast<double>(trials);
    e.se = std::sqrt(e.mean * (1.0 - e.mean) / static_cast<double>(trials));
    return e;
}

}  // namespace

McEstimate mc_bd_survival(double g, double t, std::int64_t initial, std::int64_t trials, std::uint64_t seed) {
    if (!(g > 0.0 && g < 1.0)) throw DomainError("selection gap must lie in (0, 1)");
    if (trials < 1 || initial < 1) throw DomainError("trials and initial must be positive");
    // Past this size the chance of later extinction, (1-g)^n, is below 1e-15.
    const double big = std::ceil(std::log(1e-15) / std::log1p(-g));
    Xoshiro256pp rng(seed);
    const double death = 1.0 - g;
    std::int64_t alive = 0;
    for (std::int64_t k = 0; k < trials; ++k) {
        double n = static_cast<double>(initial), clock = 0.0;
        for (;;) {
            if (n == 0.0) break;
            if (n >= big) break;
            clock += rng.exponential() / (n * (1.0 + death));
            if (clock > t) break;
            n += rng.uniform() * (1.0 + death) < 1.0 ? 1.0 : -1.0;
        }
        if (n > 0.0) ++alive;
    }
    return bernoulli_estimate(alive, trials);
}

McEstimate mc_ruin_before(std::int64_t level_up, std::int64_t start, double q, std::int64_t trials,
                          std::uint64_t seed) {
    if (start < 0 || start > level_up) throw DomainError("start must lie in [0, level_up]");
    if (!(q > 0.0) || trials < 1) throw DomainError("q and trials must be positive");
    const double p_down = q / (1.0 + q);
    Xoshiro256pp rng(seed);
    std::int64_t ruined = 0;
    for (std::int64_t k = 0; k < trials; ++k) {
        std::int64_t pos = start;
        while (pos > 0 && pos < level_up) pos += rng.uniform() < p_down ? -1 : 1;
        if (pos == 0) ++ruined;
    }
    return bernoulli_estimate(ruined, trials);
}

}  // namespace twolocus
