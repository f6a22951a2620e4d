#pragma once

// Closed forms for birth-death survival, biased-walk ruin and logistic growth,
// with Monte Carlo estimators for cross-checking them.

#include <cstdint>

namespace twolocus {

// f(t) = 1 / (1 + B exp(-rate (t - anchor))).
struct LogisticCurve {
    double B_coeff = 1.0;
    double rate = 0.0;
    double anchor_time = 0.0;
};

// Probability that a linear birth-death process with birth rate 1 and death
// rate 1 - g, started from `initial` individuals, is still alive at time t.
double bd_survival(double selection_gap, double t, std::int64_t initial = 1);

// Probability that a walk stepping down with odds q = d/b hits 0 before
// level_up, from start. Stable for large exponents.
double ruin_before(std::int64_t level_up, std::int64_t start, double q);

double logistic_value(const LogisticCurve& curve, double t);
double logistic_derivative(const LogisticCurve& curve, double t);

// B such that f(anchor) = f0.
double logistic_coefficient(double f0);

struct ResidualReport {
    double max_residual = 0.0;       // |central difference - s f (1 - f)|
    double max_analytic_error = 0.0; // |analytic derivative - s f (1 - f)|
    double tail_residual = 0.0;      // residual on the last grid point
    int points = 0;
};

// Checks f' = s f (1-f) on `points` grid points spanning `span_rates`/rate
// after the anchor, using central differences with step h (default 1e-4/rate).
ResidualReport logistic_is_ode_solution(const LogisticCurve& curve, int points = 200,
                                        double span_rates = 40.0, double h = 0.0);

struct McEstimate {
    double mean = 0.0;
    double se = 0.0;
    std::int64_t trials = 0;
};

McEstimate mc_bd_survival(double selection_gap, double t, std::int64_t initial, std::int64_t trials,
                          std::uint64_t seed);

McEstimate mc_ruin_before(std::int64_t level_up, std::int64_t start, double q, std::int64_t trials,
                          std::uint64_t seed);

}  // namespace twolocus
