#pragma once

// Deterministic fluid limit dx/dt = beta(x) (or the selection-only field b)
// and its comparison with simulated paths.

#include <cstdint>
#include <vector>

#include "twolocus/model.hpp"
#include "twolocus/simulator.hpp"

namespace twolocus {

enum class Field { full_beta, selection_only };

const char* field_name(Field f);

struct OdeSolution {
    std::vector<double> grid;
    std::vector<SimplexPoint> values;
    Field which_field = Field::full_beta;
    // Steps whose result left the simplex by more than 1e-9 and were clipped.
    int clipped_steps = 0;
    double max_violation = 0.0;

    // Linear interpolation between grid points; throws RangeError outside.
    SimplexPoint at(double t) const;
};

// Classical RK4 with a fixed step. The step is shrunk slightly so that the
// grid ends exactly at t_end. A zero-length span yields a single point.
OdeSolution integrate(const SimplexPoint& initial, const Parameters& params, double t_begin,
                      double t_end, double step, Field field = Field::full_beta);

// Time grid that integrate() uses for the same span and step.
std::vector<double> ode_grid(double t_begin, double t_end, double step);

Vec3 field_value(const SimplexPoint& x, const Parameters& params, Field field);

// max over solution grid times in [window_lo, window_hi] of |X(t)/N - x(t)|,
// with X taken from the recorded samples as a right-continuous step path.
double sup_deviation(const ReplicateSummary& summary, const OdeSolution& solution, double window_lo,
                     double window_hi);

// 4 L T / Delta^2 with Delta = epsilon0 exp(-lipschitz T) / 3, clamped to [0, 1].
double dn_probability_bound(double T, double epsilon0, double lipschitz, double L);

// Unclamped value of the same expression.
double dn_probability_raw(double T, double epsilon0, double lipschitz, double L);

// Empirical Lipschitz constant of b/s over random simplex pairs, half of
// them far apart and half at distance ~1e-4.
double measured_lipschitz_b(int pairs, std::uint64_t seed);

struct ConvergenceReport {
    double step = 0.0;
    double error_coarse = 0.0;
    double error_fine = 0.0;  // step / 2
    double ratio = 0.0;
    double order = 0.0;       // log2(ratio)
};

// Error of RK4 on the selection-only field with x3 = 0 against the closed-form
// logistic for x1 + x2, at `step` and `step / 2`, over [0, horizon].
double logistic_max_error(double s, double x1, double x2, double horizon, double step);
ConvergenceReport logistic_convergence(double s, double x1, double x2, double horizon, double step);

}  // namespace twolocus
