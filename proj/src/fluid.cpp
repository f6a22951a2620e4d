#include "twolocus/fluid.hpp"

#include <algorithm>
#include <cmath>

#include "twolocus/errors.hpp"
#include "twolocus/rng.hpp"
#include "twolocus/stochastic_tools.hpp"

namespace twolocus {

const char* field_name(Field f) { return f == Field::full_beta ? "full_beta" : "selection_only"; }

SimplexPoint OdeSolution::at(double t) const {
    if (grid.empty() || t < grid.front() || t > grid.back()) throw RangeError("time outside ODE grid");
    auto it = std::upper_bound(grid.begin(), grid.end(), t);
    if (it == grid.end()) return values.back();
    const std::size_t i = static_cast<std::size_t>(it - grid.begin()) - 1;
    const double w = (t - grid[i]) / (grid[i + 1] - grid[i]);
    const SimplexPoint& a = values[i];
    const SimplexPoint& b = values[i + 1];
    return {a.xi1 + w * (b.xi1 - a.xi1), a.xi2 + w * (b.xi2 - a.xi2), a.xi3 + w * (b.xi3 - a.xi3)};
}

Vec3 field_value(const SimplexPoint& x, const Parameters& p, Field f) {
    return f == Field::full_beta ? drift(x, p) : selection_field(x, p.selection);
}

namespace {

SimplexPoint shift(const SimplexPoint& x, const Vec3& k, double h) {
    return {x.xi1 + h * k[0], x.xi2 + h * k[1], x.xi3 + h * k[2]};
}

// Returns the amount by which x had left the simplex, after clipping it back.
double clip(SimplexPoint& x) {
    double viol = 0.0;
    for (double* v : {&x.xi1, &x.xi2, &x.xi3}) {
        if (*v < 0.0) {
            viol = std::max(viol, -*v);
            *v = 0.0;
        }
    }
    const double sum = x.xi1 + x.xi2 + x.xi3;
    if (sum > 1.0) {
        viol = std::max(viol, sum - 1.0);
        x.xi1 /= sum;
        x.xi2 /= sum;
        x.xi3 /= sum;
    }
    return viol;
}

}  // namespace

std::vector<double> ode_grid(double t_begin, double t_end, double step) {
    if (!(step > 0.0) || !std::isfinite(step)) throw DomainError("step must be positive");
    if (!(t_end >= t_begin)) throw DomainError("t_span must be increasing");
    const auto n = static_cast<std::size_t>(std::ceil((t_end - t_begin) / step - 1e-12));
    const double h = n > 0 ? (t_end - t_begin) / static_cast<double>(n) : 0.0;
    std::vector<double> grid(n + 1);
    for (std::size_t i = 0; i <= n; ++i) grid[i] = i == n ? t_end : t_begin + h * static_cast<double>(i);
    return grid;
}

OdeSolution integrate(const SimplexPoint& initial, const Parameters& params, double t_begin, double t_end,
                      double step, Field field) {
    check_parameters(params);
    const double tol = 1e-9;
    if (initial.xi1 < -tol || initial.xi2 < -tol || initial.xi3 < -tol || initial.xi0() < -tol)
        throw DomainError("initial point is not on the simplex");

    OdeSolution sol;
    sol.which_field = field;
    sol.grid = ode_grid(t_begin, t_end, step);
    const std::size_t n = sol.grid.size() - 1;
    const double h = n > 0 ? (t_end - t_begin) / static_cast<double>(n) : 0.0;
    sol.values.reserve(n + 1);
    SimplexPoint x = initial;
    sol.values.push_back(x);
    for (std::size_t i = 1; i <= n; ++i) {
        const Vec3 k1 = field_value(x, params, field);
        const Vec3 k2 = field_value(shift(x, k1, h / 2), params, field);
        const Vec3 k3 = field_value(shift(x, k2, h / 2), params, field);
        const Vec3 k4 = field_value(shift(x, k3, h), params, field);
        for (int j = 0; j < 3; ++j) {
            const double inc = h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
            if (j == 0) x.xi1 += inc;
            if (j == 1) x.xi2 += inc;
            if (j == 2) x.xi3 += inc;
        }
        const double viol = clip(x);
        if (viol > tol) {
            ++sol.clipped_steps;
            sol.max_violation = std::max(sol.max_violation, viol);
        }
        sol.values.push_back(x);
    }
    return sol;
}

double sup_deviation(const ReplicateSummary& summary, const OdeSolution& sol, double lo, double hi) {
    if (!(hi >= lo)) throw RangeError("window must be increasing");
    if (sol.grid.empty() || lo < sol.grid.front() || hi > sol.grid.back())
        throw RangeError("ODE solution does not cover the window");
    if (summary.samples.empty() || lo < summary.samples.front().time || hi > summary.samples.back().time)
        throw RangeError("recorded samples do not cover the window");
    double worst = 0.0;
    for (std::size_t i = 0; i < sol.grid.size(); ++i) {
        const double t = sol.grid[i];
        if (t < lo || t > hi) continue;
        const SimplexPoint sim = fractions(sample_at(summary, t).state);
        const SimplexPoint& ode = sol.values[i];
        const double d1 = sim.xi1 - ode.xi1, d2 = sim.xi2 - ode.xi2, d3 = sim.xi3 - ode.xi3;
        worst = std::max(worst, std::sqrt(d1 * d1 + d2 * d2 + d3 * d3));
    }
    return worst;
}

double dn_probability_raw(double T, double epsilon0, double lipschitz, double L) {
    const double delta = epsilon0 * std::exp(-lipschitz * T) / 3.0;
    return 4.0 * L * T / (delta * delta);
}

double dn_probability_bound(double T, double epsilon0, double lipschitz, double L) {
    const double raw = dn_probability_raw(T, epsilon0, lipschitz, L);
    if (std::isnan(raw)) return 1.0;
    return std::clamp(raw, 0.0, 1.0);
}

double measured_lipschitz_b(int pairs, std::uint64_t seed) {
    if (pairs < 1) throw DomainError("pairs must be positive");
    Xoshiro256pp rng(seed);
    auto draw = [&] {
        double e[4];
        double sum = 0.0;
        for (double& v : e) sum += (v = rng.exponential());
        return SimplexPoint{e[1] / sum, e[2] / sum, e[3] / sum};
    };
    double k = 0.0;
    for (int i = 0; i < pairs; ++i) {
        const SimplexPoint x = draw();
        SimplexPoint y;
        if (i % 2 == 0) {
            y = draw();
        } else {
            const SimplexPoint dir = draw();
            const double eps = 1e-4;
            y = {x.xi1 + eps * (dir.xi1 - x.xi1), x.xi2 + eps * (dir.xi2 - x.xi2), x.xi3 + eps * (dir.xi3 - x.xi3)};
        }
        const Vec3 bx = selection_field(x, 1.0), by = selection_field(y, 1.0);
        const double num = std::hypot(bx[0] - by[0], bx[1] - by[1], bx[2] - by[2]);
        const double den = std::hypot(x.xi1 - y.xi1, x.xi2 - y.xi2, x.xi3 - y.xi3);
        if (den > 0.0) k = std::max(k, num / den);
    }
    return k;
}

double logistic_max_error(double s, double x1, double x2, double horizon, double step) {
    const Parameters p{2, 0.0, s, 0.0};
    const OdeSolution sol = integrate({x1, x2, 0.0}, p, 0.0, horizon, step, Field::selection_only);
    const LogisticCurve curve{logistic_coefficient(x1 + x2), s, 0.0};
    double err = 0.0;
    for (std::size_t i = 0; i < sol.grid.size(); ++i)
        err = std::max(err, std::abs(sol.values[i].xi1 + sol.values[i].xi2 - logistic_value(curve, sol.grid[i])));
    return err;
}

ConvergenceReport logistic_convergence(double s, double x1, double x2, double horizon, double step) {
    ConvergenceReport rep;
    rep.step = step;
    rep.error_coarse = logistic_max_error(s, x1, x2, horizon, step);
    rep.error_fine = logistic_max_error(s, x1, x2, horizon, step / 2.0);
    rep.ratio = rep.error_coarse / rep.error_fine;
    rep.order = std::log2(rep.ratio);
    return rep;
}

}  // namespace twolocus
