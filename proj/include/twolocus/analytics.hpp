#pragma once

// Closed-form predictions for the two-locus sweep: parameter diagnostics,
// regime classification, the fixation-time law t*, the proof-constant chain
// and the resulting phase times.

#include <optional>
#include <string>
#include <vector>

#include "twolocus/model.hpp"

namespace twolocus {

// ln(x) for x > 1, else 0.
double ln_plus(double x);

struct RatioCheck {
    std::string name;   // e.g. "N mu^2 / s"
    double value = 0.0;
    double threshold = 0.0;
    bool pass = false;
};

struct ValidationReport {
    std::vector<RatioCheck> checks;
    std::vector<std::string> warnings;

    bool all_pass() const;
};

// Finite-N values of the ratios that must vanish asymptotically. Never fails
// on a bad ratio; throws DomainError only when params leave their ranges.
ValidationReport validate_parameters(const Parameters& params, double threshold = 0.25);

struct PowerLawVerdict {
    bool valid = false;
    std::string explanation;
};

// mu = N^-a, r = N^-b, s = N^-c satisfy all four growth conditions iff
// 0 < c < b and (1+c)/2 < a < 1.
PowerLawVerdict power_law_check(double a, double b, double c);

Parameters power_law_parameters(std::int64_t n, double a, double b, double c);

enum class RegimeTag { recombination_dominating, mutation_dominating, indeterminate };

const char* regime_name(RegimeTag tag);

struct RegimeThresholds {
    double hi = 10.0;
    double lo = 1.0;
};

struct Regime {
    RegimeTag tag = RegimeTag::indeterminate;
    double rho = 0.0;  // r ln+(N r) / (N mu^2)
};

Regime classify_regime(const Parameters& params, RegimeThresholds thresholds = {});

// (1/s) ln( N s^3 / (mu * max{N mu^2, r ln+(N r)}) ).
double t_star(const Parameters& params);

struct ConstantChain {
    double epsilon = 0, delta = 0, slack = 0;
    double K = 0, C1 = 0, C0m = 0, C0m_plus = 0, C0r = 0, eta = 0;
    double C2 = 0;
    double con22_C = 0;
    // Bounds on X_3 at t1 and t2, per regime.
    double K1r_plus = 0, K1r_minus = 0, K1m_plus = 0, K1m_minus = 0;
    double K2r_plus = 0, K2r_minus = 0, K2m_plus = 0, K2m_minus = 0;
    double Kp1 = 0, Kp2 = 0, K0r = 0, K0m = 0;
    // Regime-dependent tail of the chain.
    double C3_r = 0, C3_m = 0, K3_r = 0, K3_m = 0, C4_r = 0, C4_m = 0;

    double C3(RegimeTag tag) const;
    double K3(RegimeTag tag) const;
    double C4(RegimeTag tag) const;
};

// Strict-inequality constants are set to (lower bound) * (1 + slack); the
// rest follow from their defining equalities.
ConstantChain derive_constants(double epsilon, double delta, const Parameters& params,
                               double slack = 0.01, RegimeThresholds thresholds = {});

struct PhaseSchedule {
    double t0r = 0, t0m = 0, t0m_plus = 0, t1 = 0, t2 = 0;
    // Regime variants; NaN when the variant's logarithm is undefined.
    double t3_r = 0, t3_m = 0, t4_r = 0, t4_m = 0;
    double t5_minus_r = 0, t5_plus_r = 0, t5_minus_m = 0, t5_plus_m = 0;
    Regime regime;
    ConstantChain constants;
    // Terms whose logarithm argument was not positive.
    std::vector<std::string> invalid_terms;
    // Failures of 0 < t0m < t0m+ < t1 < t2 < t3 < t4 < t5- < t5+.
    std::vector<std::string> ordering_violations;

    // Variant selected by `tag`; throws ScheduleError for indeterminate or undefined.
    double t3(RegimeTag tag) const;
    double t4(RegimeTag tag) const;
    double t5_minus(RegimeTag tag) const;
    double t5_plus(RegimeTag tag) const;
};

PhaseSchedule phase_schedule(const Parameters& params, const ConstantChain& chain,
                             RegimeThresholds thresholds = {});

// Recompute the ordering violations for the variant of `tag`.
std::vector<std::string> ordering_violations(const PhaseSchedule& schedule, RegimeTag tag);

// A closed window for a fraction (or scaled count) at a phase time.
// Multiplicative windows widen as [lo/slack, hi*slack]. Deficit windows
// just below a ceiling c = 1/2 or 1 widen to [c - (c - lo)*slack, c].
struct Window {
    enum class Kind { multiplicative, deficit };

    std::string name;
    double lo = 0, hi = 0;
    Kind kind = Kind::multiplicative;
    double ceiling = 0;

    bool contains(double v) const { return v >= lo && v <= hi; }
    Window widened(double slack) const;
};

struct PhasePredictions {
    RegimeTag regime = RegimeTag::indeterminate;
    double t1 = 0, t2 = 0, t3 = 0, t4 = 0;
    Window x1_t1, x2_t1;        // X_i(t1)/N
    Window x3_t1_scaled;        // X_3(t1) s / (N scale)
    double x3_t1_scale = 0;     // r ln(Nr) or N mu^2
    Window x1_t2, x2_t2;        // X_i(t2)/N
    Window x3_t3;               // X_3(t3)/N
    double x0_t3_upper = 0;     // bound on X_0(t3)/N
    Window x3_t4;               // X_3(t4)/N
    double x12_t4_lower = 0;    // bound on (X_1+X_2)(t4)/N
};

// Windows for the regime `tag` (must not be indeterminate).
PhasePredictions phase_predictions(const PhaseSchedule& schedule, const Parameters& params,
                                   const ConstantChain& chain, RegimeTag tag);

}  // namespace twolocus
