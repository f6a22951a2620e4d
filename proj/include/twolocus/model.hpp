#pragma once

// Two-locus Moran model with selection, recurrent mutation and recombination.
//
// Types: 0 = ab, 1 = Ab, 2 = aB, 3 = AB. Individuals carrying 0, 1, 2
// beneficial alleles die at rates 1, 1-s, 1-2s and are replaced at once.
// The replacement copies one random parent with probability 1-r, otherwise
// takes its a/A allele and its b/B allele from two independent parents.
// Every a mutates to A and every b mutates to B at rate mu.
//
// Everything in this header is a pure function of its arguments.

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace twolocus {

struct Parameters {
    std::int64_t n_individuals = 0;  // N
    double mutation_rate = 0.0;      // mu, per allele per unit time
    double selection = 0.0;          // s, death-rate reduction per beneficial allele
    double recombination_prob = 0.0; // r, per replacement

    double n() const { return static_cast<double>(n_individuals); }
};

// Throws DomainError if the parameters leave their admissible ranges
// (N >= 2, mu in (0,1), s in (0,1/2], r in [0,1)). mu = 0 is allowed here
// because the simulator treats it as a degenerate but well-defined chain.
void check_parameters(const Parameters& p);

// Soft diagnostics that do not block a run (currently: odd N).
std::vector<std::string> parameter_warnings(const Parameters& p);

struct PopulationState {
    std::array<std::int64_t, 4> x{};  // counts of types 0..3
    double time = 0.0;

    std::int64_t total() const { return x[0] + x[1] + x[2] + x[3]; }
    static PopulationState all_of_type(int type, std::int64_t n);
    bool operator==(const PopulationState&) const = default;
};

// Throws DomainError unless counts are nonnegative and sum to N.
void check_state(const PopulationState& state, const Parameters& p);

// Fractions (xi1, xi2, xi3); xi0 is implied.
struct SimplexPoint {
    double xi1 = 0.0;
    double xi2 = 0.0;
    double xi3 = 0.0;

    double xi0() const { return 1.0 - xi1 - xi2 - xi3; }
    bool operator==(const SimplexPoint&) const = default;
};

SimplexPoint fractions(const PopulationState& state);

// Aggregated CTMC channels, one per ordered pair of distinct types.
// Births of type i out of type 0 fold in the mutation 0 -> i, and the
// 1 -> 3 and 2 -> 3 channels fold in the mutation of the remaining allele.
enum class Channel : int {
    birth1 = 0,    // 0 -> 1
    birth2,        // 0 -> 2
    birth3,        // 0 -> 3
    one_to_zero,
    one_to_two,
    one_to_three,
    two_to_zero,
    two_to_one,
    two_to_three,
    three_to_zero,
    three_to_one,
    three_to_two,
};

inline constexpr int kChannelCount = 12;

struct ChannelJump {
    int from;
    int to;
};

inline constexpr std::array<ChannelJump, kChannelCount> kChannelJumps{{
    {0, 1}, {0, 2}, {0, 3},
    {1, 0}, {1, 2}, {1, 3},
    {2, 0}, {2, 1}, {2, 3},
    {3, 0}, {3, 1}, {3, 2},
}};

const char* channel_name(Channel c);

struct ChannelRates {
    std::array<double, kChannelCount> rate{};
    double total = 0.0;

    double operator[](Channel c) const { return rate[static_cast<int>(c)]; }
};

// Probability that a newborn is of type i, given current fractions.
std::array<double, 4> replacement_probabilities(const SimplexPoint& xi, double r);

ChannelRates channel_rates(const PopulationState& state, const Parameters& p);

// Same computation from raw counts; used by the simulator hot loop.
void channel_rates_into(const std::array<std::int64_t, 4>& x, const Parameters& p,
                        ChannelRates& out) noexcept;

using Vec3 = std::array<double, 3>;

// Fluid-limit drift beta(xi) in the (xi1, xi2, xi3) coordinates.
Vec3 drift(const SimplexPoint& xi, const Parameters& p);

// Selection-only field b(x) = s * ((1-x1-x2-2x3)x1, (1-x1-x2-2x3)x2, (2-x1-x2-2x3)x3).
Vec3 selection_field(const SimplexPoint& x, double s);

// Upper bound 48/N on alpha.
double noise_bound(const Parameters& p);

// Exact alpha(xi) = sum over channels of |jump|^2 * rate, in fraction units.
double noise_exact(const PopulationState& state, const Parameters& p);

// Growth rates G_0..G_3 of the established lineages of each type.
struct GrowthRates {
    double g0, g1, g2, g3;
};

GrowthRates growth_rates(const PopulationState& state, const Parameters& p);

// ---------------------------------------------------------------------------
// Lineage subtypes.
//
// 0f: type 0 descended from the initial population; 0r: type 0 descended
// from a recombination-born founder. im / ir: type i descended from a
// mutation-born / recombination-born founder.

enum class Subtype : int {
    zero_founder = 0,
    zero_r,
    one_m,
    one_r,
    two_m,
    two_r,
    three_m,
    three_r,
};

inline constexpr int kSubtypeCount = 8;

constexpr int type_of(Subtype st) { return static_cast<int>(st) / 2; }
const char* subtype_name(Subtype st);

struct SubtypeLedger {
    std::array<std::int64_t, kSubtypeCount> count{};

    std::int64_t& operator[](Subtype st) { return count[static_cast<int>(st)]; }
    std::int64_t operator[](Subtype st) const { return count[static_cast<int>(st)]; }

    std::int64_t x0_founder() const { return (*this)[Subtype::zero_founder]; }
    std::int64_t x0r() const { return (*this)[Subtype::zero_r]; }
    std::int64_t x1m() const { return (*this)[Subtype::one_m]; }
    std::int64_t x1r() const { return (*this)[Subtype::one_r]; }
    std::int64_t x2m() const { return (*this)[Subtype::two_m]; }
    std::int64_t x2r() const { return (*this)[Subtype::two_r]; }
    std::int64_t x3m() const { return (*this)[Subtype::three_m]; }
    std::int64_t x3r() const { return (*this)[Subtype::three_r]; }

    std::array<std::int64_t, 4> collapse() const;

    // Initial ledger for a state: type 0 as founders, types 1-3 as mutation-born.
    static SubtypeLedger from_state(const PopulationState& state);
    bool operator==(const SubtypeLedger&) const = default;
};

// Throws InvalidLedger when the ledger does not collapse to state.x.
void check_ledger(const SubtypeLedger& ledger, const PopulationState& state);

// Lineage-resolved channels. Replacement events are indexed
// (dying subtype) * 8 + (newborn subtype); diagonal entries change nothing
// and carry rate 0. Mutation events follow after the replacement block.
inline constexpr int kReplacementChannels = kSubtypeCount * kSubtypeCount;
inline constexpr int kMutationChannels = 8;
inline constexpr int kSubtypeChannelCount = kReplacementChannels + kMutationChannels;

struct SubtypeJump {
    Subtype from;
    Subtype to;
};

SubtypeJump subtype_jump(int channel);

struct SubtypeChannelRates {
    std::array<double, kSubtypeChannelCount> rate{};
    double total = 0.0;

    // Founder creation rates with the window held open:
    // M_i mutation-born, R_i recombination-born.
    double m1 = 0, m2 = 0, m3 = 0;
    double r0 = 0, r1 = 0, r2 = 0, r3 = 0;

    // Per-capita birth and death rates of each subtype (B and D), so that a
    // subtype of size X grows by one at rate founder + B*X and shrinks at D*X.
    std::array<double, kSubtypeCount> birth{};
    std::array<double, kSubtypeCount> death{};

    // Sum of the channels that move an individual from type i to type j != i.
    ChannelRates collapse() const;
};

SubtypeChannelRates subtype_channel_rates(const PopulationState& state,
                                          const SubtypeLedger& ledger, const Parameters& p);

// Hot-loop variant; no validation.
void subtype_channel_rates_into(const std::array<std::int64_t, 4>& x,
                                const SubtypeLedger& ledger, const Parameters& p,
                                SubtypeChannelRates& out) noexcept;

}  // namespace twolocus
