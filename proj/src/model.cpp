#include "twolocus/model.hpp"

#include <cmath>
#include <sstream>

#include "twolocus/errors.hpp"

namespace twolocus {

void check_parameters(const Parameters& p) {
    std::ostringstream why;
    if (p.n_individuals < 2) why << "N must be >= 2 (got " << p.n_individuals << "); ";
    if (!(p.mutation_rate >= 0.0 && p.mutation_rate < 1.0))
        why << "mu must lie in [0,1) (got " << p.mutation_rate << "); ";
    if (!(p.selection > 0.0 && p.selection <= 0.5))
        why << "s must lie in (0,1/2] (got " << p.selection << "); ";
    if (!(p.recombination_prob >= 0.0 && p.recombination_prob < 1.0))
        why << "r must lie in [0,1) (got " << p.recombination_prob << "); ";
    const std::string msg = why.str();
    if (!msg.empty()) throw DomainError("invalid parameters: " + msg.substr(0, msg.size() - 2));
}

std::vector<std::string> parameter_warnings(const Parameters& p) {
    std::vector<std::string> out;
    if (p.n_individuals % 2 != 0)
        out.push_back("N is odd; the chain is well defined but N counts chromosomes of N/2 organisms");
    if (p.mutation_rate == 0.0) out.push_back("mu = 0: no beneficial allele can ever arise from type 0");
    return out;
}

PopulationState PopulationState::all_of_type(int type, std::int64_t n) {
    PopulationState st;
    st.x[static_cast<std::size_t>(type)] = n;
    return st;
}

void check_state(const PopulationState& state, const Parameters& p) {
    for (auto c : state.x)
        if (c < 0) throw DomainError("population counts must be nonnegative");
    if (state.total() != p.n_individuals)
        throw DomainError("population counts sum to " + std::to_string(state.total()) +
                          ", expected N = " + std::to_string(p.n_individuals));
    if (!(state.time >= 0.0)) throw DomainError("state time must be nonnegative");
}

SimplexPoint fractions(const PopulationState& state) {
    const double inv = 1.0 / static_cast<double>(state.total());
    return {static_cast<double>(state.x[1]) * inv, static_cast<double>(state.x[2]) * inv,
            static_cast<double>(state.x[3]) * inv};
}

const char* channel_name(Channel c) {
    static constexpr const char* names[kChannelCount] = {
        "birth1",      "birth2",      "birth3",        "one_to_zero",
        "one_to_two",  "one_to_three", "two_to_zero",  "two_to_one",
        "two_to_three", "three_to_zero", "three_to_one", "three_to_two"};
    return names[static_cast<int>(c)];
}

std::array<double, 4> replacement_probabilities(const SimplexPoint& xi, double r) {
    const double x0 = xi.xi0(), x1 = xi.xi1, x2 = xi.xi2, x3 = xi.xi3;
    const double q = 1.0 - r;
    return {q * x0 + r * (x0 + x1) * (x0 + x2), q * x1 + r * (x1 + x3) * (x0 + x1),
            q * x2 + r * (x0 + x2) * (x2 + x3), q * x3 + r * (x1 + x3) * (x2 + x3)};
}

void channel_rates_into(const std::array<std::int64_t, 4>& x, const Parameters& p,
                        ChannelRates& out) noexcept {
    const double n0 = static_cast<double>(x[0]);
    const double n1 = static_cast<double>(x[1]);
    const double n2 = static_cast<double>(x[2]);
    const double n3 = static_cast<double>(x[3]);
    const double inv = 1.0 / p.n();
    const double x0 = n0 * inv, x1 = n1 * inv, x2 = n2 * inv, x3 = n3 * inv;
    const double r = p.recombination_prob, q = 1.0 - r;
    const double s = p.selection, mu = p.mutation_rate;

    const double f0 = q * x0 + r * (x0 + x1) * (x0 + x2);
    const double f1 = q * x1 + r * (x1 + x3) * (x0 + x1);
    const double f2 = q * x2 + r * (x0 + x2) * (x2 + x3);
    const double f3 = q * x3 + r * (x1 + x3) * (x2 + x3);

    // Total death rate of each type.
    const double d0 = n0;
    const double d1 = (1.0 - s) * n1;
    const double d2 = (1.0 - s) * n2;
    const double d3 = (1.0 - 2.0 * s) * n3;

    auto& k = out.rate;
    k[0] = d0 * f1 + mu * n0;
    k[1] = d0 * f2 + mu * n0;
    k[2] = d0 * f3;
    k[3] = d1 * f0;
    k[4] = d1 * f2;
    k[5] = d1 * f3 + mu * n1;
    k[6] = d2 * f0;
    k[7] = d2 * f1;
    k[8] = d2 * f3 + mu * n2;
    k[9] = d3 * f0;
    k[10] = d3 * f1;
    k[11] = d3 * f2;

    double total = 0.0;
    for (double v : k) total += v;
    out.total = total;
}

ChannelRates channel_rates(const PopulationState& state, const Parameters& p) {
    check_state(state, p);
    ChannelRates out;
    channel_rates_into(state.x, p, out);
    return out;
}

Vec3 drift(const SimplexPoint& xi, const Parameters& p) {
    const double x0 = xi.xi0(), x1 = xi.xi1, x2 = xi.xi2, x3 = xi.xi3;
    const double s = p.selection, r = p.recombination_prob, mu = p.mutation_rate;
    const double lag = 1.0 - x1 - x2 - 2.0 * x3;
    const double gamma = (x0 * x3 - x1 * x2) * (1.0 - s * x1 - s * x2 - 2.0 * s * x3);
    return {s * lag * x1 + r * gamma + mu * (x0 - x1), s * lag * x2 + r * gamma + mu * (x0 - x2),
            s * (lag + 1.0) * x3 - r * gamma + mu * (x1 + x2)};
}

Vec3 selection_field(const SimplexPoint& x, double s) {
    const double lag = 1.0 - x.xi1 - x.xi2 - 2.0 * x.xi3;
    return {s * lag * x.xi1, s * lag * x.xi2, s * (lag + 1.0) * x.xi3};
}

double noise_bound(const Parameters& p) { return 48.0 / p.n(); }

double noise_exact(const PopulationState& state, const Parameters& p) {
    const ChannelRates k = channel_rates(state, p);
    const double unit = 1.0 / (p.n() * p.n());
    double alpha = 0.0;
    for (int c = 0; c < kChannelCount; ++c) {
        const auto [from, to] = kChannelJumps[static_cast<std::size_t>(c)];
        // Moving into or out of type 0 changes one coordinate; any other jump changes two.
        const double norm2 = (from == 0 || to == 0) ? unit : 2.0 * unit;
        alpha += norm2 * k.rate[static_cast<std::size_t>(c)];
    }
    return alpha;
}

GrowthRates growth_rates(const PopulationState& state, const Parameters& p) {
    check_state(state, p);
    const SimplexPoint xi = fractions(state);
    const double x0 = xi.xi0(), x1 = xi.xi1, x2 = xi.xi2, x3 = xi.xi3;
    const double s = p.selection, r = p.recombination_prob, mu = p.mutation_rate;
    const double fit = 1.0 - s * x1 - s * x2 - 2.0 * s * x3;
    const double lag = 1.0 - x1 - x2 - 2.0 * x3;
    return {
        -s * (x1 + x2 + 2.0 * x3) - r * x3 * fit - 2.0 * mu,
        s * lag - r * x2 * fit - mu,
        s * lag - r * x1 * fit - mu,
        s * (lag + 1.0) - r * x0 * fit,
    };
}

// ---------------------------------------------------------------------------

const char* subtype_name(Subtype st) {
    static constexpr const char* names[kSubtypeCount] = {"0f", "0r", "1m", "1r",
                                                         "2m", "2r", "3m", "3r"};
    return names[static_cast<int>(st)];
}

std::array<std::int64_t, 4> SubtypeLedger::collapse() const {
    return {count[0] + count[1], count[2] + count[3], count[4] + count[5], count[6] + count[7]};
}

SubtypeLedger SubtypeLedger::from_state(const PopulationState& state) {
    SubtypeLedger l;
    l[Subtype::zero_founder] = state.x[0];
    l[Subtype::one_m] = state.x[1];
    l[Subtype::two_m] = state.x[2];
    l[Subtype::three_m] = state.x[3];
    return l;
}

void check_ledger(const SubtypeLedger& ledger, const PopulationState& state) {
    for (auto c : ledger.count)
        if (c < 0) throw InvalidLedger("subtype counts must be nonnegative");
    if (ledger.collapse() != state.x) throw InvalidLedger("subtype ledger does not match population counts");
}

namespace {

constexpr std::array<SubtypeJump, kMutationChannels> kMutationJumps{{
    {Subtype::zero_founder, Subtype::one_m},
    {Subtype::zero_founder, Subtype::two_m},
    {Subtype::zero_r, Subtype::one_m},
    {Subtype::zero_r, Subtype::two_m},
    {Subtype::one_m, Subtype::three_m},
    {Subtype::one_r, Subtype::three_m},
    {Subtype::two_m, Subtype::three_m},
    {Subtype::two_r, Subtype::three_m},
}};

struct SubtypeTerms {
    std::array<double, kSubtypeCount> death_total;  // death rate summed over the subtype
    std::array<double, kSubtypeCount> newborn;      // P(newborn belongs to the subtype)
    std::array<double, 4> inherit;                  // per-capita inheritance factor by type
    double founder_03;                              // r xi0 xi3: 1r / 2r founder probability
    double founder_12;                              // r xi1 xi2: 3r / 0r founder probability
};

SubtypeTerms subtype_terms(const std::array<std::int64_t, 4>& x, const SubtypeLedger& l,
                           const Parameters& p) {
    const double inv = 1.0 / p.n();
    const double x0 = static_cast<double>(x[0]) * inv, x1 = static_cast<double>(x[1]) * inv;
    const double x2 = static_cast<double>(x[2]) * inv, x3 = static_cast<double>(x[3]) * inv;
    const double r = p.recombination_prob, s = p.selection;
    const std::array<double, 4> w{1.0, 1.0 - s, 1.0 - s, 1.0 - 2.0 * s};

    SubtypeTerms t{};
    // A newborn descends from a given type-i individual with probability
    // (1 - r * xi_partner) / N, where partner is the type whose allele would
    // turn the combination into a founder event.
    t.inherit = {1.0 - r * x3, 1.0 - r * x2, 1.0 - r * x1, 1.0 - r * x0};
    t.founder_03 = r * x0 * x3;
    t.founder_12 = r * x1 * x2;
    for (int k = 0; k < kSubtypeCount; ++k) {
        const int type = k / 2;
        const double c = static_cast<double>(l.count[static_cast<std::size_t>(k)]);
        t.death_total[static_cast<std::size_t>(k)] = w[static_cast<std::size_t>(type)] * c;
        t.newborn[static_cast<std::size_t>(k)] = c * inv * t.inherit[static_cast<std::size_t>(type)];
    }
    t.newborn[static_cast<int>(Subtype::zero_r)] += t.founder_12;
    t.newborn[static_cast<int>(Subtype::one_r)] += t.founder_03;
    t.newborn[static_cast<int>(Subtype::two_r)] += t.founder_03;
    t.newborn[static_cast<int>(Subtype::three_r)] += t.founder_12;
    return t;
}

void fill_subtype_rates(const SubtypeTerms& t, const SubtypeLedger& l, double mu,
                        SubtypeChannelRates& out) noexcept {
    double total = 0.0;
    for (int d = 0; d < kSubtypeCount; ++d) {
        const double dt = t.death_total[static_cast<std::size_t>(d)];
        for (int n = 0; n < kSubtypeCount; ++n) {
            const double v = (d == n) ? 0.0 : dt * t.newborn[static_cast<std::size_t>(n)];
            out.rate[static_cast<std::size_t>(d * kSubtypeCount + n)] = v;
            total += v;
        }
    }
    for (int m = 0; m < kMutationChannels; ++m) {
        const double v = mu * static_cast<double>(l[kMutationJumps[static_cast<std::size_t>(m)].from]);
        out.rate[static_cast<std::size_t>(kReplacementChannels + m)] = v;
        total += v;
    }
    out.total = total;
}

}  // namespace

SubtypeJump subtype_jump(int channel) {
    if (channel < kReplacementChannels)
        return {static_cast<Subtype>(channel / kSubtypeCount), static_cast<Subtype>(channel % kSubtypeCount)};
    return kMutationJumps[static_cast<std::size_t>(channel - kReplacementChannels)];
}

void subtype_channel_rates_into(const std::array<std::int64_t, 4>& x, const SubtypeLedger& ledger,
                                const Parameters& p, SubtypeChannelRates& out) noexcept {
    fill_subtype_rates(subtype_terms(x, ledger, p), ledger, p.mutation_rate, out);
}

SubtypeChannelRates subtype_channel_rates(const PopulationState& state, const SubtypeLedger& ledger,
                                          const Parameters& p) {
    check_state(state, p);
    check_ledger(ledger, state);
    const SubtypeTerms t = subtype_terms(state.x, ledger, p);
    SubtypeChannelRates out;
    fill_subtype_rates(t, ledger, p.mutation_rate, out);

    const double mu = p.mutation_rate, n = p.n();
    const double x0 = static_cast<double>(state.x[0]), x1 = static_cast<double>(state.x[1]);
    const double x2 = static_cast<double>(state.x[2]);
    double deaths = 0.0;
    for (double d : t.death_total) deaths += d;

    out.m1 = mu * x0;
    out.m2 = mu * x0;
    out.m3 = mu * (x1 + x2);
    auto founder_rate = [&](Subtype st, double prob) {
        return (deaths - t.death_total[static_cast<std::size_t>(st)]) * prob;
    };
    out.r0 = founder_rate(Subtype::zero_r, t.founder_12);
    out.r1 = founder_rate(Subtype::one_r, t.founder_03);
    out.r2 = founder_rate(Subtype::two_r, t.founder_03);
    out.r3 = founder_rate(Subtype::three_r, t.founder_12);

    const std::array<double, 4> w{1.0, 1.0 - p.selection, 1.0 - p.selection, 1.0 - 2.0 * p.selection};
    const std::array<double, 4> mut_out{2.0 * mu, mu, mu, 0.0};
    for (int k = 0; k < kSubtypeCount; ++k) {
        const auto ku = static_cast<std::size_t>(k);
        const auto type = static_cast<std::size_t>(k / 2);
        const double frac = static_cast<double>(ledger.count[ku]) / n;
        double founder = 0.0;
        if (k == static_cast<int>(Subtype::zero_r) || k == static_cast<int>(Subtype::three_r))
            founder = t.founder_12;
        if (k == static_cast<int>(Subtype::one_r) || k == static_cast<int>(Subtype::two_r))
            founder = t.founder_03;
        out.birth[ku] = (deaths / n - w[type] * frac) * t.inherit[type];
        out.death[ku] = w[type] * (1.0 - t.inherit[type] * frac - founder) + mut_out[type];
    }
    return out;
}

ChannelRates SubtypeChannelRates::collapse() const {
    ChannelRates agg;
    for (int c = 0; c < kSubtypeChannelCount; ++c) {
        const auto [from, to] = subtype_jump(c);
        const int a = type_of(from), b = type_of(to);
        if (a == b) continue;
        int idx = 0;
        for (; idx < kChannelCount; ++idx)
            if (kChannelJumps[static_cast<std::size_t>(idx)].from == a &&
                kChannelJumps[static_cast<std::size_t>(idx)].to == b)
                break;
        agg.rate[static_cast<std::size_t>(idx)] += rate[static_cast<std::size_t>(c)];
    }
    for (double v : agg.rate) agg.total += v;
    return agg;
}

}  // namespace twolocus
