#pragma once

// Independent reference computations used by the tests. Nothing here calls
// into the library's rate code.

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <utility>
#include <vector>

namespace oracle {

// Alleles of a type: bit 0 = A at locus a, bit 1 = B at locus b.
inline int allele_a(int type) { return (type == 1 || type == 3) ? 1 : 0; }
inline int allele_b(int type) { return (type == 2 || type == 3) ? 1 : 0; }
inline int type_from(int a, int b) { return a + 2 * b; }

inline double death_rate(int type, double s) {
    const int k = allele_a(type) + allele_b(type);
    return 1.0 - k * s;
}

// Rate of each ordered (from type, to type) move, built by looping over
// individuals: every individual dies at its own rate and is replaced by a
// clone of a uniformly chosen parent (prob 1-r) or by a recombinant of two
// independently chosen parents (prob r); every a and b allele mutates at mu.
inline std::array<std::array<double, 4>, 4> individual_rates(const std::vector<int>& pop, double mu, double s,
                                                             double r) {
    std::array<std::array<double, 4>, 4> rate{};
    const double n = static_cast<double>(pop.size());
    for (int dying : pop) {
        const double d = death_rate(dying, s);
        for (int j : pop) {
            rate[dying][j] += d * (1.0 - r) / n;
            for (int k : pop) rate[dying][type_from(allele_a(j), allele_b(k))] += d * r / (n * n);
        }
        if (!allele_a(dying)) rate[dying][type_from(1, allele_b(dying))] += mu;
        if (!allele_b(dying)) rate[dying][type_from(allele_a(dying), 1)] += mu;
    }
    for (int t = 0; t < 4; ++t) rate[t][t] = 0.0;
    return rate;
}

// Same dynamics as individual_rates but summed over identical individuals,
// so it stays cheap at large N.
inline std::array<std::array<double, 4>, 4> type_rates(const std::array<std::int64_t, 4>& x, double mu, double s,
                                                       double r) {
    std::array<std::array<double, 4>, 4> rate{};
    const double n = static_cast<double>(x[0] + x[1] + x[2] + x[3]);
    std::array<double, 4> newborn{};
    for (int j = 0; j < 4; ++j) {
        newborn[j] += (1.0 - r) * static_cast<double>(x[j]) / n;
        for (int k = 0; k < 4; ++k)
            newborn[type_from(allele_a(j), allele_b(k))] +=
                r * static_cast<double>(x[j]) * static_cast<double>(x[k]) / (n * n);
    }
    for (int dying = 0; dying < 4; ++dying) {
        const double deaths = static_cast<double>(x[dying]) * death_rate(dying, s);
        for (int to = 0; to < 4; ++to) rate[dying][to] += deaths * newborn[to];
        if (!allele_a(dying)) rate[dying][type_from(1, allele_b(dying))] += mu * static_cast<double>(x[dying]);
        if (!allele_b(dying)) rate[dying][type_from(allele_a(dying), 1)] += mu * static_cast<double>(x[dying]);
        rate[dying][dying] = 0.0;
    }
    return rate;
}

// Subtypes 0f 0r 1m 1r 2m 2r 3m 3r, index = 2*type + (recombination-born ? 1 : 0)
// except 0f/0r where 0 = founder population and 1 = recombination-born.
// A recombinant inherits the label of the parent whose type equals its own,
// preferring the parent that gave the a/A allele; if neither parent has its
// type it founds a new r-lineage. Mutants found m-lineages.
struct SubtypeRates {
    std::map<std::pair<int, int>, double> replacement;  // (dying sub, newborn sub)
    std::map<std::pair<int, int>, double> mutation;
};

inline SubtypeRates individual_subtype_rates(const std::vector<int>& subs, double mu, double s, double r) {
    SubtypeRates out;
    const double n = static_cast<double>(subs.size());
    for (int dying : subs) {
        const double d = death_rate(dying / 2, s);
        for (int j : subs) {
            if (j != dying) out.replacement[{dying, j}] += d * (1.0 - r) / n;
            for (int k : subs) {
                const int tj = j / 2, tk = k / 2;
                const int t = type_from(allele_a(tj), allele_b(tk));
                int child;
                if (tj == t)
                    child = j;
                else if (tk == t)
                    child = k;
                else
                    child = 2 * t + 1;
                if (child != dying) out.replacement[{dying, child}] += d * r / (n * n);
            }
        }
        const int t = dying / 2;
        if (!allele_a(t)) out.mutation[{dying, 2 * type_from(1, allele_b(t))}] += mu;
        if (!allele_b(t)) out.mutation[{dying, 2 * type_from(allele_a(t), 1)}] += mu;
    }
    return out;
}

// Every composition of n into k nonnegative parts.
inline void compositions(int n, int k, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
    if (k == 1) {
        cur.push_back(n);
        out.push_back(cur);
        cur.pop_back();
        return;
    }
    for (int i = 0; i <= n; ++i) {
        cur.push_back(i);
        compositions(n - i, k - 1, cur, out);
        cur.pop_back();
    }
}

inline std::vector<std::vector<int>> compositions(int n, int k) {
    std::vector<std::vector<int>> out;
    std::vector<int> cur;
    compositions(n, k, cur, out);
    return out;
}

// Dense Gaussian elimination with partial pivoting.
inline std::vector<double> solve(std::vector<std::vector<double>> a, std::vector<double> b) {
    const std::size_t n = b.size();
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        for (std::size_t i = c + 1; i < n; ++i)
            if (std::abs(a[i][c]) > std::abs(a[piv][c])) piv = i;
        std::swap(a[c], a[piv]);
        std::swap(b[c], b[piv]);
        for (std::size_t i = c + 1; i < n; ++i) {
            const double f = a[i][c] / a[c][c];
            for (std::size_t j = c; j < n; ++j) a[i][j] -= f * a[c][j];
            b[i] -= f * b[c];
        }
    }
    std::vector<double> x(n);
    for (std::size_t i = n; i-- > 0;) {
        double acc = b[i];
        for (std::size_t j = i + 1; j < n; ++j) acc -= a[i][j] * x[j];
        x[i] = acc / a[i][i];
    }
    return x;
}

// Hitting probability of 0 before L for a walk stepping down with
// probability q/(1+q), from first-step analysis solved as a linear system.
inline double ruin_by_linear_solve(int L, int start, double q) {
    const double pd = q / (1.0 + q), pu = 1.0 - pd;
    const int m = L - 1;  // unknowns h_1..h_{L-1}
    std::vector<std::vector<double>> a(static_cast<std::size_t>(m), std::vector<double>(static_cast<std::size_t>(m), 0.0));
    std::vector<double> b(static_cast<std::size_t>(m), 0.0);
    for (int i = 1; i <= m; ++i) {
        const auto row = static_cast<std::size_t>(i - 1);
        a[row][row] = 1.0;
        if (i - 1 >= 1) a[row][row - 1] = -pd;
        else b[row] += pd;
        if (i + 1 <= m) a[row][row + 1] = -pu;
    }
    // Tridiagonal: Thomas algorithm.
    std::vector<double> c(static_cast<std::size_t>(m)), d(static_cast<std::size_t>(m));
    for (std::size_t i = 0; i < static_cast<std::size_t>(m); ++i) {
        const double lower = i > 0 ? a[i][i - 1] : 0.0;
        const double upper = i + 1 < static_cast<std::size_t>(m) ? a[i][i + 1] : 0.0;
        const double denom = a[i][i] - (i > 0 ? lower * c[i - 1] : 0.0);
        c[i] = upper / denom;
        d[i] = (b[i] - (i > 0 ? lower * d[i - 1] : 0.0)) / denom;
    }
    std::vector<double> h(static_cast<std::size_t>(m));
    for (std::size_t i = static_cast<std::size_t>(m); i-- > 0;)
        h[i] = d[i] - (i + 1 < static_cast<std::size_t>(m) ? c[i] * h[i + 1] : 0.0);
    if (start == 0) return 1.0;
    if (start == L) return 0.0;
    return h[static_cast<std::size_t>(start - 1)];
}

inline bool rel_close(double a, double b, double tol) {
    if (a == b) return true;
    return std::abs(a - b) <= tol * std::max(std::abs(a), std::abs(b));
}

}  // namespace oracle
