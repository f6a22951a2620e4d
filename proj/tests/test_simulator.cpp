#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <map>

#include "oracles.hpp"
#include "twolocus/errors.hpp"
#include "twolocus/rng.hpp"
#include "twolocus/simulator.hpp"

using namespace twolocus;

namespace {

// Expected time to fixation of type 3 from every state of a small population,
// from the generator built by the individual-based oracle.
std::map<std::vector<int>, double> exact_fixation_times(int n, double mu, double s, double r) {
    const auto states = oracle::compositions(n, 4);
    std::vector<std::vector<int>> transient;
    std::map<std::vector<int>, std::size_t> index;
    for (const auto& st : states)
        if (st[3] != n) {
            index[st] = transient.size();
            transient.push_back(st);
        }
    const std::size_t m = transient.size();
    std::vector<std::vector<double>> a(m, std::vector<double>(m, 0.0));
    std::vector<double> b(m, 1.0);
    for (std::size_t i = 0; i < m; ++i) {
        std::vector<int> pop;
        for (int t = 0; t < 4; ++t)
            for (int k = 0; k < transient[i][static_cast<std::size_t>(t)]; ++k) pop.push_back(t);
        const auto rate = oracle::individual_rates(pop, mu, s, r);
        for (int from = 0; from < 4; ++from)
            for (int to = 0; to < 4; ++to) {
                const double q = rate[static_cast<std::size_t>(from)][static_cast<std::size_t>(to)];
                if (q == 0.0) continue;
                a[i][i] += q;
                std::vector<int> next = transient[i];
                --next[static_cast<std::size_t>(from)];
                ++next[static_cast<std::size_t>(to)];
                if (next[3] != n) a[i][index.at(next)] -= q;
            }
    }
    const auto t = oracle::solve(a, b);
    std::map<std::vector<int>, double> out;
    for (std::size_t i = 0; i < m; ++i) out[transient[i]] = t[i];
    return out;
}

}  // namespace

TEST_CASE("same seed gives the same run") {
    SimConfig c;
    c.params = {500, 0.002, 0.1, 0.05};
    c.seed = 42;
    c.sample_interval = 1.0;
    const ReplicateSummary a = run(c);
    const ReplicateSummary b = run(c);
    REQUIRE(a.termination == Termination::fixed);
    CHECK(*a.fixation_time == *b.fixation_time);
    CHECK(a.event_count == b.event_count);
    REQUIRE(a.samples.size() == b.samples.size());
    for (std::size_t i = 0; i < a.samples.size(); ++i) CHECK(a.samples[i].state == b.samples[i].state);
    c.seed = 43;
    CHECK(run(c).event_count != a.event_count);
}

TEST_CASE("already fixed initial state stops at once") {
    SimConfig c;
    c.params = {10, 0.01, 0.1, 0.1};
    c.initial_state = PopulationState::all_of_type(3, 10);
    const ReplicateSummary s = run(c);
    CHECK(s.termination == Termination::fixed);
    CHECK(*s.fixation_time == 0.0);
    CHECK(s.event_count == 0);
}

TEST_CASE("without mutation the all-type-0 state is absorbing") {
    SimConfig c;
    c.params = {10, 0.0, 0.1, 0.1};
    const ReplicateSummary s = run(c);
    CHECK(s.termination == Termination::absorbed_unfixable);
    CHECK_FALSE(s.fixation_time.has_value());
    CHECK(s.event_count == 0);
}

TEST_CASE("caps on time and events") {
    SimConfig c;
    c.params = {1000, 0.001, 0.1, 0.0};
    c.max_time = 5.0;
    ReplicateSummary s = run(c);
    CHECK(s.termination == Termination::time_cap);
    CHECK(s.final_state.time == 5.0);
    c.max_time = std::numeric_limits<double>::infinity();
    c.max_events = 100;
    s = run(c);
    CHECK(s.termination == Termination::event_cap);
    CHECK(s.event_count == 100);
}

TEST_CASE("config errors") {
    SimConfig c;
    c.params = {10, 0.01, 0.1, 0.1};
    c.sample_interval = 0.0;
    CHECK_THROWS_AS(run(c), ConfigError);
    c.sample_interval.reset();
    c.initial_state = PopulationState{{5, 0, 0, 0}, 0.0};
    CHECK_THROWS_AS(run(c), DomainError);
    c.initial_state.reset();
    CHECK_THROWS_AS(run_with_lineage(c), ConfigError);
    c.track_lineage = true;
    SubtypeLedger bad;
    bad[Subtype::one_m] = 10;
    c.initial_ledger = bad;
    CHECK_THROWS_AS(run(c), InvalidLedger);
}

TEST_CASE("sampling grid holds the right-continuous path") {
    SimConfig c;
    c.params = {200, 0.005, 0.2, 0.1};
    c.seed = 9;
    c.sample_interval = 0.5;
    c.sample_times = {0.25, 3.3};
    const ReplicateSummary s = run(c);
    REQUIRE(s.samples.size() > 3);
    CHECK(s.samples.front().time == 0.0);
    CHECK(s.samples.front().state == PopulationState::all_of_type(0, 200));
    CHECK(s.samples[1].time == 0.25);
    CHECK(s.samples[2].time == 0.5);
    for (std::size_t i = 1; i < s.samples.size(); ++i) CHECK(s.samples[i].time > s.samples[i - 1].time);
    CHECK(s.samples.back().time == *s.fixation_time);
    CHECK(s.samples.back().state.x[3] == 200);
    CHECK_THROWS_AS(sample_at(s, -1.0), RangeError);
    CHECK_THROWS_AS(sample_at(s, *s.fixation_time + 1.0), RangeError);
    CHECK(sample_at(s, 0.7).time == 0.5);
    const std::vector<double> ts{0.0, 1.0};
    const auto pts = sample_trajectory(s, ts);
    CHECK(pts.size() == 2);
    CHECK(pts[0] == SimplexPoint{0, 0, 0});
}

TEST_CASE("lineage runs keep the ledger consistent with the counts") {
    SimConfig c;
    c.params = {300, 0.003, 0.15, 0.2};
    c.seed = 77;
    c.sample_interval = 1.0;
    c.track_lineage = true;
    const ReplicateSummary s = run(c);
    REQUIRE(s.final_ledger.has_value());
    CHECK(s.final_ledger->collapse() == s.final_state.x);
    for (const auto& smp : s.samples) {
        REQUIRE(smp.ledger.has_value());
        CHECK(smp.ledger->collapse() == smp.state.x);
    }
    // With r > 0 a sweep of this length produces recombinant lineages.
    bool saw_r = false;
    for (const auto& smp : s.samples) saw_r = saw_r || smp.ledger->x3r() > 0 || smp.ledger->x1r() > 0;
    CHECK(saw_r);
}

TEST_CASE("without recombination no r-lineages appear") {
    SimConfig c;
    c.params = {300, 0.003, 0.15, 0.0};
    c.seed = 5;
    c.sample_interval = 1.0;
    c.track_lineage = true;
    const ReplicateSummary s = run(c);
    for (const auto& smp : s.samples) {
        CHECK(smp.ledger->x0r() == 0);
        CHECK(smp.ledger->x1r() == 0);
        CHECK(smp.ledger->x2r() == 0);
        CHECK(smp.ledger->x3r() == 0);
    }
}

TEST_CASE("mean fixation time for N = 2 and N = 3 matches the exact chain") {
    struct Case {
        int n;
        double mu, s, r;
        bool lineage;
    };
    for (const Case& cs : {Case{2, 0.1, 0.2, 0.3, false}, Case{2, 0.1, 0.2, 0.3, true}, Case{3, 0.05, 0.3, 0.6, false},
                           Case{3, 0.05, 0.3, 0.6, true}}) {
        const auto exact = exact_fixation_times(cs.n, cs.mu, cs.s, cs.r);
        const double want = exact.at({cs.n, 0, 0, 0});
        const int trials = 20000;
        double sum = 0.0, sum2 = 0.0;
        for (int k = 0; k < trials; ++k) {
            SimConfig c;
            c.params = {cs.n, cs.mu, cs.s, cs.r};
            c.seed = stream_seed(1234, static_cast<std::uint64_t>(k));
            c.track_lineage = cs.lineage;
            const double t = *run(c).fixation_time;
            sum += t;
            sum2 += t * t;
        }
        const double mean = sum / trials;
        const double se = std::sqrt((sum2 / trials - mean * mean) / trials);
        INFO("N=" << cs.n << " lineage=" << cs.lineage << " exact " << want << " mc " << mean << " se " << se);
        CHECK(std::abs(mean - want) < 4.0 * se);
    }
}

TEST_CASE("stream seeds depend only on master seed and index") {
    CHECK(stream_seed(1, 0) == stream_seed(1, 0));
    CHECK(stream_seed(1, 0) != stream_seed(1, 1));
    CHECK(stream_seed(1, 0) != stream_seed(2, 0));
    Xoshiro256pp g(5);
    for (int i = 0; i < 1000; ++i) {
        const double u = g.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        CHECK(g.exponential() >= 0.0);
    }
}

TEST_CASE("absorption probabilities for N = 2 without mutation") {
    const double s = 0.2, r = 0.5;
    for (const std::vector<int>& start : {std::vector<int>{0, 1, 0, 1}, std::vector<int>{0, 1, 1, 0}}) {
        // Exact absorption probabilities from the embedded jump chain.
        const auto states = oracle::compositions(2, 4);
        std::vector<std::vector<int>> transient;
        std::map<std::vector<int>, std::size_t> index;
        for (const auto& st : states)
            if (*std::max_element(st.begin(), st.end()) != 2) {
                index[st] = transient.size();
                transient.push_back(st);
            }
        const std::size_t m = transient.size();
        std::array<double, 4> exact{};
        for (int v = 0; v < 4; ++v) {
            std::vector<std::vector<double>> a(m, std::vector<double>(m, 0.0));
            std::vector<double> b(m, 0.0);
            for (std::size_t i = 0; i < m; ++i) {
                std::vector<int> pop;
                for (int t = 0; t < 4; ++t)
                    for (int k = 0; k < transient[i][static_cast<std::size_t>(t)]; ++k) pop.push_back(t);
                const auto rate = oracle::individual_rates(pop, 0.0, s, r);
                for (int from = 0; from < 4; ++from)
                    for (int to = 0; to < 4; ++to) {
                        const double q = rate[static_cast<std::size_t>(from)][static_cast<std::size_t>(to)];
                        if (q == 0.0) continue;
                        a[i][i] += q;
                        std::vector<int> next = transient[i];
                        --next[static_cast<std::size_t>(from)];
                        ++next[static_cast<std::size_t>(to)];
                        const auto it = index.find(next);
                        if (it != index.end())
                            a[i][it->second] -= q;
                        else if (next[static_cast<std::size_t>(v)] == 2)
                            b[i] += q;
                    }
            }
            exact[static_cast<std::size_t>(v)] = oracle::solve(a, b)[index.at(start)];
        }
        CHECK(exact[0] + exact[1] + exact[2] + exact[3] == doctest::Approx(1.0).epsilon(1e-12));

        const int trials = 40000;
        std::array<int, 4> hits{};
        for (int k = 0; k < trials; ++k) {
            SimConfig c;
            c.params = {2, 0.0, s, r};
            c.seed = stream_seed(77, static_cast<std::uint64_t>(k));
            c.initial_state = PopulationState{{start[0], start[1], start[2], start[3]}, 0.0};
            const ReplicateSummary out = run(c);
            REQUIRE(out.termination != Termination::time_cap);
            for (int v = 0; v < 4; ++v)
                if (out.final_state.x[static_cast<std::size_t>(v)] == 2) ++hits[static_cast<std::size_t>(v)];
        }
        for (int v = 0; v < 4; ++v) {
            const double p = exact[static_cast<std::size_t>(v)];
            const double est = static_cast<double>(hits[static_cast<std::size_t>(v)]) / trials;
            const double se = std::sqrt(std::max(p * (1 - p), 1e-12) / trials);
            INFO("start " << start[1] << start[2] << " vertex " << v << " exact " << p << " mc " << est);
            CHECK(std::abs(est - p) <= 3 * se + 1e-12);
        }
    }
}

TEST_CASE("without mutation every type-3 individual descends from a recombinant") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        SimConfig c;
        c.params = {60, 0.0, 0.1, 0.3};
        c.seed = seed;
        c.sample_interval = 0.05;
        c.track_lineage = true;
        c.initial_state = PopulationState{{0, 30, 30, 0}, 0.0};
        const ReplicateSummary out = run(c);
        for (const auto& smp : out.samples) CHECK(smp.ledger->x3m() == 0);
        if (out.termination == Termination::fixed) CHECK(out.final_ledger->x3r() == 60);
    }
}
