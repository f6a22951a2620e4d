#include "twolocus/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "twolocus/errors.hpp"
#include "twolocus/rng.hpp"

namespace twolocus {

const char* termination_name(Termination t) {
    switch (t) {
        case Termination::fixed: return "fixed";
        case Termination::time_cap: return "time_cap";
        case Termination::event_cap: return "event_cap";
        case Termination::absorbed_unfixable: return "absorbed_unfixable";
    }
    return "unknown";
}

void check_config(const SimConfig& config) {
    check_parameters(config.params);
    if (!(config.max_time > 0.0)) throw ConfigError("max_time must be positive");
    if (config.sample_interval && !(*config.sample_interval > 0.0 && std::isfinite(*config.sample_interval)))
        throw ConfigError("sample_interval must be positive and finite");
    for (double t : config.sample_times)
        if (!std::isfinite(t) || t < 0.0) throw ConfigError("sample times must be finite and nonnegative");
    if (config.initial_state) {
        check_state(*config.initial_state, config.params);
        if (config.initial_state->time >= config.max_time)
            throw ConfigError("initial time must precede max_time");
    }
    if (config.initial_ledger) {
        if (!config.track_lineage) throw ConfigError("initial_ledger given without track_lineage");
        const PopulationState st = config.initial_state.value_or(
            PopulationState::all_of_type(0, config.params.n_individuals));
        check_ledger(*config.initial_ledger, st);
    }
}

namespace {

// Merged stream of sampling instants: a regular grid k*dt and a sorted list.
class SampleClock {
  public:
    SampleClock(const SimConfig& config, double start) : dt_(config.sample_interval.value_or(0.0)) {
        extra_ = config.sample_times;
        std::sort(extra_.begin(), extra_.end());
        extra_.erase(std::unique(extra_.begin(), extra_.end()), extra_.end());
        extra_.erase(extra_.begin(), std::lower_bound(extra_.begin(), extra_.end(), start));
        if (dt_ > 0.0) k_ = static_cast<std::uint64_t>(std::ceil(start / dt_));
    }

    double next() const {
        double t = std::numeric_limits<double>::infinity();
        if (dt_ > 0.0) t = static_cast<double>(k_) * dt_;
        if (pos_ < extra_.size()) t = std::min(t, extra_[pos_]);
        return t;
    }

    void advance() {
        const double t = next();
        if (dt_ > 0.0 && static_cast<double>(k_) * dt_ <= t) ++k_;
        while (pos_ < extra_.size() && extra_[pos_] <= t) ++pos_;
    }

    bool active() const { return dt_ > 0.0 || pos_ < extra_.size(); }

  private:
    double dt_;
    std::uint64_t k_ = 0;
    std::vector<double> extra_;
    std::size_t pos_ = 0;
};

template <std::size_t K>
int pick_channel(const std::array<double, K>& rate, double target) noexcept {
    double acc = 0.0;
    int last_positive = -1;
    for (std::size_t c = 0; c < K; ++c) {
        acc += rate[c];
        if (rate[c] > 0.0) {
            last_positive = static_cast<int>(c);
            if (target < acc) return last_positive;
        }
    }
    return last_positive;  // target fell into the rounding gap at the top
}

struct AggregateEngine {
    static constexpr bool kLineage = false;
    ChannelRates k;

    double update(const std::array<std::int64_t, 4>& x, const SubtypeLedger&, const Parameters& p) noexcept {
        channel_rates_into(x, p, k);
        return k.total;
    }
    void apply(double target, std::array<std::int64_t, 4>& x, SubtypeLedger&) noexcept {
        const int c = pick_channel(k.rate, target);
        const auto [from, to] = kChannelJumps[static_cast<std::size_t>(c)];
        --x[static_cast<std::size_t>(from)];
        ++x[static_cast<std::size_t>(to)];
    }
};

struct LineageEngine {
    static constexpr bool kLineage = true;
    SubtypeChannelRates k;

    double update(const std::array<std::int64_t, 4>& x, const SubtypeLedger& l, const Parameters& p) noexcept {
        subtype_channel_rates_into(x, l, p, k);
        return k.total;
    }
    void apply(double target, std::array<std::int64_t, 4>& x, SubtypeLedger& l) noexcept {
        const int c = pick_channel(k.rate, target);
        const auto [from, to] = subtype_jump(c);
        --l[from];
        ++l[to];
        --x[static_cast<std::size_t>(type_of(from))];
        ++x[static_cast<std::size_t>(type_of(to))];
    }
};

template <class Engine>
ReplicateSummary simulate(const SimConfig& config) {
    check_config(config);
    const Parameters& p = config.params;
    const PopulationState init = config.initial_state.value_or(PopulationState::all_of_type(0, p.n_individuals));

    std::array<std::int64_t, 4> x = init.x;
    SubtypeLedger ledger;
    if constexpr (Engine::kLineage) ledger = config.initial_ledger.value_or(SubtypeLedger::from_state(init));

    double t = init.time;
    std::uint64_t events = 0;
    ReplicateSummary out;
    out.seed = config.seed;

    SampleClock clock(config, t);
    auto record = [&](double at) {
        Sample smp;
        smp.time = at;
        smp.state.x = x;
        smp.state.time = at;
        if constexpr (Engine::kLineage) smp.ledger = ledger;
        out.samples.push_back(smp);
    };
    if (clock.active() && config.sample_interval && std::isfinite(config.max_time))
        out.samples.reserve(static_cast<std::size_t>(config.max_time / *config.sample_interval) + 2);

    Xoshiro256pp rng(config.seed);
    Engine engine;
    Termination why = Termination::event_cap;

    if (x[3] == p.n_individuals) {
        why = Termination::fixed;
    } else {
        for (;;) {
            const double total = engine.update(x, ledger, p);
            if (!(total > 0.0)) {
                why = Termination::absorbed_unfixable;
                break;
            }
            if (events == config.max_events) {
                why = Termination::event_cap;
                break;
            }
            const double t_next = t + rng.exponential() / total;
            while (clock.next() < t_next && clock.next() <= config.max_time) {
                record(clock.next());
                clock.advance();
            }
            if (t_next > config.max_time) {
                t = config.max_time;
                why = Termination::time_cap;
                break;
            }
            engine.apply(rng.uniform() * total, x, ledger);
            t = t_next;
            ++events;
            if (x[3] == p.n_individuals) {
                why = Termination::fixed;
                break;
            }
        }
    }

    // Grid instants that coincide with the stopping time see the final state.
    while (clock.active() && clock.next() <= t) {
        record(clock.next());
        clock.advance();
    }
    if (out.samples.empty() || out.samples.back().time < t) record(t);

    out.termination = why;
    out.event_count = events;
    out.final_state.x = x;
    out.final_state.time = t;
    if (why == Termination::fixed) out.fixation_time = t;
    if constexpr (Engine::kLineage) out.final_ledger = ledger;
    return out;
}

}  // namespace

ReplicateSummary run(const SimConfig& config) {
    if (config.track_lineage) return simulate<LineageEngine>(config);
    return simulate<AggregateEngine>(config);
}

ReplicateSummary run_with_lineage(const SimConfig& config) {
    if (!config.track_lineage) throw ConfigError("run_with_lineage requires track_lineage");
    return simulate<LineageEngine>(config);
}

const Sample& sample_at(const ReplicateSummary& summary, double time) {
    const auto& s = summary.samples;
    if (s.empty()) throw RangeError("run recorded no samples");
    if (!(time >= s.front().time && time <= s.back().time))
        throw RangeError("time " + std::to_string(time) + " outside recorded range [" +
                         std::to_string(s.front().time) + ", " + std::to_string(s.back().time) + "]");
    auto it = std::upper_bound(s.begin(), s.end(), time,
                               [](double t, const Sample& smp) { return t < smp.time; });
    return *(it - 1);
}

std::vector<SimplexPoint> sample_trajectory(const ReplicateSummary& summary, std::span<const double> times) {
    std::vector<SimplexPoint> out;
    out.reserve(times.size());
    for (double t : times) out.push_back(fractions(sample_at(summary, t).state));
    return out;
}

}  // namespace twolocus
