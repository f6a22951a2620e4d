#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "twolocus/model.hpp"

namespace twolocus {

struct SimConfig {
    Parameters params;
    std::uint64_t seed = 0;
    double max_time = std::numeric_limits<double>::infinity();
    std::uint64_t max_events = std::numeric_limits<std::uint64_t>::max();
    // Regular sampling grid 0, dt, 2dt, ...
    std::optional<double> sample_interval;
    // Extra sampling instants, merged with the regular grid.
    std::vector<double> sample_times;
    bool track_lineage = false;
    // Defaults to all individuals of type 0 at time 0.
    std::optional<PopulationState> initial_state;
    // Only used with track_lineage; defaults to SubtypeLedger::from_state.
    std::optional<SubtypeLedger> initial_ledger;
};

// Throws ConfigError (or DomainError for the parameters) when unusable.
void check_config(const SimConfig& config);

enum class Termination { fixed, time_cap, event_cap, absorbed_unfixable };

const char* termination_name(Termination t);

struct Sample {
    double time = 0.0;
    PopulationState state;
    std::optional<SubtypeLedger> ledger;
};

struct ReplicateSummary {
    std::uint64_t seed = 0;
    std::optional<double> fixation_time;
    std::uint64_t event_count = 0;
    PopulationState final_state;
    std::optional<SubtypeLedger> final_ledger;
    // Value of the path at each grid instant (right-continuous), plus the
    // terminal state at the stopping time when that is later than the grid.
    std::vector<Sample> samples;
    Termination termination = Termination::event_cap;
};

// Exact event-driven simulation of the aggregated chain.
// Dispatches to run_with_lineage when config.track_lineage is set.
ReplicateSummary run(const SimConfig& config);

// Simulation on the lineage-resolved channel set; samples carry ledgers.
ReplicateSummary run_with_lineage(const SimConfig& config);

// Piecewise-constant lookup of recorded samples at the requested times.
// Throws RangeError for times outside [first sample, last sample].
std::vector<SimplexPoint> sample_trajectory(const ReplicateSummary& summary,
                                            std::span<const double> times);

// Single-time lookup returning the full recorded sample.
const Sample& sample_at(const ReplicateSummary& summary, double time);

}  // namespace twolocus
