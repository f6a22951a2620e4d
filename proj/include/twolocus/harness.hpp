#pragma once

// Experiment orchestration shared by the command-line tool, the Python
// module and the acceptance suite.

#include <algorithm>
#include <array>
#include <atomic>
#include <cstdint>
#include <exception>
#include <functional>
#include <iosfwd>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "twolocus/analytics.hpp"
#include "twolocus/model.hpp"
#include "twolocus/simulator.hpp"

namespace twolocus {

struct ExperimentConfig {
    Parameters params{100000, 1.7782794100389227e-4, 0.1, 3.1622776601683794e-3};
    std::int64_t replicates = 1;
    std::uint64_t master_seed = 1;
    int threads = 0;  // 0: environment or hardware default
    std::string out;  // empty: standard output
    std::optional<double> sample_dt;
    double max_time = std::numeric_limits<double>::infinity();
    std::uint64_t max_events = std::numeric_limits<std::uint64_t>::max();
    bool track_lineage = false;
    std::optional<PopulationState> initial_state;
    std::vector<double> r_values;

    double epsilon = 1.0 / 32.0;
    double delta = 1.0 / 8.0;
    double chain_slack = 0.01;
    RegimeThresholds thresholds;
    std::string regime = "auto";  // auto | recombination | mutation
    double window_slack = 2.0;
    std::optional<double> eps0;   // default delta^4 / 4
    double ode_step = 1e-3;       // in units of 1/s
    double ratio_threshold = 0.25;
};

inline constexpr const char* kThreadsEnv = "TWOLOCUS_THREADS";

// Apply one key=value setting. Keys match the long flag names without
// leading dashes. Throws ConfigError for unknown keys or bad values.
void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value);

// Named parameter presets: "theorem-check" and "figure-1".
void apply_preset(ExperimentConfig& cfg, const std::string& name);

// Reads key=value lines; '#' starts a comment. Throws IoError / ConfigError.
std::vector<std::pair<std::string, std::string>> read_config_file(const std::string& path);

// defaults <- preset <- file <- flags. A preset named in the flags wins over
// one named in the file.
ExperimentConfig build_config(const std::vector<std::pair<std::string, std::string>>& file_settings,
                              const std::vector<std::pair<std::string, std::string>>& flag_settings);

void check_experiment(const ExperimentConfig& cfg);

// Explicit > 0 request, else the environment variable, else hardware threads.
int resolve_threads(int requested);

// Runs f(0..n-1) on a pool of workers and returns results in index order.
template <class F>
auto parallel_map(std::int64_t n, int threads, F&& f) -> std::vector<decltype(f(std::int64_t{}))> {
    using R = decltype(f(std::int64_t{}));
    std::vector<std::optional<R>> slots(static_cast<std::size_t>(n));
    std::atomic<std::int64_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (;;) {
            const std::int64_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                slots[static_cast<std::size_t>(i)].emplace(f(i));
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next.store(n);
            }
        }
    };
    const int workers = static_cast<int>(std::min<std::int64_t>(std::max(1, threads), std::max<std::int64_t>(n, 1)));
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);
    std::vector<R> out;
    out.reserve(slots.size());
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

// Simulation settings for replicate `index`.
SimConfig replicate_config(const ExperimentConfig& cfg, std::int64_t index);

std::vector<ReplicateSummary> run_replicates(const ExperimentConfig& cfg);

struct FixationStats {
    std::array<double, 5> quantiles{};  // 10, 25, 50, 75, 90 %
    double mean = 0.0;
    double se = 0.0;
    std::int64_t replicates = 0;
    std::int64_t fixed = 0;
};

inline constexpr std::array<double, 5> kQuantileLevels{0.10, 0.25, 0.50, 0.75, 0.90};

// Linear-interpolation quantile of sorted data.
double quantile_sorted(const std::vector<double>& sorted, double level);
double median(std::vector<double> v);

// Statistics over the replicates that fixed.
FixationStats fixation_stats(const std::vector<ReplicateSummary>& runs);

// Two-sided exact binomial test of p = 1/2.
double binomial_half_p_value(std::int64_t k, std::int64_t n);

// ---------------------------------------------------------------------------
// CSV and JSON.

// Shortest decimal text that reads back to the same double.
std::string format_double(double v);
double parse_double(const std::string& text);

struct SummaryRow {
    std::uint64_t seed = 0;
    Parameters params;
    std::string regime;
    std::optional<double> t_star;
    std::optional<double> t_fix;
    std::uint64_t events = 0;
    std::string termination;
    bool operator==(const SummaryRow&) const;
};

inline constexpr const char* kSummaryHeader = "seed,N,mu,s,r,regime,t_star,T_fix,events,termination";

SummaryRow summary_row(const ExperimentConfig& cfg, const ReplicateSummary& run);
void write_summary_csv(std::ostream& os, const std::vector<SummaryRow>& rows);
std::vector<SummaryRow> read_summary_csv(std::istream& is);

struct TrajectoryRow {
    double time = 0.0;
    std::array<std::int64_t, 4> x{};
    // x1m, x1r, x2m, x2r, x3m, x3r, x0r
    std::optional<std::array<std::int64_t, 7>> lineage;
    bool operator==(const TrajectoryRow&) const = default;
};

std::vector<TrajectoryRow> trajectory_rows(const ReplicateSummary& run);
void write_trajectory_csv(std::ostream& os, const std::vector<TrajectoryRow>& rows);
std::vector<TrajectoryRow> read_trajectory_csv(std::istream& is);

// {params, regime, t_star, quantiles, mean, se, replicates, runtime_seconds}
// serialized as JSON text.
std::string aggregate_json(const ExperimentConfig& cfg, const FixationStats& stats, double runtime_seconds);

// Writes `text` to `path`, throwing IoError on failure.
void write_file(const std::string& path, const std::string& text);

// ---------------------------------------------------------------------------
// Experiments.

struct TStarRow {
    double r = 0.0;
    double t_star = 0.0;
    std::string regime;
};

std::vector<TStarRow> tstar_curve(const Parameters& base, const std::vector<double>& r_values,
                                  RegimeThresholds thresholds = {});

// Regime tag from cfg.regime ("auto" classifies; otherwise forced).
// Throws ScheduleError for an indeterminate automatic classification.
RegimeTag resolve_regime(const ExperimentConfig& cfg);

// State recorded at time t. Before the first sample the first sample is
// returned; after a fixed run's last sample the fixed state persists.
PopulationState state_at(const ReplicateSummary& run, double t);

struct WindowCheck {
    std::string name;
    double time = 0.0;
    double lo = 0.0, hi = 0.0;  // after widening; hi may be +inf
    double floor = 0.0;         // proposition probability floor, informational
    std::int64_t inside = 0;
    std::int64_t total = 0;
    double fraction() const { return total ? static_cast<double>(inside) / static_cast<double>(total) : 0.0; }
};

struct PhaseVerdicts {
    // x1_t1, x2_t1, x3_t1, x1_t2, x2_t2, x3_t3, x0_t3, x3_t4, x12_t4
    std::array<bool, 9> inside{};
    std::array<double, 9> value{};
};

inline constexpr std::array<const char*, 9> kPhaseWindowNames{
    "X1(t1)/N", "X2(t1)/N", "X3(t1) s/(N scale)", "X1(t2)/N", "X2(t2)/N",
    "X3(t3)/N", "X0(t3)/N", "X3(t4)/N", "(X1+X2)(t4)/N"};

// Phase times and widened windows used by phase-check.
struct PhasePlan {
    RegimeTag regime = RegimeTag::indeterminate;
    PhaseSchedule schedule;
    PhasePredictions predictions;
    std::array<Window, 9> windows;  // widened; one-sided bounds use +-inf
    std::array<double, 9> times{};
    std::array<double, 9> floors{};
    double window_slack = 2.0;
};

PhasePlan phase_plan(const ExperimentConfig& cfg);
PhaseVerdicts phase_verdicts(const ReplicateSummary& run, const PhasePlan& plan, const Parameters& p);

struct PhaseCheckReport {
    PhasePlan plan;
    std::vector<WindowCheck> windows;
    std::int64_t replicates = 0;
    // Paired test of the type-1 and type-2 verdicts at t1 and t2.
    double symmetry_p_t1 = 1.0;
    double symmetry_p_t2 = 1.0;
    std::int64_t both_t2 = 0;  // replicates inside both t2 windows
};

PhaseCheckReport summarize_phase_check(const PhasePlan& plan, const std::vector<PhaseVerdicts>& verdicts);
PhaseCheckReport phase_check(const ExperimentConfig& cfg);

struct OdeWindow {
    double lo = 0.0, hi = 0.0;
    double t1 = 0.0, t2 = 0.0;
    bool clamped = false;  // t1 < 0 moved to 0
    double step = 0.0;
};

OdeWindow ode_window(const ExperimentConfig& cfg);

// Sup-deviation of one run (sampled on at least the ODE grid) from the full
// drift ODE started at the simulated state at window.lo.
double ode_deviation(const ReplicateSummary& run, const Parameters& p, const OdeWindow& w);

struct OdeCompareReport {
    OdeWindow window;
    std::vector<double> deviations;
    double epsilon0 = 0.0;
    double lipschitz_k = 0.0;   // of b / s
    double L = 0.0;             // 48 / N
    double bound = 0.0;         // clamped
    double bound_raw = 0.0;
    std::int64_t exceed = 0;
    double frequency = 0.0;
    double se = 0.0;
    bool within_bound() const { return frequency <= bound + 3.0 * se; }
};

OdeCompareReport summarize_ode_compare(const ExperimentConfig& cfg, const OdeWindow& w,
                                       std::vector<double> deviations);
OdeCompareReport ode_compare(const ExperimentConfig& cfg);

double measured_lipschitz_default();

struct ChainRelation {
    std::string name;
    std::string relation;  // human-readable defining (in)equality
    double lhs = 0.0, rhs = 0.0;
    bool satisfied = false;
};

std::vector<ChainRelation> chain_relations(const ConstantChain& chain, const Parameters& params,
                                           RegimeThresholds thresholds = {});

}  // namespace twolocus
