#include "twolocus/harness.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "twolocus/errors.hpp"
#include "twolocus/fluid.hpp"
#include "twolocus/rng.hpp"

namespace twolocus {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, sep)) out.push_back(cur);
    if (!s.empty() && s.back() == sep) out.emplace_back();
    return out;
}

// Accepts plain numbers and the power form "10^x".
double number(const std::string& key, const std::string& text) {
    const std::string t = trim(text);
    try {
        if (t.rfind("10^", 0) == 0) return std::pow(10.0, parse_double(t.substr(3)));
        return parse_double(t);
    } catch (const std::exception&) {
        throw ConfigError("bad value for " + key + ": '" + text + "'");
    }
}

std::int64_t integer(const std::string& key, const std::string& text) {
    const double v = number(key, text);
    if (!std::isfinite(v) || v != std::floor(v) || std::abs(v) > 9.0e18)
        throw ConfigError("value for " + key + " must be an integer: '" + text + "'");
    return static_cast<std::int64_t>(v);
}

bool boolean(const std::string& key, const std::string& text) {
    const std::string t = trim(text);
    if (t == "1" || t == "true" || t == "yes" || t == "on") return true;
    if (t == "0" || t == "false" || t == "no" || t == "off") return false;
    throw ConfigError("bad boolean for " + key + ": '" + text + "'");
}

std::vector<double> r_list(const std::string& text) {
    // "lo:hi:count" or a comma-separated list
    if (text.find(':') != std::string::npos) {
        const auto parts = split(text, ':');
        if (parts.size() != 3) throw ConfigError("r-values range must be lo:hi:count");
        const double lo = number("r-values", parts[0]), hi = number("r-values", parts[1]);
        const std::int64_t count = integer("r-values", parts[2]);
        if (count < 1) throw ConfigError("r-values count must be positive");
        std::vector<double> out;
        for (std::int64_t i = 0; i < count; ++i)
            out.push_back(count == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1));
        return out;
    }
    std::vector<double> out;
    for (const auto& p : split(text, ','))
        if (!trim(p).empty()) out.push_back(number("r-values", p));
    return out;
}

}  // namespace

void apply_preset(ExperimentConfig& cfg, const std::string& name) {
    if (name == "theorem-check") {
        cfg.params = {100000, std::pow(10.0, -3.75), 0.1, std::pow(10.0, -2.5)};
        cfg.replicates = 200;
    } else if (name == "figure-1") {
        cfg.params = {10000000, 2e-6, 1e-4, 0.0};
        cfg.r_values = r_list("0:5e-5:51");
    } else {
        throw ConfigError("unknown preset '" + name + "' (expected theorem-check or figure-1)");
    }
}

void apply_setting(ExperimentConfig& cfg, const std::string& raw_key, const std::string& value) {
    const std::string key = trim(raw_key);
    if (key == "n") {
        cfg.params.n_individuals = integer(key, value);
    } else if (key == "mu") {
        cfg.params.mutation_rate = number(key, value);
    } else if (key == "s") {
        cfg.params.selection = number(key, value);
    } else if (key == "r") {
        cfg.params.recombination_prob = number(key, value);
    } else if (key == "seed") {
        const std::string t = trim(value);
        std::uint64_t seed = 0;
        auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), seed);
        if (ec != std::errc() || p != t.data() + t.size()) throw ConfigError("bad seed '" + value + "'");
        cfg.master_seed = seed;
    } else if (key == "replicates") {
        cfg.replicates = integer(key, value);
    } else if (key == "threads") {
        const std::int64_t t = integer(key, value);
        if (t < 0 || t > 4096) throw ConfigError("threads must be in [0, 4096]");
        cfg.threads = static_cast<int>(t);
    } else if (key == "out") {
        cfg.out = trim(value);
    } else if (key == "sample-dt") {
        cfg.sample_dt = number(key, value);
    } else if (key == "max-time") {
        cfg.max_time = number(key, value);
    } else if (key == "max-events") {
        const std::int64_t e = integer(key, value);
        if (e < 0) throw ConfigError("max-events must be nonnegative");
        cfg.max_events = static_cast<std::uint64_t>(e);
    } else if (key == "track-lineage") {
        cfg.track_lineage = boolean(key, value);
    } else if (key == "initial") {
        const auto parts = split(value, ',');
        if (parts.size() != 4) throw ConfigError("initial must be x0,x1,x2,x3");
        PopulationState st;
        for (int i = 0; i < 4; ++i) st.x[static_cast<std::size_t>(i)] = integer(key, parts[static_cast<std::size_t>(i)]);
        cfg.initial_state = st;
    } else if (key == "r-values") {
        cfg.r_values = r_list(value);
    } else if (key == "epsilon") {
        cfg.epsilon = number(key, value);
    } else if (key == "delta") {
        cfg.delta = number(key, value);
    } else if (key == "chain-slack") {
        cfg.chain_slack = number(key, value);
    } else if (key == "regime") {
        const std::string t = trim(value);
        if (t != "auto" && t != "recombination" && t != "mutation")
            throw ConfigError("regime must be auto, recombination or mutation");
        cfg.regime = t;
    } else if (key == "regime-hi") {
        cfg.thresholds.hi = number(key, value);
    } else if (key == "regime-lo") {
        cfg.thresholds.lo = number(key, value);
    } else if (key == "window-slack") {
        cfg.window_slack = number(key, value);
    } else if (key == "eps0") {
        cfg.eps0 = number(key, value);
    } else if (key == "ode-step") {
        cfg.ode_step = number(key, value);
    } else if (key == "ratio-threshold") {
        cfg.ratio_threshold = number(key, value);
    } else if (key == "preset") {
        apply_preset(cfg, trim(value));
    } else {
        throw ConfigError("unknown setting '" + key + "'");
    }
}

std::vector<std::pair<std::string, std::string>> read_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read config file '" + path + "'");
    std::vector<std::pair<std::string, std::string>> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key=value");
        out.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return out;
}

ExperimentConfig build_config(const std::vector<std::pair<std::string, std::string>>& file_settings,
                              const std::vector<std::pair<std::string, std::string>>& flag_settings) {
    ExperimentConfig cfg;
    std::optional<std::string> preset;
    for (const auto& [k, v] : file_settings)
        if (trim(k) == "preset") preset = v;
    for (const auto& [k, v] : flag_settings)
        if (trim(k) == "preset") preset = v;
    if (preset) apply_preset(cfg, trim(*preset));
    for (const auto& [k, v] : file_settings)
        if (trim(k) != "preset") apply_setting(cfg, k, v);
    for (const auto& [k, v] : flag_settings)
        if (trim(k) != "preset") apply_setting(cfg, k, v);
    return cfg;
}

void check_experiment(const ExperimentConfig& cfg) {
    check_parameters(cfg.params);
    if (cfg.replicates < 1) throw ConfigError("replicates must be >= 1");
    if (cfg.sample_dt && !(*cfg.sample_dt > 0.0)) throw ConfigError("sample-dt must be positive");
    if (!(cfg.max_time > 0.0)) throw ConfigError("max-time must be positive");
    if (!(cfg.window_slack >= 1.0)) throw ConfigError("window-slack must be >= 1");
    if (!(cfg.ode_step > 0.0)) throw ConfigError("ode-step must be positive");
    if (cfg.eps0 && !(*cfg.eps0 > 0.0)) throw ConfigError("eps0 must be positive");
    if (!(cfg.thresholds.lo <= cfg.thresholds.hi)) throw ConfigError("regime-lo must not exceed regime-hi");
    std::set<double> seen;
    for (double r : cfg.r_values) {
        if (!seen.insert(r).second) throw ConfigError("sweep points must be distinct");
        Parameters p = cfg.params;
        p.recombination_prob = r;
        check_parameters(p);
    }
    if (cfg.initial_state) {
        PopulationState st = *cfg.initial_state;
        st.time = 0.0;
        check_state(st, cfg.params);
    }
}

int resolve_threads(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv(kThreadsEnv); env && *env) {
        int v = 0;
        const std::string t = trim(env);
        auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
        if (ec == std::errc() && p == t.data() + t.size() && v > 0) return v;
        throw ConfigError(std::string(kThreadsEnv) + " must be a positive integer");
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

SimConfig replicate_config(const ExperimentConfig& cfg, std::int64_t index) {
    SimConfig sc;
    sc.params = cfg.params;
    sc.seed = stream_seed(cfg.master_seed, static_cast<std::uint64_t>(index));
    sc.max_time = cfg.max_time;
    sc.max_events = cfg.max_events;
    sc.sample_interval = cfg.sample_dt;
    sc.track_lineage = cfg.track_lineage;
    sc.initial_state = cfg.initial_state;
    return sc;
}

std::vector<ReplicateSummary> run_replicates(const ExperimentConfig& cfg) {
    check_experiment(cfg);
    return parallel_map(cfg.replicates, resolve_threads(cfg.threads),
                        [&](std::int64_t i) { return run(replicate_config(cfg, i)); });
}

double quantile_sorted(const std::vector<double>& v, double level) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    const double pos = level * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return quantile_sorted(v, 0.5);
}

FixationStats fixation_stats(const std::vector<ReplicateSummary>& runs) {
    FixationStats st;
    st.replicates = static_cast<std::int64_t>(runs.size());
    std::vector<double> t;
    for (const auto& r : runs)
        if (r.fixation_time) t.push_back(*r.fixation_time);
    std::sort(t.begin(), t.end());
    st.fixed = static_cast<std::int64_t>(t.size());
    for (std::size_t i = 0; i < kQuantileLevels.size(); ++i) st.quantiles[i] = quantile_sorted(t, kQuantileLevels[i]);
    if (t.empty()) {
        st.mean = st.se = std::numeric_limits<double>::quiet_NaN();
        return st;
    }
    double sum = 0.0;
    for (double x : t) sum += x;
    st.mean = sum / static_cast<double>(t.size());
    double ss = 0.0;
    for (double x : t) ss += (x - st.mean) * (x - st.mean);
    st.se = t.size() > 1 ? std::sqrt(ss / static_cast<double>(t.size() - 1) / static_cast<double>(t.size())) : 0.0;
    return st;
}

double binomial_half_p_value(std::int64_t k, std::int64_t n) {
    if (n <= 0) return 1.0;
    const std::int64_t m = std::min(k, n - k);
    const double nd = static_cast<double>(n);
    double tail = 0.0;
    for (std::int64_t i = 0; i <= m; ++i) {
        const double id = static_cast<double>(i);
        tail += std::exp(std::lgamma(nd + 1) - std::lgamma(id + 1) - std::lgamma(nd - id + 1) - nd * std::log(2.0));
    }
    return std::min(1.0, 2.0 * tail);
}

// ---------------------------------------------------------------------------

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
}

double parse_double(const std::string& text) {
    const std::string t = trim(text);
    double v = 0.0;
    const char* b = t.data();
    if (!t.empty() && t[0] == '+') ++b;
    auto [p, ec] = std::from_chars(b, t.data() + t.size(), v);
    if (ec != std::errc() || p != t.data() + t.size() || t.empty())
        throw std::invalid_argument("not a number: '" + text + "'");
    return v;
}

bool SummaryRow::operator==(const SummaryRow& o) const {
    return seed == o.seed && params.n_individuals == o.params.n_individuals &&
           params.mutation_rate == o.params.mutation_rate && params.selection == o.params.selection &&
           params.recombination_prob == o.params.recombination_prob && regime == o.regime && t_star == o.t_star &&
           t_fix == o.t_fix && events == o.events && termination == o.termination;
}

SummaryRow summary_row(const ExperimentConfig& cfg, const ReplicateSummary& run) {
    SummaryRow row;
    row.seed = run.seed;
    row.params = cfg.params;
    if (cfg.params.mutation_rate > 0.0) {
        row.regime = regime_name(classify_regime(cfg.params, cfg.thresholds).tag);
        row.t_star = t_star(cfg.params);
    } else {
        row.regime = "degenerate";
    }
    row.t_fix = run.fixation_time;
    row.events = run.event_count;
    row.termination = termination_name(run.termination);
    return row;
}

namespace {

std::string opt(const std::optional<double>& v) { return v ? format_double(*v) : "NA"; }

std::optional<double> parse_opt(const std::string& t) {
    if (t == "NA") return std::nullopt;
    return parse_double(t);
}

std::uint64_t parse_u64(const std::string& t) {
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || p != t.data() + t.size()) throw IoError("bad integer field '" + t + "'");
    return v;
}

std::int64_t parse_i64(const std::string& t) {
    std::int64_t v = 0;
    auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || p != t.data() + t.size()) throw IoError("bad integer field '" + t + "'");
    return v;
}

}  // namespace

void write_summary_csv(std::ostream& os, const std::vector<SummaryRow>& rows) {
    os << kSummaryHeader << '\n';
    for (const auto& r : rows) {
        os << r.seed << ',' << r.params.n_individuals << ',' << format_double(r.params.mutation_rate) << ','
           << format_double(r.params.selection) << ',' << format_double(r.params.recombination_prob) << ','
           << r.regime << ',' << opt(r.t_star) << ',' << opt(r.t_fix) << ',' << r.events << ','
           << r.termination << '\n';
    }
}

std::vector<SummaryRow> read_summary_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || trim(line) != kSummaryHeader) throw IoError("summary CSV header mismatch");
    std::vector<SummaryRow> rows;
    while (std::getline(is, line)) {
        if (trim(line).empty()) continue;
        const auto f = split(trim(line), ',');
        if (f.size() != 10) throw IoError("summary CSV row has " + std::to_string(f.size()) + " fields");
        try {
            SummaryRow r;
            r.seed = parse_u64(f[0]);
            r.params = {parse_i64(f[1]), parse_double(f[2]), parse_double(f[3]), parse_double(f[4])};
            r.regime = f[5];
            r.t_star = parse_opt(f[6]);
            r.t_fix = parse_opt(f[7]);
            r.events = parse_u64(f[8]);
            r.termination = f[9];
            rows.push_back(std::move(r));
        } catch (const std::invalid_argument& e) {
            throw IoError(std::string("summary CSV: ") + e.what());
        }
    }
    return rows;
}

std::vector<TrajectoryRow> trajectory_rows(const ReplicateSummary& run) {
    std::vector<TrajectoryRow> rows;
    rows.reserve(run.samples.size());
    for (const auto& smp : run.samples) {
        TrajectoryRow row;
        row.time = smp.time;
        row.x = smp.state.x;
        if (smp.ledger) {
            const auto& l = *smp.ledger;
            row.lineage = std::array<std::int64_t, 7>{l.x1m(), l.x1r(), l.x2m(), l.x2r(), l.x3m(), l.x3r(), l.x0r()};
        }
        rows.push_back(row);
    }
    return rows;
}

void write_trajectory_csv(std::ostream& os, const std::vector<TrajectoryRow>& rows) {
    const bool lineage = !rows.empty() && rows.front().lineage.has_value();
    os << "time,x0,x1,x2,x3";
    if (lineage) os << ",x1m,x1r,x2m,x2r,x3m,x3r,x0r";
    os << '\n';
    for (const auto& r : rows) {
        os << format_double(r.time);
        for (auto v : r.x) os << ',' << v;
        if (lineage) {
            if (!r.lineage) throw IoError("trajectory rows mix lineage and aggregate samples");
            for (auto v : *r.lineage) os << ',' << v;
        }
        os << '\n';
    }
}

std::vector<TrajectoryRow> read_trajectory_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw IoError("empty trajectory CSV");
    const std::string header = trim(line);
    bool lineage = false;
    if (header == "time,x0,x1,x2,x3,x1m,x1r,x2m,x2r,x3m,x3r,x0r")
        lineage = true;
    else if (header != "time,x0,x1,x2,x3")
        throw IoError("trajectory CSV header mismatch");
    std::vector<TrajectoryRow> rows;
    while (std::getline(is, line)) {
        if (trim(line).empty()) continue;
        const auto f = split(trim(line), ',');
        if (f.size() != (lineage ? 12u : 5u)) throw IoError("trajectory CSV row has wrong field count");
        TrajectoryRow r;
        try {
            r.time = parse_double(f[0]);
        } catch (const std::invalid_argument& e) {
            throw IoError(std::string("trajectory CSV: ") + e.what());
        }
        for (std::size_t i = 0; i < 4; ++i) r.x[i] = parse_i64(f[i + 1]);
        if (lineage) {
            std::array<std::int64_t, 7> l{};
            for (std::size_t i = 0; i < 7; ++i) l[i] = parse_i64(f[i + 5]);
            r.lineage = l;
        }
        rows.push_back(r);
    }
    return rows;
}

std::string aggregate_json(const ExperimentConfig& cfg, const FixationStats& st, double runtime_seconds) {
    using nlohmann::ordered_json;
    auto num = [](double v) -> ordered_json { return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr); };
    ordered_json j;
    j["params"] = {{"N", cfg.params.n_individuals},
                   {"mu", cfg.params.mutation_rate},
                   {"s", cfg.params.selection},
                   {"r", cfg.params.recombination_prob}};
    if (cfg.params.mutation_rate > 0.0) {
        const Regime reg = classify_regime(cfg.params, cfg.thresholds);
        j["regime"] = {{"tag", regime_name(reg.tag)}, {"rho", num(reg.rho)}};
        j["t_star"] = num(t_star(cfg.params));
    } else {
        j["regime"] = {{"tag", "degenerate"}, {"rho", nullptr}};
        j["t_star"] = nullptr;
    }
    ordered_json q;
    const char* names[] = {"q10", "q25", "q50", "q75", "q90"};
    for (std::size_t i = 0; i < 5; ++i) q[names[i]] = num(st.quantiles[i]);
    j["quantiles"] = q;
    j["mean"] = num(st.mean);
    j["se"] = num(st.se);
    j["replicates"] = st.replicates;
    j["fixed"] = st.fixed;
    j["master_seed"] = cfg.master_seed;
    j["runtime_seconds"] = runtime_seconds;
    return j.dump(2) + "\n";
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << text;
    out.flush();
    if (!out) throw IoError("failed writing '" + path + "'");
}

// ---------------------------------------------------------------------------

std::vector<TStarRow> tstar_curve(const Parameters& base, const std::vector<double>& r_values,
                                  RegimeThresholds thresholds) {
    std::vector<TStarRow> rows;
    for (double r : r_values) {
        Parameters p = base;
        p.recombination_prob = r;
        rows.push_back({r, t_star(p), regime_name(classify_regime(p, thresholds).tag)});
    }
    return rows;
}

RegimeTag resolve_regime(const ExperimentConfig& cfg) {
    if (!(cfg.params.mutation_rate > 0.0))
        throw ScheduleError("phases are undefined without mutation (mu = 0)");
    if (cfg.regime == "recombination") return RegimeTag::recombination_dominating;
    if (cfg.regime == "mutation") return RegimeTag::mutation_dominating;
    const Regime reg = classify_regime(cfg.params, cfg.thresholds);
    if (reg.tag == RegimeTag::indeterminate) {
        std::ostringstream os;
        os << "regime is indeterminate (rho = " << reg.rho << " between " << cfg.thresholds.lo << " and "
           << cfg.thresholds.hi << "); choose one with --regime";
        throw ScheduleError(os.str());
    }
    return reg.tag;
}

PopulationState state_at(const ReplicateSummary& run, double t) {
    const auto& s = run.samples;
    if (s.empty()) throw RangeError("run recorded no samples");
    if (t < s.front().time) return s.front().state;
    if (t > s.back().time) {
        if (run.termination == Termination::fixed) {
            PopulationState st = run.final_state;
            st.time = t;
            return st;
        }
        throw RangeError("time beyond the recorded path of an unfinished run");
    }
    return sample_at(run, t).state;
}

PhasePlan phase_plan(const ExperimentConfig& cfg) {
    check_experiment(cfg);
    PhasePlan plan;
    plan.regime = resolve_regime(cfg);
    plan.window_slack = cfg.window_slack;
    const ConstantChain chain = derive_constants(cfg.epsilon, cfg.delta, cfg.params, cfg.chain_slack, cfg.thresholds);
    plan.schedule = phase_schedule(cfg.params, chain, cfg.thresholds);
    const double t3 = plan.schedule.t3(plan.regime);
    const double t4 = plan.schedule.t4(plan.regime);
    if (std::isnan(plan.schedule.t1) || std::isnan(plan.schedule.t2))
        throw ScheduleError("t1 or t2 is undefined for these parameters");
    plan.predictions = phase_predictions(plan.schedule, cfg.params, chain, plan.regime);
    const auto& pr = plan.predictions;
    const double k = cfg.window_slack;
    const double inf = std::numeric_limits<double>::infinity();
    plan.windows = {pr.x1_t1.widened(k),
                    pr.x2_t1.widened(k),
                    pr.x3_t1_scaled.widened(k),
                    pr.x1_t2.widened(k),
                    pr.x2_t2.widened(k),
                    pr.x3_t3.widened(k),
                    Window{"X0(t3)/N", -inf, pr.x0_t3_upper * k, Window::Kind::multiplicative, 0.0},
                    pr.x3_t4.widened(k),
                    Window{"(X1+X2)(t4)/N", pr.x12_t4_lower / k, inf, Window::Kind::multiplicative, 0.0}};
    const double t1 = plan.schedule.t1, t2 = plan.schedule.t2;
    plan.times = {t1, t1, t1, t2, t2, t3, t3, t4, t4};
    const double e = cfg.epsilon, d = cfg.delta;
    const double f1 = 1 - 17 * e, f2 = 1 - 21 * e, f3 = 1 - 25 * e - 7 * d - d * d, f4 = 1 - 26 * e - 7 * d - d * d;
    plan.floors = {f1, f1, f1, f2, f2, f3, f3, f4, f4};
    return plan;
}

PhaseVerdicts phase_verdicts(const ReplicateSummary& run, const PhasePlan& plan, const Parameters& p) {
    PhaseVerdicts v;
    const double n = p.n();
    for (std::size_t i = 0; i < 9; ++i) {
        const auto x = state_at(run, plan.times[i]).x;
        double val = 0.0;
        switch (i) {
            case 0: case 3: val = static_cast<double>(x[1]) / n; break;
            case 1: case 4: val = static_cast<double>(x[2]) / n; break;
            case 2: val = static_cast<double>(x[3]) * p.selection / (n * plan.predictions.x3_t1_scale); break;
            case 5: case 7: val = static_cast<double>(x[3]) / n; break;
            case 6: val = static_cast<double>(x[0]) / n; break;
            case 8: val = static_cast<double>(x[1] + x[2]) / n; break;
        }
        v.value[i] = val;
        v.inside[i] = plan.windows[i].contains(val);
    }
    return v;
}

PhaseCheckReport summarize_phase_check(const PhasePlan& plan, const std::vector<PhaseVerdicts>& verdicts) {
    PhaseCheckReport rep;
    rep.plan = plan;
    rep.replicates = static_cast<std::int64_t>(verdicts.size());
    for (std::size_t i = 0; i < 9; ++i) {
        WindowCheck w;
        w.name = kPhaseWindowNames[i];
        w.time = plan.times[i];
        w.lo = plan.windows[i].lo;
        w.hi = plan.windows[i].hi;
        w.floor = plan.floors[i];
        w.total = rep.replicates;
        for (const auto& v : verdicts) w.inside += v.inside[i] ? 1 : 0;
        rep.windows.push_back(w);
    }
    auto paired = [&](std::size_t a, std::size_t b) {
        std::int64_t only_a = 0, only_b = 0;
        for (const auto& v : verdicts) {
            only_a += v.inside[a] && !v.inside[b];
            only_b += !v.inside[a] && v.inside[b];
        }
        return binomial_half_p_value(only_a, only_a + only_b);
    };
    rep.symmetry_p_t1 = paired(0, 1);
    rep.symmetry_p_t2 = paired(3, 4);
    for (const auto& v : verdicts) rep.both_t2 += v.inside[3] && v.inside[4];
    return rep;
}

PhaseCheckReport phase_check(const ExperimentConfig& cfg) {
    const PhasePlan plan = phase_plan(cfg);
    std::vector<double> times{0.0};
    double last = 0.0;
    for (double t : plan.times) {
        if (t > 0.0) times.push_back(t);
        last = std::max(last, t);
    }
    auto verdicts = parallel_map(cfg.replicates, resolve_threads(cfg.threads), [&](std::int64_t i) {
        SimConfig sc = replicate_config(cfg, i);
        sc.sample_interval.reset();
        sc.sample_times = times;
        sc.max_time = std::min(cfg.max_time, std::max(last, 1e-9));
        return phase_verdicts(run(sc), plan, cfg.params);
    });
    return summarize_phase_check(plan, verdicts);
}

OdeWindow ode_window(const ExperimentConfig& cfg) {
    check_experiment(cfg);
    if (!(cfg.params.mutation_rate > 0.0)) throw ScheduleError("t1 and t2 are undefined without mutation");
    const ConstantChain chain = derive_constants(cfg.epsilon, cfg.delta, cfg.params, cfg.chain_slack, cfg.thresholds);
    const PhaseSchedule sc = phase_schedule(cfg.params, chain, cfg.thresholds);
    if (std::isnan(sc.t1) || std::isnan(sc.t2)) throw ScheduleError("t1 or t2 is undefined for these parameters");
    OdeWindow w;
    w.t1 = sc.t1;
    w.t2 = sc.t2;
    w.clamped = sc.t1 < 0.0;
    w.lo = std::max(sc.t1, 0.0);
    w.hi = std::max(sc.t2, w.lo);
    w.step = cfg.ode_step / cfg.params.selection;
    return w;
}

double ode_deviation(const ReplicateSummary& run, const Parameters& p, const OdeWindow& w) {
    const SimplexPoint anchor = fractions(state_at(run, w.lo));
    const OdeSolution sol = integrate(anchor, p, w.lo, w.hi, w.step, Field::full_beta);
    // Same metric as sup_deviation, but a run that fixed inside the window
    // keeps its absorbing state.
    double worst = 0.0;
    for (std::size_t i = 0; i < sol.grid.size(); ++i) {
        const SimplexPoint sim = fractions(state_at(run, sol.grid[i]));
        const SimplexPoint& ode = sol.values[i];
        worst = std::max(worst, std::hypot(sim.xi1 - ode.xi1, sim.xi2 - ode.xi2, sim.xi3 - ode.xi3));
    }
    return worst;
}

double measured_lipschitz_default() {
    static const double k = measured_lipschitz_b(1000000, 0x6c697073ULL);
    return k;
}

OdeCompareReport summarize_ode_compare(const ExperimentConfig& cfg, const OdeWindow& w,
                                       std::vector<double> deviations) {
    OdeCompareReport rep;
    rep.window = w;
    rep.deviations = std::move(deviations);
    const double d = cfg.delta;
    rep.epsilon0 = cfg.eps0.value_or(d * d * d * d / 4.0);
    rep.lipschitz_k = measured_lipschitz_default();
    rep.L = noise_bound(cfg.params);
    const double T = w.hi - w.lo;
    const double lip = rep.lipschitz_k * cfg.params.selection;
    rep.bound_raw = dn_probability_raw(T, rep.epsilon0, lip, rep.L);
    rep.bound = dn_probability_bound(T, rep.epsilon0, lip, rep.L);
    for (double x : rep.deviations) rep.exceed += x > rep.epsilon0;
    const double n = static_cast<double>(rep.deviations.size());
    rep.frequency = n > 0 ? static_cast<double>(rep.exceed) / n : 0.0;
    rep.se = n > 0 ? std::sqrt(rep.frequency * (1.0 - rep.frequency) / n) : 0.0;
    return rep;
}

OdeCompareReport ode_compare(const ExperimentConfig& cfg) {
    const OdeWindow w = ode_window(cfg);
    const std::vector<double> grid = ode_grid(w.lo, w.hi, w.step);
    auto devs = parallel_map(cfg.replicates, resolve_threads(cfg.threads), [&](std::int64_t i) {
        SimConfig sc = replicate_config(cfg, i);
        sc.sample_interval.reset();
        sc.sample_times = grid;
        sc.sample_times.push_back(0.0);
        sc.max_time = std::min(cfg.max_time, std::max(w.hi, 1e-9));
        sc.track_lineage = false;
        return ode_deviation(run(sc), cfg.params, w);
    });
    return summarize_ode_compare(cfg, w, std::move(devs));
}

// ---------------------------------------------------------------------------

std::vector<ChainRelation> chain_relations(const ConstantChain& c, const Parameters& params,
                                           RegimeThresholds thresholds) {
    std::vector<ChainRelation> out;
    auto greater = [&](std::string name, std::string rel, double lhs, double rhs) {
        out.push_back({std::move(name), std::move(rel), lhs, rhs, lhs > rhs});
    };
    auto less = [&](std::string name, std::string rel, double lhs, double rhs) {
        out.push_back({std::move(name), std::move(rel), lhs, rhs, lhs < rhs});
    };
    auto equal = [&](std::string name, std::string rel, double lhs, double rhs) {
        const bool ok = lhs == rhs || std::abs(lhs - rhs) <= 1e-12 * std::max(std::abs(lhs), std::abs(rhs));
        out.push_back({std::move(name), std::move(rel), lhs, rhs, ok});
    };
    const double e = c.epsilon, d2 = c.delta * c.delta;
    const double e1 = std::exp(-c.C1);
    const double span = c.C1 + c.C2;
    less("epsilon", "0 < epsilon < 1/16", c.epsilon, 1.0 / 16.0);
    less("delta", "0 < delta < 1/4", c.delta, 0.25);
    greater("K", "K > 6/epsilon", c.K, 6.0 / e);
    greater("C1", "C1 > ln(5K/epsilon)", c.C1, std::log(5.0 * c.K / e));
    greater("C1", "C1 > ln(8/delta^2)", c.C1, std::log(8.0 / d2));
    greater("C0m", "C0m > 2 ln(2K/epsilon)", c.C0m, 2.0 * std::log(2.0 * c.K / e));
    greater("C0m+", "C0m+ > C0m", c.C0m_plus, c.C0m);
    greater("C0m+", "C0m+ > 14 e^-C1 + ln(48K/(epsilon (1-delta^2)^2))", c.C0m_plus,
            14.0 * e1 + std::log(48.0 * c.K / (e * (1.0 - d2) * (1.0 - d2))));
    greater("C0r", "C0r > ln(K^2/epsilon)", c.C0r, std::log(c.K * c.K / e));
    greater("C0r", "C0r > C1 + ln 4", c.C0r, c.C1 + std::log(4.0));
    equal("eta", "eta = 2K e^-C1", c.eta, 2.0 * c.K * e1);
    less("eta", "eta < 2 epsilon / 5", c.eta, 2.0 * e / 5.0);
    equal("C2", "C2 = -C1 + ln(e^C1/(2(1+delta^2)) - 1) + ln(1/delta^2 - 1)", c.C2,
          -c.C1 + std::log(std::exp(c.C1) / (2.0 * (1.0 + d2)) - 1.0) + std::log(1.0 / d2 - 1.0));
    double rho = 0.0;
    if (params.mutation_rate > 0.0) rho = classify_regime(params, thresholds).rho;
    equal("con22_C", "C = max(1, rho)", c.con22_C, std::max(1.0, rho));
    equal("K1r+", "K1r+ = K^2 e^-2C1 (2(C0r-C1)+1)/epsilon", c.K1r_plus,
          c.K * c.K * std::exp(-2.0 * c.C1) * (2.0 * (c.C0r - c.C1) + 1.0) / e);
    equal("K1m+", "K1m+ = (4K e^(-2C1+C0m) + K^2 e^-2C1 (2(C0r-C1)+1) C)/(2 epsilon)", c.K1m_plus,
          (4.0 * c.K * std::exp(-2.0 * c.C1 + c.C0m) +
           c.K * c.K * std::exp(-2.0 * c.C1) * (2.0 * (c.C0r - c.C1) + 1.0) * c.con22_C) /
              (2.0 * e));
    equal("K1r-", "K1r- = e^(-7e^-C1) (1-5e^-C1) (1-delta^2)^2 e^-2C1 / 3", c.K1r_minus,
          std::exp(-7.0 * e1) * (1.0 - 5.0 * e1) * (1.0 - d2) * (1.0 - d2) * std::exp(-2.0 * c.C1) / 3.0);
    equal("K1m-", "K1m- = (1-delta^2) e^(-7e^-C1-2C1-C0m+) - sqrt(48K e^C0m+/epsilon) e^(-2C1-2C0m+)",
          c.K1m_minus,
          (1.0 - d2) * std::exp(-7.0 * e1 - 2.0 * c.C1 - c.C0m_plus) -
              std::sqrt(48.0 * c.K * std::exp(c.C0m_plus) / e) * std::exp(-2.0 * c.C1 - 2.0 * c.C0m_plus));
    equal("K'1", "K'1 = e^(2(C2+C1)) (C2+C1)", c.Kp1, std::exp(2.0 * span) * span);
    equal("K'2", "K'2 = e^(3(C2+C1)) (C2+C1)", c.Kp2, std::exp(3.0 * span) * span);
    equal("K0r", "K0r = 2 e^(2(C2+C1)) K1r+", c.K0r, 2.0 * std::exp(2.0 * span) * c.K1r_plus);
    equal("K0m", "K0m = 2 e^(2(C2+C1)) K1m+", c.K0m, 2.0 * std::exp(2.0 * span) * c.K1m_plus);
    equal("K2r+", "K2r+ = 2 K1r+ e^(2(C2+C1))", c.K2r_plus, 2.0 * c.K1r_plus * std::exp(2.0 * span));
    equal("K2r-", "K2r- = K1r- / 2", c.K2r_minus, c.K1r_minus / 2.0);
    equal("K2m+", "K2m+ = 2 K1m+ e^(2(C2+C1))", c.K2m_plus, 2.0 * c.K1m_plus * std::exp(2.0 * span));
    equal("K2m-", "K2m- = K1m- / 2", c.K2m_minus, c.K1m_minus / 2.0);
    for (bool rec : {true, false}) {
        const std::string tag = rec ? " [recombination]" : " [mutation]";
        const double k2p = rec ? c.K2r_plus : c.K2m_plus, k2m = rec ? c.K2r_minus : c.K2m_minus;
        const double c3 = rec ? c.C3_r : c.C3_m, k3 = rec ? c.K3_r : c.K3_m, c4 = rec ? c.C4_r : c.C4_m;
        equal("C3" + tag, "C3 = C2 - 3 - ln(K2+/delta^2)", c3, c.C2 - 3.0 - std::log(k2p / d2));
        equal("K3" + tag, "K3 = K2- e^((C3-C2)-2) / 2", k3, k2m * std::exp((c3 - c.C2) - 2.0) / 2.0);
        equal("C4" + tag, "C4 = C3 + ln((1/delta^2 - 1)(1/K3 - 1))", c4,
              c3 + std::log((1.0 / d2 - 1.0) * (1.0 / k3 - 1.0)));
    }
    return out;
}

}  // namespace twolocus
