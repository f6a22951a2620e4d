// twolocus: command-line front end for the two-locus sweep simulator.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "twolocus/analytics.hpp"
#include "twolocus/errors.hpp"
#include "twolocus/harness.hpp"
#include "twolocus/rng.hpp"

using namespace twolocus;
using nlohmann::ordered_json;

namespace {

enum ExitCode { kOk = 0, kConfig = 2, kIo = 3, kSchedule = 4 };

ordered_json num(double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr); }

void emit(const ExperimentConfig& cfg, const std::string& text) {
    if (cfg.out.empty())
        std::cout << text;
    else
        write_file(cfg.out, text);
}

void make_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir)) throw IoError("cannot create output directory '" + dir + "'");
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int cmd_simulate(const ExperimentConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto runs = run_replicates(cfg);
    const double elapsed = seconds_since(t0);
    std::vector<SummaryRow> rows;
    for (const auto& r : runs) rows.push_back(summary_row(cfg, r));
    const std::string json = aggregate_json(cfg, fixation_stats(runs), elapsed);
    if (cfg.out.empty()) {
        write_summary_csv(std::cout, rows);
        std::cerr << json;
        return kOk;
    }
    make_dir(cfg.out);
    std::ostringstream csv;
    write_summary_csv(csv, rows);
    write_file(cfg.out + "/summary.csv", csv.str());
    write_file(cfg.out + "/aggregate.json", json);
    if (cfg.sample_dt || cfg.track_lineage) {
        for (std::size_t i = 0; i < runs.size(); ++i) {
            std::ostringstream os, name;
            write_trajectory_csv(os, trajectory_rows(runs[i]));
            name << cfg.out << "/trajectory_" << std::setw(5) << std::setfill('0') << i << ".csv";
            write_file(name.str(), os.str());
        }
    }
    return kOk;
}

int cmd_sweep(const ExperimentConfig& base) {
    std::vector<double> rs = base.r_values;
    if (rs.empty()) rs.push_back(base.params.recombination_prob);
    std::ostringstream csv;
    csv << "r,N,mu,s,regime,t_star,q10,q25,q50,q75,q90,mean,se,replicates,fixed\n";
    ordered_json all = ordered_json::array();
    for (std::size_t k = 0; k < rs.size(); ++k) {
        ExperimentConfig cfg = base;
        cfg.params.recombination_prob = rs[k];
        cfg.r_values.clear();
        cfg.master_seed = stream_seed(base.master_seed, 0x7377656570ULL + k);
        const auto t0 = std::chrono::steady_clock::now();
        const auto runs = run_replicates(cfg);
        const FixationStats st = fixation_stats(runs);
        const double elapsed = seconds_since(t0);
        const SummaryRow head = summary_row(cfg, runs.front());
        csv << format_double(rs[k]) << ',' << cfg.params.n_individuals << ','
            << format_double(cfg.params.mutation_rate) << ',' << format_double(cfg.params.selection) << ','
            << head.regime << ',' << (head.t_star ? format_double(*head.t_star) : "NA");
        for (double q : st.quantiles) csv << ',' << format_double(q);
        csv << ',' << format_double(st.mean) << ',' << format_double(st.se) << ',' << st.replicates << ','
            << st.fixed << '\n';
        all.push_back(ordered_json::parse(aggregate_json(cfg, st, elapsed)));
    }
    if (base.out.empty()) {
        std::cout << csv.str();
        return kOk;
    }
    make_dir(base.out);
    write_file(base.out + "/sweep.csv", csv.str());
    write_file(base.out + "/sweep.json", all.dump(2) + "\n");
    return kOk;
}

int cmd_tstar_curve(const ExperimentConfig& cfg) {
    check_experiment(cfg);
    std::vector<double> rs = cfg.r_values;
    if (rs.empty()) rs.push_back(cfg.params.recombination_prob);
    std::ostringstream csv;
    csv << "r,t_star,regime\n";
    for (const auto& row : tstar_curve(cfg.params, rs, cfg.thresholds))
        csv << format_double(row.r) << ',' << format_double(row.t_star) << ',' << row.regime << '\n';
    emit(cfg, csv.str());
    return kOk;
}

ordered_json window_json(const Window& w) {
    return {{"name", w.name}, {"lo", num(w.lo)}, {"hi", num(w.hi)}};
}

// Phases and the constant chain need mutation to define a regime.
void require_mutation(const ExperimentConfig& cfg) {
    if (cfg.params.mutation_rate <= 0.0) throw ScheduleError("mu = 0: no mutation, phase schedule undefined");
}

int cmd_phases(const ExperimentConfig& cfg) {
    check_experiment(cfg);
    require_mutation(cfg);
    const ConstantChain c = derive_constants(cfg.epsilon, cfg.delta, cfg.params, cfg.chain_slack, cfg.thresholds);
    const PhaseSchedule sc = phase_schedule(cfg.params, c, cfg.thresholds);
    ordered_json j;
    j["regime"] = {{"tag", regime_name(sc.regime.tag)}, {"rho", sc.regime.rho}};
    j["times"] = {{"t0r", num(sc.t0r)},           {"t0m", num(sc.t0m)},
                  {"t0m_plus", num(sc.t0m_plus)}, {"t1", num(sc.t1)},
                  {"t2", num(sc.t2)},             {"t3_recombination", num(sc.t3_r)},
                  {"t3_mutation", num(sc.t3_m)},  {"t4_recombination", num(sc.t4_r)},
                  {"t4_mutation", num(sc.t4_m)},  {"t5_minus_recombination", num(sc.t5_minus_r)},
                  {"t5_plus_recombination", num(sc.t5_plus_r)}, {"t5_minus_mutation", num(sc.t5_minus_m)},
                  {"t5_plus_mutation", num(sc.t5_plus_m)}};
    j["invalid_terms"] = sc.invalid_terms;
    j["ordering_violations"] = sc.ordering_violations;
    ordered_json preds = ordered_json::object();
    for (auto tag : {RegimeTag::recombination_dominating, RegimeTag::mutation_dominating}) {
        if (sc.regime.tag != RegimeTag::indeterminate && tag != sc.regime.tag) continue;
        const PhasePredictions p = phase_predictions(sc, cfg.params, c, tag);
        preds[regime_name(tag)] = {{"x1_t1", window_json(p.x1_t1)},
                                   {"x2_t1", window_json(p.x2_t1)},
                                   {"x3_t1_scaled", window_json(p.x3_t1_scaled)},
                                   {"x3_t1_scale", p.x3_t1_scale},
                                   {"x1_t2", window_json(p.x1_t2)},
                                   {"x2_t2", window_json(p.x2_t2)},
                                   {"x3_t3", window_json(p.x3_t3)},
                                   {"x0_t3_upper", num(p.x0_t3_upper)},
                                   {"x3_t4", window_json(p.x3_t4)},
                                   {"x12_t4_lower", num(p.x12_t4_lower)}};
    }
    j["predictions"] = preds;
    emit(cfg, j.dump(2) + "\n");
    return kOk;
}

int cmd_phase_check(const ExperimentConfig& cfg) {
    const PhaseCheckReport rep = phase_check(cfg);
    ordered_json j;
    j["regime"] = regime_name(rep.plan.regime);
    j["regime_source"] = cfg.regime;
    j["window_slack"] = rep.plan.window_slack;
    j["replicates"] = rep.replicates;
    ordered_json ws = ordered_json::array();
    for (const auto& w : rep.windows) {
        ws.push_back({{"name", w.name},
                      {"time", num(w.time)},
                      {"time_before_start", w.time < 0.0},
                      {"lo", num(w.lo)},
                      {"hi", num(w.hi)},
                      {"inside", w.inside},
                      {"fraction", w.fraction()},
                      {"probability_floor", w.floor}});
    }
    j["windows"] = ws;
    j["both_t2_fraction"] = rep.replicates ? static_cast<double>(rep.both_t2) / static_cast<double>(rep.replicates) : 0.0;
    j["symmetry_p_t1"] = rep.symmetry_p_t1;
    j["symmetry_p_t2"] = rep.symmetry_p_t2;
    emit(cfg, j.dump(2) + "\n");
    return kOk;
}

int cmd_ode_compare(const ExperimentConfig& cfg) {
    const OdeCompareReport rep = ode_compare(cfg);
    ordered_json j;
    j["window"] = {{"lo", rep.window.lo}, {"hi", rep.window.hi}, {"t1", rep.window.t1},
                   {"t2", rep.window.t2}, {"clamped_to_zero", rep.window.clamped}, {"step", rep.window.step}};
    j["epsilon0"] = rep.epsilon0;
    j["lipschitz_k"] = rep.lipschitz_k;
    j["L"] = rep.L;
    j["bound"] = rep.bound;
    j["bound_unclamped"] = num(rep.bound_raw);
    j["exceedances"] = rep.exceed;
    j["frequency"] = rep.frequency;
    j["se"] = rep.se;
    j["within_bound"] = rep.within_bound();
    j["median_deviation"] = num(median(rep.deviations));
    j["deviations"] = rep.deviations;
    emit(cfg, j.dump(2) + "\n");
    return kOk;
}

int cmd_validate(const ExperimentConfig& cfg) {
    const ValidationReport rep = validate_parameters(cfg.params, cfg.ratio_threshold);
    std::ostringstream os;
    os << std::left << std::setw(20) << "ratio" << std::setw(26) << "value" << std::setw(12) << "threshold"
       << "verdict\n";
    for (const auto& c : rep.checks)
        os << std::setw(20) << c.name << std::setw(26) << format_double(c.value) << std::setw(12)
           << format_double(c.threshold) << (c.pass ? "pass" : "warn") << '\n';
    for (const auto& w : rep.warnings) os << "warning: " << w << '\n';
    if (cfg.params.mutation_rate > 0.0) {
        const Regime reg = classify_regime(cfg.params, cfg.thresholds);
        os << "regime: " << regime_name(reg.tag) << " (rho = " << format_double(reg.rho) << ")\n";
        os << "t_star: " << format_double(t_star(cfg.params)) << '\n';
    }
    emit(cfg, os.str());
    return kOk;
}

int cmd_constants(const ExperimentConfig& cfg) {
    check_experiment(cfg);
    require_mutation(cfg);
    const ConstantChain c = derive_constants(cfg.epsilon, cfg.delta, cfg.params, cfg.chain_slack, cfg.thresholds);
    std::ostringstream os;
    os << "epsilon = " << format_double(c.epsilon) << ", delta = " << format_double(c.delta)
       << ", slack = " << format_double(c.slack) << '\n';
    bool all = true;
    for (const auto& r : chain_relations(c, cfg.params, cfg.thresholds)) {
        os << std::left << std::setw(20) << r.name << std::setw(24) << format_double(r.lhs) << std::setw(24)
           << format_double(r.rhs) << (r.satisfied ? "ok   " : "FAIL ") << r.relation << '\n';
        all = all && r.satisfied;
    }
    os << (all ? "all relations satisfied\n" : "some relations FAILED\n");
    emit(cfg, os.str());
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Two-locus Moran model: exact simulation, fixation-time predictions and phase checks"};
    app.require_subcommand(1);

    std::vector<std::pair<std::string, std::string>> flags;
    std::string config_path;

    struct Opt {
        const char* flag;
        const char* help;
    };
    const std::vector<Opt> options{
        {"n", "population size N"},
        {"mu", "mutation rate per allele (accepts 10^x)"},
        {"s", "selection coefficient"},
        {"r", "recombination probability"},
        {"seed", "master seed"},
        {"replicates", "number of replicates"},
        {"threads", "worker threads (default: $TWOLOCUS_THREADS or all cores)"},
        {"out", "output directory (simulate, sweep) or file (other commands)"},
        {"sample-dt", "trajectory sampling interval"},
        {"max-time", "stop each run at this time"},
        {"max-events", "stop each run after this many events"},
        {"preset", "theorem-check | figure-1"},
        {"r-values", "sweep points: comma list or lo:hi:count"},
        {"initial", "initial counts x0,x1,x2,x3"},
        {"epsilon", "proof constant epsilon (default 1/32)"},
        {"delta", "proof constant delta (default 1/8)"},
        {"chain-slack", "relative margin above strict lower bounds (default 0.01)"},
        {"regime", "auto | recombination | mutation"},
        {"regime-hi", "rho above this is recombination dominating (default 10)"},
        {"regime-lo", "rho at or below this is mutation dominating (default 1)"},
        {"window-slack", "widening factor for phase windows (default 2)"},
        {"eps0", "deviation threshold for ode-compare (default delta^4/4)"},
        {"ode-step", "RK4 step in units of 1/s (default 1e-3)"},
        {"ratio-threshold", "validate threshold (default 0.25)"},
    };

    const std::vector<std::pair<const char*, const char*>> commands{
        {"simulate", "run independent replicates and summarize fixation times"},
        {"sweep", "simulate at each r of a sweep"},
        {"tstar-curve", "predicted fixation time as a function of r"},
        {"phases", "phase schedule and proposition windows"},
        {"phase-check", "fraction of replicates inside each phase window"},
        {"ode-compare", "sup-distance between simulated paths and the fluid limit"},
        {"validate", "finite-N values of the asymptotic ratios"},
        {"constants", "proof constants with every defining relation checked"},
    };

    for (const auto& [name, help] : commands) {
        CLI::App* sub = app.add_subcommand(name, help);
        for (const auto& o : options) {
            const std::string key = o.flag;
            sub->add_option_function<std::string>(
                "--" + key, [&flags, key](const std::string& v) { flags.emplace_back(key, v); }, o.help);
        }
        sub->add_flag_callback("--track-lineage", [&flags] { flags.emplace_back("track-lineage", "true"); },
                               "record lineage subtypes");
        sub->add_option("--config", config_path, "key=value settings file; flags override it");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfig;
    }

    try {
        const auto file = config_path.empty() ? std::vector<std::pair<std::string, std::string>>{}
                                              : read_config_file(config_path);
        const ExperimentConfig cfg = build_config(file, flags);
        const std::string cmd = app.get_subcommands().front()->get_name();
        if (cmd == "simulate") return cmd_simulate(cfg);
        if (cmd == "sweep") return cmd_sweep(cfg);
        if (cmd == "tstar-curve") return cmd_tstar_curve(cfg);
        if (cmd == "phases") return cmd_phases(cfg);
        if (cmd == "phase-check") return cmd_phase_check(cfg);
        if (cmd == "ode-compare") return cmd_ode_compare(cfg);
        if (cmd == "validate") return cmd_validate(cfg);
        if (cmd == "constants") return cmd_constants(cfg);
        return kConfig;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kIo;
    } catch (const ScheduleError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kSchedule;
    } catch (const std::invalid_argument& e) {
        // ConfigError, DomainError, InvalidLedger
        std::cerr << "error: " << e.what() << '\n';
        return kConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
