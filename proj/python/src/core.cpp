#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "twolocus/analytics.hpp"
#include "twolocus/errors.hpp"
#include "twolocus/fluid.hpp"
#include "twolocus/harness.hpp"
#include "twolocus/model.hpp"
#include "twolocus/simulator.hpp"
#include "twolocus/stochastic_tools.hpp"

namespace py = pybind11;
using namespace twolocus;

namespace {

Parameters make_params(std::int64_t n, double mu, double s, double r) {
    Parameters p{n, mu, s, r};
    check_parameters(p);
    return p;
}

py::dict run_dict(const ReplicateSummary& run) {
    py::dict d;
    d["seed"] = run.seed;
    d["termination"] = termination_name(run.termination);
    d["fixation_time"] = run.fixation_time ? py::cast(*run.fixation_time) : py::none();
    d["events"] = run.event_count;
    py::list times, counts;
    for (const auto& s : run.samples) {
        times.append(s.time);
        counts.append(py::make_tuple(s.state.x[0], s.state.x[1], s.state.x[2], s.state.x[3]));
    }
    d["times"] = times;
    d["counts"] = counts;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Two-locus Moran model: simulation and analytic predictions";

    static py::exception<ScheduleError> schedule_error(m, "ScheduleError", PyExc_RuntimeError);
    static py::exception<IoError> io_error(m, "IoError", PyExc_OSError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const ScheduleError& e) {
            schedule_error(e.what());
        } catch (const IoError& e) {
            io_error(e.what());
        }
    });

    py::class_<Parameters>(m, "Parameters")
        .def(py::init(&make_params), py::arg("n"), py::arg("mu"), py::arg("s"), py::arg("r") = 0.0)
        .def_readonly("n", &Parameters::n_individuals)
        .def_readonly("mu", &Parameters::mutation_rate)
        .def_readonly("s", &Parameters::selection)
        .def_readonly("r", &Parameters::recombination_prob)
        .def("__repr__", [](const Parameters& p) {
            return "Parameters(n=" + std::to_string(p.n_individuals) + ", mu=" + format_double(p.mutation_rate) +
                   ", s=" + format_double(p.selection) + ", r=" + format_double(p.recombination_prob) + ")";
        });

    m.def("t_star", &t_star, py::arg("params"));
    m.def(
        "classify_regime",
        [](const Parameters& p, double hi, double lo) {
            const Regime reg = classify_regime(p, {hi, lo});
            return py::make_tuple(regime_name(reg.tag), reg.rho);
        },
        py::arg("params"), py::arg("hi") = 10.0, py::arg("lo") = 1.0);
    m.def(
        "phase_times",
        [](const Parameters& p, double epsilon, double delta) {
            const ConstantChain c = derive_constants(epsilon, delta, p);
            const PhaseSchedule sc = phase_schedule(p, c);
            py::dict d;
            d["t0r"] = sc.t0r;
            d["t0m"] = sc.t0m;
            d["t0m_plus"] = sc.t0m_plus;
            d["t1"] = sc.t1;
            d["t2"] = sc.t2;
            d["t3_recombination"] = sc.t3_r;
            d["t3_mutation"] = sc.t3_m;
            d["t4_recombination"] = sc.t4_r;
            d["t4_mutation"] = sc.t4_m;
            d["ordering_violations"] = sc.ordering_violations;
            return d;
        },
        py::arg("params"), py::arg("epsilon") = 1.0 / 32, py::arg("delta") = 1.0 / 8);

    m.def("bd_survival", &bd_survival, py::arg("g"), py::arg("t"), py::arg("initial") = 1);
    m.def("ruin_before", &ruin_before, py::arg("L"), py::arg("start"), py::arg("q"));

    m.def(
        "simulate",
        [](const Parameters& p, std::uint64_t seed, std::optional<double> sample_dt, double max_time) {
            SimConfig c;
            c.params = p;
            c.seed = seed;
            c.sample_interval = sample_dt;
            c.max_time = max_time;
            ReplicateSummary r;
            {
                py::gil_scoped_release release;
                r = run(c);
            }
            return run_dict(r);
        },
        py::arg("params"), py::arg("seed") = 1, py::arg("sample_dt") = py::none(),
        py::arg("max_time") = std::numeric_limits<double>::infinity());

    m.def(
        "fixation_times",
        [](const Parameters& p, std::int64_t replicates, std::uint64_t master_seed, int threads) {
            ExperimentConfig cfg;
            cfg.params = p;
            cfg.replicates = replicates;
            cfg.master_seed = master_seed;
            cfg.threads = threads;
            std::vector<ReplicateSummary> runs;
            {
                py::gil_scoped_release release;
                runs = run_replicates(cfg);
            }
            std::vector<std::optional<double>> out;
            for (const auto& r : runs) out.push_back(r.fixation_time);
            return out;
        },
        py::arg("params"), py::arg("replicates"), py::arg("master_seed") = 1, py::arg("threads") = 0);

    m.def(
        "integrate",
        [](std::array<double, 3> x0, const Parameters& p, double t0, double t1, double step, bool selection_only) {
            const OdeSolution sol = integrate({x0[0], x0[1], x0[2]}, p, t0, t1, step,
                                              selection_only ? Field::selection_only : Field::full_beta);
            std::vector<std::array<double, 3>> values;
            for (const auto& v : sol.values) values.push_back({v.xi1, v.xi2, v.xi3});
            return py::make_tuple(sol.grid, values);
        },
        py::arg("x0"), py::arg("params"), py::arg("t0"), py::arg("t1"), py::arg("step"),
        py::arg("selection_only") = false);
}
