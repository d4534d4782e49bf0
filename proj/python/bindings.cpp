// Python bindings. Tasks, metrics, corpora and loss specs cross the boundary
// as plain dicts in the same JSON shapes the CLI reads and writes.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "opsizer/eval.hpp"
#include "opsizer/io.hpp"
#include "opsizer/sim.hpp"
#include "opsizer/sizing.hpp"

namespace py = pybind11;
using namespace opsizer;

namespace {

Json to_json(const py::handle& obj) {
    const auto text = py::module_::import("json").attr("dumps")(obj).cast<std::string>();
    return Json::parse(text);
}

py::object from_json(const Json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

RequirementSet task_arg(const py::handle& task) {
    auto j = to_json(task);
    // bare requirement maps are accepted too
    if (!j.contains("requirements")) j = Json{{"name", ""}, {"requirements", j}};
    if (!j.contains("name")) j["name"] = "";
    return task_from_json(j);
}

MetricCorpus corpus_arg(const py::handle& rows) {
    std::vector<MetricVector> v;
    for (const auto& row : rows) v.push_back(metrics_from_json(to_json(row)));
    return MetricCorpus::from_vectors(v);
}

MetricCorpus bootstrap_rows(std::size_t runs, std::uint64_t seed, std::size_t threads) {
    SurrogateSimulator sim;
    BootstrapConfig bc;
    bc.runs = runs;
    bc.seed = seed;
    bc.threads = threads;
    py::gil_scoped_release release;
    return bootstrap_corpus(sim, reference_requirements(), DeConfig{}, bc).corpus;
}

MetricCorpus corpus_or_bootstrap(const py::object& corpus, std::uint64_t seed) {
    if (corpus.is_none()) return bootstrap_rows(10, seed, 1);
    return corpus_arg(corpus);
}

SizingConfig sizing_config(std::uint64_t seed, const std::string& loss_mode, std::size_t feedback_rounds,
                           std::size_t de_iterations, std::size_t pso_iterations, std::size_t stuck,
                           std::size_t candidates, std::size_t threads) {
    SizingConfig c;
    c.de.seed = seed;
    c.pso.seed = seed;
    c.de.max_iterations = de_iterations;
    c.de.candidates = candidates;
    c.pso.max_iterations = pso_iterations;
    c.pso.stuck_threshold = stuck;
    c.feedback_rounds = feedback_rounds;
    c.threads = threads;
    if (loss_mode == "uniform") {
        c.loss_mode = LossMode::UniformQuadratic;
    } else if (loss_mode != "synthesized") {
        throw std::invalid_argument("loss_mode must be 'synthesized' or 'uniform'");
    }
    return c;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Op-amp sizing with EOA-weighted loss synthesis and DE + PSO search";

    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const FormatError& e) {
            PyErr_SetString(PyExc_ValueError, e.what());
        } catch (const Json::exception& e) {
            PyErr_SetString(PyExc_ValueError, e.what());
        }
    });

    m.def(
        "surrogate_model",
        [](double ib, double w1_l1, double w6_l6, double cc) {
            return from_json(metrics_to_json(surrogate_model({ib, w1_l1, w6_l6, cc})));
        },
        py::arg("ib"), py::arg("w1_l1"), py::arg("w6_l6"), py::arg("cc"),
        "Metrics of the analytic two-stage op-amp (ib in uA, cc in pF).");

    m.def("default_suite", [] {
        py::list out;
        for (const auto& t : default_suite()) {
            auto j = task_to_json(t.requirements);
            j["level"] = task_level_name(t.level);
            out.append(from_json(j));
        }
        return out;
    });

    m.def("reference_requirements", [] { return from_json(task_to_json(reference_requirements())); });

    m.def(
        "bootstrap",
        [](std::size_t runs, std::uint64_t seed, std::size_t threads) {
            const auto c = bootstrap_rows(runs, seed, threads);
            py::list out;
            for (const auto& row : c.rows()) out.append(from_json(metrics_to_json(row)));
            return out;
        },
        py::arg("runs") = 10, py::arg("seed") = 1, py::arg("threads") = 1,
        "Corpus rows from independent DE runs on the surrogate.");

    m.def(
        "build_profile",
        [](const py::object& corpus, const py::object& task) {
            return from_json(profile_to_json(build_profile(corpus_arg(corpus), task_arg(task))));
        },
        py::arg("corpus"), py::arg("task"));

    m.def(
        "synthesize_loss",
        [](const py::object& corpus, const py::object& task) {
            const auto req = task_arg(task);
            return from_json(loss_to_json(synthesize_loss(req, build_profile_or_uniform(corpus_arg(corpus), req))));
        },
        py::arg("corpus"), py::arg("task"));

    m.def(
        "uniform_quadratic_loss",
        [](const py::object& task) { return from_json(loss_to_json(uniform_quadratic_loss(task_arg(task)))); },
        py::arg("task"));

    m.def(
        "evaluate_loss",
        [](const py::object& loss, const py::object& metrics) {
            return evaluate_loss(loss_from_json(to_json(loss)), metrics_from_json(to_json(metrics)));
        },
        py::arg("loss"), py::arg("metrics"));

    m.def(
        "misses",
        [](const py::object& metrics, const py::object& task) {
            return check_satisfaction(metrics_from_json(to_json(metrics)), task_arg(task)).misses;
        },
        py::arg("metrics"), py::arg("task"));

    m.def(
        "compute_pfom",
        [](const py::object& metrics, const py::object& task) {
            return compute_pfom(metrics_from_json(to_json(metrics)), task_arg(task));
        },
        py::arg("metrics"), py::arg("task"));

    m.def(
        "size",
        [](const py::object& task, const py::object& corpus, std::uint64_t seed, const std::string& loss_mode,
           std::size_t feedback_rounds, std::size_t de_iterations, std::size_t pso_iterations, std::size_t stuck,
           std::size_t candidates, std::size_t threads) {
            const auto req = task_arg(task);
            const auto c = corpus_or_bootstrap(corpus, seed);
            const auto cfg = sizing_config(seed, loss_mode, feedback_rounds, de_iterations, pso_iterations, stuck,
                                           candidates, threads);
            SurrogateSimulator sim;
            SizingRun run;
            {
                py::gil_scoped_release release;
                run = run_sizing(req, sim, c, cfg);
            }
            return from_json(run_to_json(run));
        },
        py::arg("task"), py::arg("corpus") = py::none(), py::arg("seed") = 1, py::arg("loss_mode") = "synthesized",
        py::arg("feedback_rounds") = 3, py::arg("de_iterations") = 25, py::arg("pso_iterations") = 50,
        py::arg("stuck") = 10, py::arg("candidates") = 3, py::arg("threads") = 1,
        "One sizing run on the surrogate; returns the run record.");

    m.def(
        "bench",
        [](std::size_t reps, std::uint64_t seed, const py::object& corpus, const std::string& loss_mode,
           std::size_t feedback_rounds, std::size_t threads) {
            const auto c = corpus_or_bootstrap(corpus, seed);
            BenchConfig bc;
            bc.repetitions = reps;
            bc.seed = seed;
            bc.sizing = sizing_config(seed, loss_mode, feedback_rounds, 25, 50, 10, 3, threads);
            SurrogateSimulator sim;
            BenchReport report;
            {
                py::gil_scoped_release release;
                report = run_benchmark(default_suite(), sim, c, bc);
            }
            py::dict out = from_json(report_to_json(report));
            out["table"] = report_to_table(report);
            return out;
        },
        py::arg("reps") = 3, py::arg("seed") = 1, py::arg("corpus") = py::none(),
        py::arg("loss_mode") = "synthesized", py::arg("feedback_rounds") = 3, py::arg("threads") = 1,
        "T1-T5 on the surrogate; the report dict plus its text table under 'table'.");
}
