#include "opsizer/eval.hpp"

#include <cstdio>
#include <sstream>

namespace opsizer {

double compute_pfom(const MetricVector& m, const RequirementSet& req) {
    double total = 0.0;
    for (MetricId id : req.constrained()) {
        const Bound& b = *req.bounds[id];
        double val = m[id];
        const double target = b.reference();
        switch (id) {
            case MetricId::BW: val = val > 0.0 ? val : PfomFloors::bw; break;
            case MetricId::Gain: val = val > 0.0 ? val : PfomFloors::gain; break;
            case MetricId::SR: val = val > 0.0 ? val : PfomFloors::sr; break;
            case MetricId::PM:
                if (val > 90.0) val = 150.0 - val;
                val = val > 0.0 ? val : PfomFloors::pm;
                break;
            case MetricId::IDC:
                if (val == 0.0) continue;
                total -= (val - target) / val;
                continue;
        }
        total += (val - target) / val;
    }
    return total;
}

double compute_pfom(const SimOutcome& o, const RequirementSet& req) {
    return compute_pfom(o.feasible() ? o.metrics() : MetricVector{}, req);
}

std::string_view task_level_name(TaskLevel l) {
    switch (l) {
        case TaskLevel::Easy: return "easy";
        case TaskLevel::Mid: return "mid";
        case TaskLevel::Hard: return "hard";
    }
    return "?";
}

TaskSuite default_suite() {
    auto make = [](std::string name, double bw, double gain, double sr, double idc, TaskLevel level) {
        RequirementSet r;
        r.name = std::move(name);
        r.bounds[MetricId::BW] = Bound::at_least(bw);
        r.bounds[MetricId::Gain] = Bound::at_least(gain);
        r.bounds[MetricId::PM] = Bound::in_range(60.0, 90.0);
        if (sr > 0.0) r.bounds[MetricId::SR] = Bound::at_least(sr);
        if (idc > 0.0) r.bounds[MetricId::IDC] = Bound::at_most(idc);
        return Task{std::move(r), level};
    };
    return {
        make("T1", 5e3, 1e3, 0.0, 0.0, TaskLevel::Easy),
        make("T2", 20e3, 1e3, 3.0, 0.0, TaskLevel::Mid),
        make("T3", 5e3, 2e3, 3.0, 0.0, TaskLevel::Mid),
        make("T4", 5e3, 1e3, 10.0, 300.0, TaskLevel::Mid),
        make("T5", 20e3, 2e3, 10.0, 300.0, TaskLevel::Hard),
    };
}

TaskStats aggregate(std::span<const SizingRun> runs, const RequirementSet& req) {
    if (runs.empty()) throw std::invalid_argument("aggregate: no runs");
    TaskStats s;
    std::size_t successes = 0;
    for (const auto& r : runs) {
        s.ast += static_cast<double>(r.evaluations);
        s.mean_pfom += compute_pfom(r.best_outcome, req);
        s.mean_ms += static_cast<double>(check_satisfaction(r.best_outcome, req).misses);
        successes += r.status == RunStatus::Success ? 1 : 0;
    }
    const double n = static_cast<double>(runs.size());
    s.ast /= n;
    s.mean_pfom /= n;
    s.mean_ms /= n;
    s.adsr = 100.0 * static_cast<double>(successes) / n;
    s.runs = runs.size();
    return s;
}

bool BenchReport::all_aborted() const {
    for (const auto& t : tasks) {
        for (const auto& r : t.runs) {
            if (!r.aborted && r.status != RunStatus::SimulatorFailure) return false;
        }
    }
    return true;
}

SizingConfig seeded_config(const SizingConfig& base, std::uint64_t master, std::size_t task_index,
                           std::size_t rep) {
    SizingConfig c = base;
    c.de.seed = derive_seed(master, task_index, rep, 0);
    c.pso.seed = derive_seed(master, task_index, rep, 1);
    return c;
}

BenchReport run_benchmark(const TaskSuite& suite, const Simulator& sim, const MetricCorpus& corpus,
                          const BenchConfig& cfg, std::vector<SizingRun>* runs_out) {
    if (cfg.repetitions == 0) throw std::invalid_argument("benchmark repetitions must be >= 1");
    if (suite.empty()) throw std::invalid_argument("benchmark suite is empty");

    BenchReport report;
    report.repetitions = cfg.repetitions;
    report.seed = cfg.seed;

    TaskStats sum;
    std::size_t with_stats = 0;
    for (std::size_t ti = 0; ti < suite.size(); ++ti) {
        const auto& task = suite[ti];
        TaskReport tr;
        tr.task = task.requirements.name;
        tr.level = task.level;
        std::vector<SizingRun> done;

        for (std::size_t rep = 0; rep < cfg.repetitions; ++rep) {
            const auto sc = seeded_config(cfg.sizing, cfg.seed, ti, rep);
            RunSummary s;
            s.repetition = rep;
            s.seed = sc.de.seed;
            try {
                auto run = run_sizing(task.requirements, sim, corpus, sc);
                s.status = run.status;
                s.evaluations = run.evaluations;
                s.misses = run.best_misses;
                s.pfom = run.best_pfom;
                s.feedback_rounds = run.feedback_count();
                if (run.best_outcome.feasible()) s.best_metrics = run.best_outcome.metrics();
                s.diagnostic = run.diagnostic;
                if (run.status == RunStatus::SimulatorFailure)
                    tr.failures.push_back("rep " + std::to_string(rep) + ": " + run.diagnostic);
                done.push_back(std::move(run));
            } catch (const std::exception& e) {
                s.aborted = true;
                s.diagnostic = e.what();
                tr.failures.push_back("rep " + std::to_string(rep) + " aborted: " + e.what());
            }
            tr.runs.push_back(std::move(s));
        }

        if (!done.empty()) {
            tr.stats = aggregate(done, task.requirements);
            sum.ast += tr.stats->ast;
            sum.adsr += tr.stats->adsr;
            sum.mean_pfom += tr.stats->mean_pfom;
            sum.mean_ms += tr.stats->mean_ms;
            sum.runs += tr.stats->runs;
            ++with_stats;
        }
        if (runs_out) {
            for (auto& r : done) runs_out->push_back(std::move(r));
        }
        report.tasks.push_back(std::move(tr));
    }
    if (with_stats > 0) {
        const double n = static_cast<double>(with_stats);
        sum.ast /= n;
        sum.adsr /= n;
        sum.mean_pfom /= n;
        sum.mean_ms /= n;
        report.average = sum;
    }
    return report;
}

namespace {

Json stats_to_json(const std::optional<TaskStats>& s) {
    if (!s) return nullptr;
    return {{"ast", s->ast}, {"adsr", s->adsr}, {"pfom", s->mean_pfom}, {"ms", s->mean_ms}, {"runs", s->runs}};
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

}  // namespace

Json report_to_json(const BenchReport& report) {
    Json tasks = Json::array();
    for (const auto& t : report.tasks) {
        Json runs = Json::array();
        for (const auto& r : t.runs) {
            Json jr = {{"repetition", r.repetition},
                       {"seed", r.seed},
                       {"aborted", r.aborted},
                       {"status", r.aborted ? "aborted" : std::string(status_name(r.status))},
                       {"evaluations", r.evaluations},
                       {"misses", r.misses},
                       {"pfom", r.pfom},
                       {"feedback_rounds", r.feedback_rounds},
                       {"best_metrics", r.best_metrics ? metrics_to_json(*r.best_metrics) : Json(nullptr)}};
            if (!r.diagnostic.empty()) jr["diagnostic"] = r.diagnostic;
            runs.push_back(std::move(jr));
        }
        tasks.push_back({{"task", t.task},
                         {"level", task_level_name(t.level)},
                         {"stats", stats_to_json(t.stats)},
                         {"failures", t.failures},
                         {"runs", std::move(runs)}});
    }
    return {{"repetitions", report.repetitions},
            {"seed", report.seed},
            {"tasks", std::move(tasks)},
            {"average", stats_to_json(report.average)}};
}

std::string report_to_table(const BenchReport& report) {
    std::ostringstream out;
    char line[128];
    std::snprintf(line, sizeof line, "%-6s %-6s %-6s %14s\n", "Task", "Level", "Metric", "Value");
    out << line;
    auto block = [&](const std::string& name, std::string_view level, const std::optional<TaskStats>& s) {
        const std::array<std::pair<const char*, std::string>, 4> rows{{
            {"AST", s ? fmt("%.1f", s->ast) : "n/a"},
            {"ADSR", s ? fmt("%.1f%%", s->adsr) : "n/a"},
            {"PFoM", s ? fmt("%.3f", s->mean_pfom) : "n/a"},
            {"MS", s ? fmt("%.2f", s->mean_ms) : "n/a"},
        }};
        for (std::size_t i = 0; i < rows.size(); ++i) {
            std::snprintf(line, sizeof line, "%-6s %-6s %-6s %14s\n", i == 0 ? name.c_str() : "",
                          i == 0 ? std::string(level).c_str() : "", rows[i].first, rows[i].second.c_str());
            out << line;
        }
    };
    for (const auto& t : report.tasks) block(t.task, task_level_name(t.level), t.stats);
    block("Avg", "", report.average);
    for (const auto& t : report.tasks) {
        for (const auto& f : t.failures) out << t.task << ": " << f << "\n";
    }
    return out.str();
}

Json run_to_json(const SizingRun& run) {
    Json point = nullptr;
    if (run.best_point) {
        point = Json::object();
        for (std::size_t i = 0; i < run.space.dim(); ++i) point[run.space.param(i).name] = run.best_point->values[i];
    }
    Json losses = Json::array();
    for (const auto& s : run.loss_history) losses.push_back(loss_to_json(s));
    Json rounds = Json::array();
    for (const auto& r : run.rounds) {
        Json reasons = Json::array();
        for (auto s : r.stuck_reasons) reasons.push_back(stuck_reason_name(s));
        Json jr = {{"round", r.index},           {"stuck", r.stuck},   {"stuck_reasons", std::move(reasons)},
                   {"iterations", r.iterations}, {"solved", r.solved}};
        if (r.feedback) {
            jr["feedback"] = {{"revision_before", r.feedback->revision_before},
                              {"revision_after", r.feedback->revision_after},
                              {"best_metrics", metrics_to_json(r.feedback->best_metrics)},
                              {"deviations", r.feedback->deviations},
                              {"scales_before", r.feedback->scales_before},
                              {"scales_after", r.feedback->scales_after}};
        }
        rounds.push_back(std::move(jr));
    }
    Json j = {{"task", run.task},
              {"requirements", requirements_to_json(run.requirements)},
              {"status", status_name(run.status)},
              {"evaluations", run.evaluations},
              {"de_evaluations", run.de_evaluations},
              {"infeasible_evaluations", run.infeasible_evaluations},
              {"best_point", std::move(point)},
              {"best_outcome", outcome_to_json(run.best_outcome)},
              {"misses", run.best_misses},
              {"pfom", run.best_pfom},
              {"profile", profile_to_json(run.profile)},
              {"profile_fell_back", run.profile_fell_back},
              {"loss_history", std::move(losses)},
              {"rounds", std::move(rounds)}};
    if (!run.diagnostic.empty()) j["diagnostic"] = run.diagnostic;
    if (!run.generator_warning.empty()) j["generator_warning"] = run.generator_warning;
    return j;
}

std::string trajectory_csv(const SizingRun& run) {
    std::string out = "iteration,best_loss,miss_count,revision\n";
    for (const auto& r : run.trajectory) {
        out += std::to_string(r.iteration) + "," + format_double(r.best_loss) + "," + std::to_string(r.miss_count) +
               "," + std::to_string(r.revision) + "\n";
    }
    return out;
}

}  // namespace opsizer
