// opsizer: corpus bootstrap, single sizing runs, benchmarks and EOA reports.

#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "opsizer/eval.hpp"
#include "opsizer/io.hpp"
#include "opsizer/sim.hpp"
#include "opsizer/sizing.hpp"

namespace fs = std::filesystem;
using namespace opsizer;

namespace {

enum ExitCode { kOk = 0, kSizingFailed = 1, kUsage = 2, kEnvironment = 3 };

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Settings {
    std::string config;

    std::string backend = "surrogate";
    std::string netlist;
    std::string ngspice_bin = "ngspice";
    double sim_timeout = 30.0;
    std::string space;

    std::uint64_t seed = 1;
    std::size_t threads = 0;
    std::size_t de_pop = 30;
    std::size_t de_iters = 25;
    std::string de_strategy = "best1bin";
    double de_f = 0.5;
    double de_cr = 0.9;
    std::size_t candidates = 3;
    std::size_t swarm = 20;
    std::size_t pso_iters = 50;
    std::size_t stuck = 10;
    std::size_t feedback_rounds = 3;
    std::string loss_mode = "synthesized";
    std::string generator = "rule-based";
    std::string generator_cmd;
    std::string generator_url;
    double generator_timeout = 30.0;

    std::string corpus;
    std::size_t bootstrap_runs = 10;
    std::size_t runs = 10;
    std::string task;
    std::string suite = "default";
    std::size_t reps = 3;
    std::size_t samples = 0;
    std::string output;
    std::string summary;
    std::string trajectory;
    bool trajectories = false;
};

// Flags bound to Settings fields, each with a config-file key. Config values
// are applied after parsing, and only where the flag was not given.
class Bindings {
public:
    template <class T>
    CLI::Option* add(CLI::App& app, const std::string& flags, const std::string& key, T& field,
                     const std::string& help) {
        auto* opt = app.add_option(flags, field, help)->capture_default_str();
        if (!key.empty()) {
            known_.insert(key);
            entries_.push_back({key, &app, opt, [&field](const Json& v) { field = v.get<T>(); }});
        }
        return opt;
    }

    void apply(const Json& cfg) const {
        if (!cfg.is_object()) throw UsageError("config file must hold a JSON object");
        check_keys(cfg, "");
        for (const auto& e : entries_) {
            const Json::json_pointer ptr(e.key);
            if (e.app->parsed() && e.opt->count() == 0 && cfg.contains(ptr)) {
                try {
                    e.set(cfg.at(ptr));
                } catch (const Json::exception&) {
                    throw UsageError("config key " + e.key + " has the wrong type");
                }
            }
        }
    }

private:
    struct Entry {
        std::string key;
        CLI::App* app;
        CLI::Option* opt;
        std::function<void(const Json&)> set;
    };

    void check_keys(const Json& j, const std::string& prefix) const {
        for (const auto& [k, v] : j.items()) {
            const auto key = prefix + "/" + k;
            if (v.is_object()) {
                check_keys(v, key);
            } else if (!known_.contains(key)) {
                throw UsageError("unknown config key " + key);
            }
        }
    }

    std::vector<Entry> entries_;
    std::set<std::string> known_;
};

void add_simulator_flags(CLI::App& app, Settings& s, Bindings& b) {
    b.add(app, "--backend", "/backend", s.backend, "Simulator backend")
        ->check(CLI::IsMember({"surrogate", "ngspice"}));
    b.add(app, "--netlist", "/netlist", s.netlist, "Netlist template with {{param}} placeholders (ngspice)");
    b.add(app, "--ngspice-bin", "/ngspice_bin", s.ngspice_bin, "ngspice executable");
    b.add(app, "--sim-timeout", "/sim_timeout", s.sim_timeout, "Per-simulation timeout in seconds")
        ->check(CLI::PositiveNumber);
    b.add(app, "--space", "/space", s.space, "Design space JSON (default: the surrogate op-amp space)");
}

void add_de_flags(CLI::App& app, Settings& s, Bindings& b) {
    b.add(app, "--de-pop", "/de/population", s.de_pop, "DE population size");
    b.add(app, "--de-iters", "/de/max_iterations", s.de_iters, "DE iterations, initialisation included");
    b.add(app, "--de-strategy", "/de/strategy", s.de_strategy, "DE mutation strategy")
        ->check(CLI::IsMember({"best1bin", "rand1bin"}));
    b.add(app, "--de-f", "/de/f", s.de_f, "DE differential weight");
    b.add(app, "--de-cr", "/de/cr", s.de_cr, "DE crossover rate");
}

void add_corpus_flags(CLI::App& app, Settings& s, Bindings& b) {
    b.add(app, "--corpus", "/corpus", s.corpus, "Corpus CSV; bootstrapped in-process when absent");
    b.add(app, "--bootstrap-runs", "/bootstrap_runs", s.bootstrap_runs, "DE runs for an in-process corpus")
        ->check(CLI::PositiveNumber);
}

void add_search_flags(CLI::App& app, Settings& s, Bindings& b) {
    add_de_flags(app, s, b);
    b.add(app, "--candidates", "/de/candidates", s.candidates, "DE candidates handed to PSO");
    b.add(app, "--swarm", "/pso/swarm", s.swarm, "PSO swarm size");
    b.add(app, "--pso-iters", "/pso/max_iterations", s.pso_iters, "PSO iteration budget per process");
    b.add(app, "--stuck", "/pso/stuck_threshold", s.stuck, "PSO iterations without progress before stuck");
    b.add(app, "--feedback-rounds", "/feedback_rounds", s.feedback_rounds, "Loss feedback rounds");
    b.add(app, "--loss-mode", "/loss_mode", s.loss_mode, "Loss construction")
        ->check(CLI::IsMember({"synthesized", "uniform"}));
    b.add(app, "--generator", "/generator/kind", s.generator, "Loss generator backend")
        ->check(CLI::IsMember({"rule-based", "external"}));
    b.add(app, "--generator-cmd", "/generator/command", s.generator_cmd,
          "External generator command (request on stdin, response on stdout)");
    b.add(app, "--generator-url", "/generator/url", s.generator_url, "External generator HTTP endpoint");
    b.add(app, "--generator-timeout", "/generator/timeout", s.generator_timeout, "External generator timeout (s)")
        ->check(CLI::PositiveNumber);
    add_corpus_flags(app, s, b);
}

void add_common_flags(CLI::App& app, Settings& s, Bindings& b) {
    app.add_option("--config", s.config, "JSON config file; flags override its values")
        ->check(CLI::ExistingFile);
    b.add(app, "--seed", "/seed", s.seed, "Master seed");
    b.add(app, "--threads", "/threads", s.threads, "Worker threads (0: one per PSO process / per core)");
    add_simulator_flags(app, s, b);
}

std::chrono::milliseconds seconds_to_ms(double s) {
    return std::chrono::milliseconds(static_cast<long long>(s * 1000.0));
}

std::unique_ptr<Simulator> build_simulator(const Settings& s) {
    SimulatorConfig sc;
    if (s.backend == "surrogate") {
        sc.backend = Backend::Surrogate;
        return make_simulator(sc);
    }
    if (s.netlist.empty()) throw UsageError("--backend ngspice needs --netlist");
    sc.backend = Backend::Ngspice;
    sc.ngspice.netlist_template = s.netlist;
    sc.ngspice.ngspice_bin = s.ngspice_bin;
    sc.ngspice.timeout = seconds_to_ms(s.sim_timeout);
    const auto space = s.space.empty() ? surrogate_space() : load_space(s.space);
    return make_simulator(sc, &space);
}

DeConfig de_config(const Settings& s) {
    DeConfig de;
    de.population = s.de_pop;
    de.max_iterations = s.de_iters;
    de.strategy = *parse_de_strategy(s.de_strategy);
    de.f = s.de_f;
    de.cr = s.de_cr;
    de.candidates = s.candidates;
    de.seed = s.seed;
    de.validate();
    return de;
}

SizingConfig sizing_config(const Settings& s) {
    SizingConfig c;
    c.de = de_config(s);
    c.pso.swarm = s.swarm;
    c.pso.max_iterations = s.pso_iters;
    c.pso.stuck_threshold = s.stuck;
    c.pso.seed = s.seed;
    c.pso.validate();
    c.loss_mode = s.loss_mode == "uniform" ? LossMode::UniformQuadratic : LossMode::Synthesized;
    c.feedback_rounds = s.feedback_rounds;
    c.threads = s.threads;
    if (s.generator == "external") {
        c.generator.kind = GeneratorKind::External;
        c.generator.command = s.generator_cmd;
        c.generator.url = s.generator_url;
        c.generator.timeout = seconds_to_ms(s.generator_timeout);
        if (s.generator_cmd.empty() && s.generator_url.empty())
            log_warning("--generator external without --generator-cmd or --generator-url; "
                        "the rule-based generator will be used");
    }
    return c;
}

std::size_t worker_count(std::size_t requested) {
    if (requested != 0) return requested;
    return std::max(1u, std::thread::hardware_concurrency());
}

BootstrapResult run_bootstrap(const Settings& s, const Simulator& sim, std::size_t runs) {
    BootstrapConfig bc;
    bc.runs = runs;
    bc.seed = s.seed;
    bc.threads = worker_count(s.threads);
    return bootstrap_corpus(sim, reference_requirements(), de_config(s), bc);
}

MetricCorpus obtain_corpus(const Settings& s, const Simulator& sim) {
    if (!s.corpus.empty()) return load_corpus(s.corpus);
    log_info("no --corpus given; bootstrapping " + std::to_string(s.bootstrap_runs) + " DE runs");
    return run_bootstrap(s, sim, s.bootstrap_runs).corpus;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::string profile_table(const EoaProfile& p, const RequirementSet& req) {
    std::ostringstream os;
    char line[128];
    std::snprintf(line, sizeof line, "%-6s %-22s %8s %8s  %s\n", "metric", "bound", "rank", "eoa", "difficulty");
    os << line;
    for (auto m : req.constrained()) {
        const auto& b = *req.bounds[m];
        std::string bound;
        switch (b.kind) {
        case BoundKind::AtLeast: bound = ">= " + fmt(b.lower); break;
        case BoundKind::AtMost: bound = "<= " + fmt(b.upper); break;
        case BoundKind::InRange: bound = "[" + fmt(b.lower) + ", " + fmt(b.upper) + "]"; break;
        }
        const auto& e = *p.entries[m];
        std::snprintf(line, sizeof line, "%-6s %-22s %8.4f %8.4f  %s\n", std::string(metric_name(m)).c_str(),
                      bound.c_str(), e.rank, e.eoa, std::string(difficulty_name(e.difficulty)).c_str());
        os << line;
    }
    return os.str();
}

std::string loss_table(const LossSpec& spec) {
    std::ostringstream os;
    os << "loss (" << provenance_name(spec.provenance) << ", revision " << spec.revision << ")\n";
    for (const auto& t : spec.terms) {
        os << "  " << metric_name(t.metric) << "  weight " << (t.weight > 0 ? "+1" : "-1") << "  threshold "
           << fmt(t.threshold) << "  exponent " << t.exponent << "  scale " << fmt(t.scale) << "\n";
    }
    return os.str();
}

std::string metrics_line(const MetricVector& m) {
    std::string out;
    for (auto id : {MetricId::BW, MetricId::Gain, MetricId::PM, MetricId::SR, MetricId::IDC}) {
        if (!out.empty()) out += "  ";
        out += std::string(metric_name(id)) + "=" + fmt(m[id]);
    }
    return out;
}

int cmd_bootstrap(const Settings& s) {
    if (s.output.empty()) throw UsageError("bootstrap needs -o <corpus.csv>");
    const auto sim = build_simulator(s);
    const auto r = run_bootstrap(s, *sim, s.runs);
    write_file_atomic(s.output, corpus_to_csv(r.corpus));

    const auto req = reference_requirements();
    bool fell_back = false;
    const auto profile = build_profile_or_uniform(r.corpus, req, &fell_back);
    const Json summary = {{"corpus", s.output},
                          {"samples", r.corpus.size()},
                          {"evaluations", r.evaluations},
                          {"infeasible", r.failures},
                          {"requirements", requirements_to_json(req)},
                          {"profile", profile_to_json(profile)},
                          {"profile_fell_back", fell_back}};
    const auto summary_path = s.summary.empty() ? s.output + ".summary.json" : s.summary;
    write_file_atomic(summary_path, summary.dump(2) + "\n");

    std::cout << "corpus   " << s.output << " (" << r.corpus.size() << " samples from " << r.evaluations
              << " simulations, " << r.failures << " infeasible)\n"
              << "summary  " << summary_path << "\n\n"
              << "EOA under the reference requirements" << (fell_back ? " (degenerate, uniform fallback)" : "")
              << ":\n"
              << profile_table(profile, req);
    return kOk;
}

int cmd_size(const Settings& s) {
    const auto task = load_task(s.task);
    const auto sim = build_simulator(s);
    const auto cfg = sizing_config(s);
    const auto corpus = obtain_corpus(s, *sim);
    const auto run = run_sizing(task, *sim, corpus, cfg);

    std::cout << "task         " << run.task << "\n"
              << "status       " << status_name(run.status) << "\n"
              << "evaluations  " << run.evaluations << " (DE " << run.de_evaluations << ", PSO "
              << run.evaluations - run.de_evaluations << ", infeasible " << run.infeasible_evaluations << ")\n"
              << "feedback     " << run.feedback_count() << " round(s)\n";
    if (run.best_point) {
        std::cout << "best point  ";
        for (std::size_t i = 0; i < run.space.dim(); ++i)
            std::cout << " " << run.space.param(i).name << "=" << fmt(run.best_point->values[i]);
        std::cout << "\n";
    }
    if (run.best_outcome.feasible()) std::cout << "metrics      " << metrics_line(run.best_outcome.metrics()) << "\n";
    std::cout << "misses       " << run.best_misses << "\n"
              << "PFoM         " << fmt(run.best_pfom) << "\n";
    if (!run.diagnostic.empty()) std::cout << "diagnostic   " << run.diagnostic << "\n";
    std::cout << "\n" << profile_table(run.profile, run.requirements) << loss_table(run.loss_history.back());

    if (!s.output.empty()) write_file_atomic(s.output, run_to_json(run).dump(2) + "\n");
    if (!s.trajectory.empty()) write_file_atomic(s.trajectory, trajectory_csv(run));

    switch (run.status) {
    case RunStatus::Success: return kOk;
    case RunStatus::BudgetExhausted: return kSizingFailed;
    case RunStatus::SimulatorFailure: return kEnvironment;
    }
    return kEnvironment;
}

TaskLevel parse_level(const std::string& name) {
    if (name == "easy") return TaskLevel::Easy;
    if (name == "mid") return TaskLevel::Mid;
    if (name == "hard") return TaskLevel::Hard;
    throw FormatError("unknown task level '" + name + "' (easy, mid, hard)");
}

// {"tasks": [<task>, ...]} where each task may carry "level".
TaskSuite load_suite(const std::string& spec) {
    if (spec == "default") return default_suite();
    Json j;
    try {
        j = Json::parse(read_file(spec));
    } catch (const Json::parse_error& e) {
        throw FormatError(spec + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("tasks") || !j["tasks"].is_array() || j["tasks"].empty())
        throw FormatError(spec + ": expected {\"tasks\": [...]} with at least one task");
    TaskSuite suite;
    for (const auto& t : j["tasks"]) {
        Task task;
        task.requirements = task_from_json(t);
        if (t.contains("level")) task.level = parse_level(t["level"].get<std::string>());
        suite.push_back(std::move(task));
    }
    return suite;
}

int cmd_bench(const Settings& s) {
    const auto suite = load_suite(s.suite);
    const auto sim = build_simulator(s);
    BenchConfig bc;
    bc.repetitions = s.reps;
    bc.seed = s.seed;
    bc.sizing = sizing_config(s);
    const auto corpus = obtain_corpus(s, *sim);

    std::vector<SizingRun> runs;
    const auto report = run_benchmark(suite, *sim, corpus, bc, s.trajectories ? &runs : nullptr);

    const fs::path dir = s.output.empty() ? fs::path("bench") : fs::path(s.output);
    fs::create_directories(dir);
    const auto table = report_to_table(report);
    write_file_atomic(dir / "report.json", report_to_json(report).dump(2) + "\n");
    write_file_atomic(dir / "report.txt", table);
    if (s.trajectories) {
        fs::create_directories(dir / "trajectories");
        std::map<std::string, std::size_t> seen;
        for (const auto& run : runs) {
            const auto rep = seen[run.task]++;
            write_file_atomic(dir / "trajectories" / (run.task + "-r" + std::to_string(rep) + ".csv"),
                              trajectory_csv(run));
        }
    }

    std::cout << table;
    for (const auto& t : report.tasks)
        for (const auto& f : t.failures) std::cerr << "opsizer: " << t.task << ": " << f << "\n";
    std::cout << "\nreports written to " << dir.string() << "\n";
    return report.all_aborted() ? kEnvironment : kOk;
}

int cmd_eoa_report(const Settings& s) {
    const auto base = s.task.empty() ? reference_requirements() : load_task(s.task);
    const auto sim = build_simulator(s);
    const auto corpus = obtain_corpus(s, *sim);

    if (s.samples == 0) {
        bool fell_back = false;
        const auto profile = build_profile_or_uniform(corpus, base, &fell_back);
        const auto loss = synthesize_loss(base, profile);
        std::cout << "task " << (base.name.empty() ? "(unnamed)" : base.name) << ", corpus of " << corpus.size()
                  << " samples" << (fell_back ? ", degenerate profile (uniform fallback)" : "") << "\n"
                  << profile_table(profile, base) << loss_table(loss);
        if (!s.output.empty()) {
            const Json j = {{"requirements", requirements_to_json(base)},
                            {"profile", profile_to_json(profile)},
                            {"profile_fell_back", fell_back},
                            {"loss", loss_to_json(loss)}};
            write_file_atomic(s.output, j.dump(2) + "\n");
        }
        return kOk;
    }

    // Dataset mode: random requirement settings around the task, one JSON
    // record per line.
    if (s.output.empty()) throw UsageError("eoa-report --samples needs -o <dataset.jsonl>");
    Rng rng(s.seed);
    std::string out;
    std::size_t degenerate = 0;
    for (std::size_t i = 0; i < s.samples; ++i) {
        auto req = sample_requirements(rng, base);
        req.name = "sample-" + std::to_string(i);
        bool fell_back = false;
        const auto profile = build_profile_or_uniform(corpus, req, &fell_back);
        degenerate += fell_back ? 1 : 0;
        const Json j = {{"requirements", requirements_to_json(req)},
                        {"profile", profile_to_json(profile)},
                        {"profile_fell_back", fell_back},
                        {"loss", loss_to_json(synthesize_loss(req, profile))}};
        out += j.dump() + "\n";
    }
    write_file_atomic(s.output, out);
    std::cout << s.samples << " records written to " << s.output << " (" << degenerate << " degenerate)\n";
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Analog op-amp sizing with EOA-weighted loss synthesis and DE + PSO search", "opsizer"};
    app.footer("Exit codes: 0 success, 1 sizing failed, 2 usage or config error, 3 simulator/environment error.");
    app.require_subcommand(1, 1);

    Settings s;
    Bindings b;

    auto* boot = app.add_subcommand("bootstrap", "Build an EOA corpus from independent DE runs");
    add_common_flags(*boot, s, b);
    add_de_flags(*boot, s, b);
    b.add(*boot, "--runs", "/runs", s.runs, "Independent DE runs")->check(CLI::NonNegativeNumber);
    b.add(*boot, "-o,--output", "", s.output, "Corpus CSV to write")->required();
    b.add(*boot, "--summary", "", s.summary, "EOA summary JSON (default: <output>.summary.json)");

    auto* size = app.add_subcommand("size", "Size one task");
    add_common_flags(*size, s, b);
    add_search_flags(*size, s, b);
    b.add(*size, "--task", "/task", s.task, "Task JSON file")->check(CLI::ExistingFile);
    b.add(*size, "-o,--output", "", s.output, "Run record JSON to write");
    b.add(*size, "--trajectory", "", s.trajectory, "Trajectory CSV to write");

    auto* bench = app.add_subcommand("bench", "Run a task suite repeatedly and report AST, ADSR, PFoM and MS");
    add_common_flags(*bench, s, b);
    add_search_flags(*bench, s, b);
    b.add(*bench, "--suite", "/suite", s.suite, "'default' (T1-T5) or a suite JSON file");
    b.add(*bench, "--reps", "/reps", s.reps, "Repetitions per task");
    b.add(*bench, "-o,--output", "", s.output, "Output directory (default: bench)");
    bench->add_flag("--trajectories", s.trajectories, "Also write one trajectory CSV per run");

    auto* eoa = app.add_subcommand("eoa-report", "Rank, EOA and synthesized loss for a task or a sampled dataset");
    add_common_flags(*eoa, s, b);
    add_de_flags(*eoa, s, b);
    add_corpus_flags(*eoa, s, b);
    b.add(*eoa, "--task", "/task", s.task, "Task JSON file (default: the reference requirements)")
        ->check(CLI::ExistingFile);
    b.add(*eoa, "--samples", "", s.samples, "Emit this many random requirement settings as JSON lines");
    b.add(*eoa, "-o,--output", "", s.output, "Output file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kUsage;
    }

    try {
        if (!s.config.empty()) {
            Json cfg;
            try {
                cfg = Json::parse(read_file(s.config));
            } catch (const Json::parse_error& e) {
                throw UsageError(s.config + ": " + e.what());
            }
            b.apply(cfg);
        }
        if (size->parsed() && s.task.empty()) throw UsageError("size needs --task");
        if (bench->parsed() && s.reps == 0) throw UsageError("--reps must be at least 1");
        if (boot->parsed() && s.runs == 0) throw UsageError("--runs must be at least 1");

        if (boot->parsed()) return cmd_bootstrap(s);
        if (size->parsed()) return cmd_size(s);
        if (bench->parsed()) return cmd_bench(s);
        return cmd_eoa_report(s);
    } catch (const UsageError& e) {
        std::cerr << "opsizer: " << e.what() << "\n";
        return kUsage;
    } catch (const FormatError& e) {
        std::cerr << "opsizer: " << e.what() << "\n";
        return kUsage;
    } catch (const std::invalid_argument& e) {
        // bad requirements, templates, search parameters
        std::cerr << "opsizer: " << e.what() << "\n";
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "opsizer: " << e.what() << "\n";
        return kEnvironment;
    }
}
