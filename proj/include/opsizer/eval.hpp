#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "opsizer/core.hpp"
#include "opsizer/io.hpp"
#include "opsizer/sizing.hpp"

namespace opsizer {

/// Zero-valued (or negative) metrics are replaced by these before division.
struct PfomFloors {
    static constexpr double bw = 1.0;
    static constexpr double gain = 1.0;
    static constexpr double pm = 1.0;
    static constexpr double sr = 0.01;
};

/// Sum over constrained metrics of w * (val - req) / val, w = -1 for IDC and +1
/// otherwise. PM above 90 degrees is mapped to 150 - PM first and compared
/// against the range's lower bound. IDC is never floored; an IDC of zero
/// contributes nothing.
double compute_pfom(const MetricVector& m, const RequirementSet& req);
/// The infeasible marker scores as an all-zero vector.
double compute_pfom(const SimOutcome& o, const RequirementSet& req);

enum class TaskLevel { Easy, Mid, Hard };
std::string_view task_level_name(TaskLevel l);

struct Task {
    RequirementSet requirements;
    TaskLevel level = TaskLevel::Mid;
};
using TaskSuite = std::vector<Task>;

/// T1..T5 of the standard benchmark.
TaskSuite default_suite();

struct TaskStats {
    double ast = 0.0;        // mean simulator calls
    double adsr = 0.0;       // success percentage
    double mean_pfom = 0.0;  // of best points
    double mean_ms = 0.0;    // missed specifications of best points
    std::size_t runs = 0;
    friend bool operator==(const TaskStats&, const TaskStats&) = default;
};

/// Throws std::invalid_argument on an empty run list.
TaskStats aggregate(std::span<const SizingRun> runs, const RequirementSet& req);

struct RunSummary {
    std::size_t repetition = 0;
    std::uint64_t seed = 0;
    bool aborted = false;
    RunStatus status = RunStatus::BudgetExhausted;
    std::size_t evaluations = 0;
    std::size_t misses = 0;
    double pfom = 0.0;
    std::size_t feedback_rounds = 0;
    std::optional<MetricVector> best_metrics;
    std::string diagnostic;
};

struct TaskReport {
    std::string task;
    TaskLevel level = TaskLevel::Mid;
    std::optional<TaskStats> stats;  // absent when every run aborted
    std::vector<RunSummary> runs;
    std::vector<std::string> failures;
};

struct BenchReport {
    std::size_t repetitions = 0;
    std::uint64_t seed = 0;
    std::vector<TaskReport> tasks;
    std::optional<TaskStats> average;  // mean of the per-task rows that have stats

    /// True when no task produced a usable run.
    bool all_aborted() const;
};

struct BenchConfig {
    std::size_t repetitions = 3;
    std::uint64_t seed = 1;
    SizingConfig sizing;
};

/// The config for repetition `rep` of task `task_index`: DE and PSO seeds
/// derived from the master seed.
SizingConfig seeded_config(const SizingConfig& base, std::uint64_t master, std::size_t task_index,
                           std::size_t rep);

/// repetitions x |suite| sizing runs in task order. Exceptions and simulator
/// failures become failure annotations on their task. `runs_out`, when given,
/// receives every completed SizingRun in (task, repetition) order.
BenchReport run_benchmark(const TaskSuite& suite, const Simulator& sim, const MetricCorpus& corpus,
                          const BenchConfig& cfg, std::vector<SizingRun>* runs_out = nullptr);

/// Machine-readable report. Wall-clock times are left out so equal seeds give
/// byte-equal files.
Json report_to_json(const BenchReport& report);
/// Aligned text table: AST, ADSR, PFoM and MS rows per task, then Avg.
std::string report_to_table(const BenchReport& report);

Json run_to_json(const SizingRun& run);
/// "iteration,best_loss,miss_count,revision" rows.
std::string trajectory_csv(const SizingRun& run);

}  // namespace opsizer
