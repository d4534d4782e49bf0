#pragma once

#include <optional>
#include <string>
#include <vector>

#include "opsizer/core.hpp"
#include "opsizer/eoa.hpp"
#include "opsizer/generator.hpp"
#include "opsizer/loss.hpp"
#include "opsizer/search.hpp"
#include "opsizer/sim.hpp"

namespace opsizer {

enum class RunStatus { Success, BudgetExhausted, SimulatorFailure };
std::string_view status_name(RunStatus s);

/// Synthesized: EOA profile -> generator -> feedback. UniformQuadratic: equal
/// weight quadratic loss; set feedback_rounds = 0 for the plain baseline.
enum class LossMode { Synthesized, UniformQuadratic };

struct SizingConfig {
    DeConfig de;
    PsoConfig pso;
    GeneratorConfig generator;
    LossMode loss_mode = LossMode::Synthesized;
    std::size_t feedback_rounds = 3;
    /// Worker count for DE batches and PSO processes; 0 = one per PSO process.
    std::size_t threads = 0;
};

struct TrajectoryRow {
    std::size_t iteration = 0;  // global: DE iterations first, then PSO iterations
    std::string phase;          // "de" or "pso"
    double best_loss = 0.0;     // under the loss revision in force
    std::size_t miss_count = 0; // of the run-level best point so far
    int revision = 0;
};

struct FeedbackEvent {
    int revision_before = 0;
    int revision_after = 0;
    MetricVector best_metrics;
    std::vector<double> deviations;  // per term, unscaled
    std::vector<double> scales_before;
    std::vector<double> scales_after;
};

/// One pass of the k PSO processes.
struct PsoRound {
    std::size_t index = 0;
    std::vector<bool> stuck;
    std::vector<StuckReason> stuck_reasons;  // per process
    std::vector<std::size_t> iterations;
    bool solved = false;
    std::optional<FeedbackEvent> feedback;  // the adjustment made after this round
};

struct SizingRun {
    std::string task;
    RequirementSet requirements;
    DesignSpace space;

    EoaProfile profile;
    bool profile_fell_back = false;
    std::string generator_warning;
    std::vector<LossSpec> loss_history;  // initial spec, then one per feedback round

    std::size_t evaluations = 0;  // simulator invocations, DE and PSO
    std::size_t de_evaluations = 0;
    std::size_t infeasible_evaluations = 0;
    std::size_t de_iterations = 0;

    std::optional<DesignPoint> best_point;
    SimOutcome best_outcome;
    std::size_t best_misses = 0;
    double best_pfom = 0.0;

    RunStatus status = RunStatus::BudgetExhausted;
    std::string diagnostic;

    std::vector<PsoRound> rounds;
    std::vector<TrajectoryRow> trajectory;
    double wall_seconds = 0.0;

    std::size_t feedback_count() const;
};

/// The full flow: profile -> loss -> DE (once) -> k PSO processes -> feedback
/// while every process is stuck -> ... The run-level best is ranked by miss
/// count, then PFoM. Throws on invalid configuration; simulator failures show
/// up as RunStatus::SimulatorFailure (more than half of the DE evaluations
/// infeasible).
SizingRun run_sizing(const RequirementSet& task, const Simulator& sim, const MetricCorpus& corpus,
                     const SizingConfig& cfg);

}  // namespace opsizer
