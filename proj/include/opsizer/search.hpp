#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "opsizer/core.hpp"
#include "opsizer/util.hpp"

namespace opsizer {

/// Point -> loss. Must be safe to call concurrently when a config asks for
/// more than one thread.
using Objective = std::function<double(const DesignPoint&)>;

struct Evaluation {
    DesignPoint point;
    double loss = 0.0;
};

/// Mutation base: the current best individual, or a random one.
enum class DeStrategy { Best1Bin, Rand1Bin };
std::string_view de_strategy_name(DeStrategy s);
std::optional<DeStrategy> parse_de_strategy(std::string_view name);

/// DE/x/1/bin. Iteration 0 evaluates the initial population, so a run
/// performs at most population * max_iterations evaluations.
struct DeConfig {
    DeStrategy strategy = DeStrategy::Best1Bin;
    std::size_t population = 30;
    std::size_t max_iterations = 25;
    double f = 0.5;
    double cr = 0.9;
    std::size_t candidates = 3;
    std::uint64_t seed = 1;
    std::size_t threads = 1;

    /// Throws std::invalid_argument.
    void validate() const;
};

struct DeResult {
    std::vector<Evaluation> candidates;  // lowest loss first, pairwise distinct
    std::vector<Evaluation> log;         // every evaluation in order
    std::size_t iterations = 0;          // iterations run, initialisation included
    Evaluation best;
};

/// Called once per generation after selection with the parent, trial and
/// surviving losses (index-aligned).
using DeObserver = std::function<void(std::size_t generation, std::span<const double> parents,
                                      std::span<const double> trials, std::span<const double> survivors)>;

/// Minimum pairwise normalized distance between returned candidates.
inline constexpr double kCandidateSeparation = 0.05;

/// RMS distance in the unit cube of `space`.
double normalized_distance(const DesignSpace& space, const DesignPoint& a, const DesignPoint& b);

DeResult de_search(const Objective& objective, const DesignSpace& space, const DeConfig& cfg,
                   const DeObserver& observer = {});

/// Global-best PSO with inertia; velocities clamped to 20% of the region width.
struct PsoConfig {
    std::size_t swarm = 20;
    std::size_t max_iterations = 50;
    std::size_t stuck_threshold = 10;
    double inertia = 0.72;
    double c1 = 1.49;
    double c2 = 1.49;
    std::uint64_t seed = 1;

    void validate() const;
};

inline constexpr double kVelocityClamp = 0.2;

/// Which trigger declared a process stuck. Budget is set by the orchestrator
/// for a process whose iteration budget ran out.
enum class StuckReason { None, NoProgress, StepLimit, Budget };
std::string_view stuck_reason_name(StuckReason r);

struct PsoResult {
    Evaluation best;
    std::vector<double> trajectory;  // best loss after each iteration (index 0: initial swarm)
    bool stuck = false;
    StuckReason stuck_reason = StuckReason::None;
    bool solved = false;
    std::size_t iterations = 0;
    std::size_t evaluations = 0;
};

/// Resumable swarm. Runs in the unit cube of its region; particle 0 starts on
/// the seed point.
class ParticleSwarm {
public:
    /// Evaluates the seed, and the rest of the swarm unless the seed already
    /// has zero loss. Throws std::invalid_argument when the seed lies outside
    /// the region.
    ParticleSwarm(Objective objective, DesignSpace region, const PsoConfig& cfg, const DesignPoint& seed);

    /// Iterates until zero loss, the stuck rule fires, or `max_iterations`
    /// more iterations have run. Stuck: `stuck_threshold` iterations without
    /// improving the swarm best, or more than `stuck_threshold` iterations in
    /// this call without reaching zero loss.
    PsoResult run(std::size_t max_iterations);

    /// Swaps the objective and recomputes every stored loss with `rescore`
    /// (no new evaluations are counted).
    void rescore(Objective objective, const std::function<double(const DesignPoint&)>& rescore);

    Evaluation best() const;
    std::size_t iterations() const { return iterations_; }
    std::size_t evaluations() const { return evaluations_; }
    const DesignSpace& region() const { return region_; }

private:
    double eval(const std::vector<double>& unit);
    void refresh_best();

    Objective objective_;
    DesignSpace region_;
    PsoConfig cfg_;
    Rng rng_;
    std::vector<std::vector<double>> x_, v_, pbest_;
    std::vector<double> pbest_loss_;
    std::size_t gbest_ = 0;
    std::size_t iterations_ = 0;
    std::size_t evaluations_ = 0;
};

PsoResult pso_refine(const Objective& objective, const DesignSpace& region, const PsoConfig& cfg,
                     const DesignPoint& seed);

/// Region half-width as a fraction of each parameter's full (unit) range.
inline constexpr double kRegionHalfWidth = 0.2;

/// One box per candidate: candidate +/- 20% of the full range per dimension
/// (log space for log parameters), clipped to the global bounds.
std::vector<DesignSpace> make_regions(std::span<const DesignPoint> candidates, const DesignSpace& space,
                                      double half_width = kRegionHalfWidth);

}  // namespace opsizer
