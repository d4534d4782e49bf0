#include "opsizer/sizing.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <limits>
#include <map>
#include <mutex>
#include <optional>

#include "opsizer/eval.hpp"

namespace opsizer {

std::string_view status_name(RunStatus s) {
    switch (s) {
        case RunStatus::Success: return "success";
        case RunStatus::BudgetExhausted: return "budget-exhausted";
        case RunStatus::SimulatorFailure: return "simulator-failure";
    }
    return "?";
}

std::size_t SizingRun::feedback_count() const {
    return static_cast<std::size_t>(std::count_if(rounds.begin(), rounds.end(),
                                                  [](const PsoRound& r) { return r.feedback.has_value(); }));
}

namespace {

using Clock = std::chrono::steady_clock;

// Run-level best across loss revisions: fewest misses, then highest PFoM.
struct BestTracker {
    explicit BestTracker(const RequirementSet& r) : req(r) {}

    const RequirementSet& req;
    std::optional<DesignPoint> point;
    SimOutcome outcome;
    std::size_t misses = std::numeric_limits<std::size_t>::max();
    double pfom = -std::numeric_limits<double>::infinity();

    void offer(const DesignPoint& p, const SimOutcome& o) {
        const std::size_t m = check_satisfaction(o, req).misses;
        const double f = compute_pfom(o, req);
        if (point && (m > misses || (m == misses && !(f > pfom)))) return;
        point = p;
        outcome = o;
        misses = m;
        pfom = f;
    }
};

// Outcomes keyed by point, so stored swarm state can be rescored without
// simulating again. `order` keeps first-seen order for deterministic merging.
class OutcomeLog {
public:
    void record(const DesignPoint& p, const SimOutcome& o) {
        std::lock_guard lock(mu_);
        order_.push_back({p, o});
        cache_.emplace(p.values, o);
    }
    const SimOutcome& at(const DesignPoint& p) const { return cache_.at(p.values); }
    const std::vector<std::pair<DesignPoint, SimOutcome>>& order() const { return order_; }

private:
    std::mutex mu_;
    std::vector<std::pair<DesignPoint, SimOutcome>> order_;
    std::map<std::vector<double>, SimOutcome> cache_;
};

}  // namespace

SizingRun run_sizing(const RequirementSet& task, const Simulator& sim, const MetricCorpus& corpus,
                     const SizingConfig& cfg) {
    const auto t0 = Clock::now();
    validate_requirements(task);
    cfg.de.validate();
    cfg.pso.validate();

    SizingRun run;
    run.task = task.name;
    run.requirements = task;
    run.space = sim.space();

    LossSpec spec;
    if (cfg.loss_mode == LossMode::Synthesized) {
        run.profile = build_profile_or_uniform(corpus, task, &run.profile_fell_back);
        auto gen = generator_dispatch(cfg.generator, task, run.profile);
        spec = std::move(gen.spec);
        run.generator_warning = std::move(gen.warning);
    } else {
        spec = uniform_quadratic_loss(task);
    }
    run.loss_history.push_back(spec);

    const std::size_t k = cfg.de.candidates;
    const std::size_t threads = cfg.threads == 0 ? k : cfg.threads;
    std::atomic<std::size_t> sim_calls{0};
    BestTracker best(task);

    auto finish = [&](RunStatus status) {
        run.status = status;
        run.evaluations = sim_calls.load();
        run.best_point = best.point;
        run.best_outcome = best.outcome;
        run.best_misses = best.point ? best.misses : task.constrained_count();
        run.best_pfom = best.point ? best.pfom : compute_pfom(SimOutcome::infeasible("none"), task);
        run.wall_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
        return run;
    };

    // --- DE, once -------------------------------------------------------------
    OutcomeLog de_log;
    DeConfig de_cfg = cfg.de;
    de_cfg.threads = threads;
    const auto de = de_search(
        [&](const DesignPoint& p) {
            auto o = sim.simulate(p);
            ++sim_calls;
            const double loss = evaluate_loss(spec, o);
            de_log.record(p, o);
            return loss;
        },
        run.space, de_cfg);

    run.de_iterations = de.iterations;
    run.de_evaluations = de.log.size();
    std::string first_failure;
    double de_best_loss = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < de.log.size(); ++i) {
        const auto& e = de.log[i];
        const auto& o = de_log.at(e.point);
        if (!o.feasible()) {
            ++run.infeasible_evaluations;
            if (first_failure.empty()) first_failure = o.diagnostic();
        }
        best.offer(e.point, o);
        de_best_loss = std::min(de_best_loss, e.loss);
        if ((i + 1) % cfg.de.population == 0 || i + 1 == de.log.size())
            run.trajectory.push_back({run.trajectory.size(), "de", de_best_loss, best.misses, spec.revision});
    }

    if (2 * run.infeasible_evaluations > run.de_evaluations) {
        run.diagnostic = "simulator failure: " + std::to_string(run.infeasible_evaluations) + " of " +
                         std::to_string(run.de_evaluations) + " DE simulations infeasible (first: " +
                         first_failure + ")";
        return finish(RunStatus::SimulatorFailure);
    }
    if (best.misses == 0) return finish(RunStatus::Success);

    // --- k PSO processes, with feedback while all are stuck -------------------
    std::vector<DesignPoint> seeds;
    for (const auto& c : de.candidates) seeds.push_back(c.point);
    const auto regions = make_regions(seeds, run.space);
    const std::size_t procs = regions.size();

    std::vector<OutcomeLog> logs(procs);
    std::vector<std::size_t> merged(procs, 0);
    auto objective_for = [&](std::size_t p) -> Objective {
        return [&, p](const DesignPoint& x) {
            auto o = sim.simulate(x);
            ++sim_calls;
            const double loss = evaluate_loss(spec, o);
            logs[p].record(x, o);
            return loss;
        };
    };

    std::vector<std::optional<ParticleSwarm>> swarms(procs);
    parallel_for(procs, threads, [&](std::size_t p) {
        PsoConfig pc = cfg.pso;
        pc.seed = derive_seed(cfg.pso.seed, p);
        swarms[p].emplace(objective_for(p), regions[p], pc, seeds[p]);
    });

    // Offers process evaluations to the best tracker in (iteration, process)
    // order. Each process iteration evaluates exactly `swarm` points; the
    // initial swarm (iteration 0) may be shorter when the seed solved.
    auto merge_upto = [&](std::size_t p, std::size_t count) {
        const auto& entries = logs[p].order();
        count = std::min(count, entries.size());
        for (; merged[p] < count; ++merged[p]) best.offer(entries[merged[p]].first, entries[merged[p]].second);
    };
    std::vector<std::size_t> init_size(procs);
    for (std::size_t p = 0; p < procs; ++p) {
        init_size[p] = logs[p].order().size();
        merge_upto(p, init_size[p]);
    }
    auto swarm_best = [&] {
        double b = std::numeric_limits<double>::infinity();
        for (const auto& s : swarms) b = std::min(b, s->best().loss);
        return b;
    };
    run.trajectory.push_back({run.trajectory.size(), "pso", swarm_best(), best.misses, spec.revision});

    std::vector<std::size_t> remaining(procs, cfg.pso.max_iterations);
    std::vector<std::size_t> done_iters(procs, 0);
    RunStatus status = RunStatus::BudgetExhausted;

    for (std::size_t round = 0;; ++round) {
        if (best.misses == 0) {
            status = RunStatus::Success;
            break;
        }
        std::vector<PsoResult> results(procs);
        parallel_for(procs, threads, [&](std::size_t p) { results[p] = swarms[p]->run(remaining[p]); });

        PsoRound pr;
        pr.index = round;
        std::size_t longest = 0;
        for (std::size_t p = 0; p < procs; ++p) {
            remaining[p] -= results[p].iterations;
            // a process with no budget left cannot progress: counts as stuck
            pr.stuck.push_back(results[p].stuck || remaining[p] == 0);
            pr.stuck_reasons.push_back(results[p].stuck          ? results[p].stuck_reason
                                       : remaining[p] == 0 && !results[p].solved ? StuckReason::Budget
                                                                                 : StuckReason::None);
            pr.iterations.push_back(results[p].iterations);
            pr.solved = pr.solved || results[p].solved;
            longest = std::max(longest, results[p].iterations);
        }
        for (std::size_t t = 1; t <= longest; ++t) {
            double loss = std::numeric_limits<double>::infinity();
            for (std::size_t p = 0; p < procs; ++p) {
                const auto& tr = results[p].trajectory;
                loss = std::min(loss, tr[std::min(t, tr.size() - 1)]);
                merge_upto(p, init_size[p] + (done_iters[p] + std::min(t, results[p].iterations)) * cfg.pso.swarm);
            }
            run.trajectory.push_back({run.trajectory.size(), "pso", loss, best.misses, spec.revision});
        }
        for (std::size_t p = 0; p < procs; ++p) {
            done_iters[p] += results[p].iterations;
            merge_upto(p, logs[p].order().size());
        }

        const bool all_stuck = std::all_of(pr.stuck.begin(), pr.stuck.end(), [](bool b) { return b; });
        const bool budget_left = std::any_of(remaining.begin(), remaining.end(), [](std::size_t r) { return r > 0; });
        const bool can_adjust = best.misses > 0 && all_stuck && budget_left && round < cfg.feedback_rounds &&
                                best.outcome.feasible();
        if (can_adjust) {
            FeedbackEvent ev;
            ev.revision_before = spec.revision;
            ev.best_metrics = best.outcome.metrics();
            ev.deviations = term_deviations(spec, ev.best_metrics);
            for (const auto& t : spec.terms) ev.scales_before.push_back(t.scale);
            std::optional<LossSpec> next;
            try {
                next = adjust_loss(spec, ev.best_metrics, task);
            } catch (const NothingToAdjustError&) {
            }
            if (next) {
                spec = std::move(*next);
                ev.revision_after = spec.revision;
                for (const auto& t : spec.terms) ev.scales_after.push_back(t.scale);
                run.loss_history.push_back(spec);
                pr.feedback = std::move(ev);
                for (std::size_t p = 0; p < procs; ++p) {
                    swarms[p]->rescore(objective_for(p), [&, p](const DesignPoint& x) {
                        return evaluate_loss(spec, logs[p].at(x));
                    });
                }
            }
        }
        const bool adjusted = pr.feedback.has_value();
        run.rounds.push_back(std::move(pr));
        if (best.misses == 0) {
            status = RunStatus::Success;
            break;
        }
        if (!adjusted) break;
        run.trajectory.push_back({run.trajectory.size(), "pso", swarm_best(), best.misses, spec.revision});
    }
    return finish(status);
}

}  // namespace opsizer
