#include <catch2/catch_amalgamated.hpp>

#include <atomic>

#include "opsizer/eval.hpp"
#include "opsizer/sizing.hpp"

using namespace opsizer;

namespace {

class CountingSimulator final : public Simulator {
public:
    const DesignSpace& space() const override { return inner_.space(); }
    SimOutcome simulate(const DesignPoint& p) const override {
        ++calls;
        return inner_.simulate(p);
    }
    mutable std::atomic<std::size_t> calls{0};

private:
    SurrogateSimulator inner_;
};

class BrokenSimulator final : public Simulator {
public:
    const DesignSpace& space() const override { return space_; }
    SimOutcome simulate(const DesignPoint&) const override { return SimOutcome::infeasible("segfault"); }

private:
    DesignSpace space_ = surrogate_space();
};

const MetricCorpus& corpus() {
    static const MetricCorpus c = [] {
        SurrogateSimulator sim;
        BootstrapConfig b;
        b.runs = 4;
        return bootstrap_corpus(sim, reference_requirements(), DeConfig{}, b).corpus;
    }();
    return c;
}

RequirementSet task(std::size_t i) { return default_suite()[i].requirements; }

RequirementSet unreachable() {
    auto r = task(0);
    r.name = "huge-gain";
    r.bounds[MetricId::Gain] = Bound::at_least(1e12);
    return r;
}

SizingConfig seeded(std::uint64_t s) {
    SizingConfig c;
    c.de.seed = s;
    c.pso.seed = s + 1000;
    c.threads = 1;
    return c;
}

}  // namespace

TEST_CASE("T1 on the surrogate succeeds") {
    CountingSimulator sim;
    const auto run = run_sizing(task(0), sim, corpus(), seeded(7));
    CHECK(run.status == RunStatus::Success);
    CHECK(run.best_misses == 0);
    REQUIRE(run.best_point.has_value());
    CHECK(check_satisfaction(sim.simulate(*run.best_point), task(0)).misses == 0);
    CHECK(run.evaluations == sim.calls - 1);
    CHECK(run.evaluations < 10000);
    CHECK(run.loss_history.front().provenance == Provenance::RuleBased);
}

TEST_CASE("success during DE skips PSO") {
    CountingSimulator sim;
    const auto run = run_sizing(task(0), sim, corpus(), seeded(7));
    REQUIRE(run.status == RunStatus::Success);
    if (run.evaluations <= run.de_evaluations) {
        CHECK(run.rounds.empty());
        CHECK(run.feedback_count() == 0);
        CHECK(run.loss_history.size() == 1);
    }
}

TEST_CASE("an unreachable requirement exhausts the budget") {
    CountingSimulator sim;
    const auto cfg = seeded(3);
    const auto run = run_sizing(unreachable(), sim, corpus(), cfg);
    CHECK(run.status == RunStatus::BudgetExhausted);
    CHECK(run.best_misses >= 1);
    CHECK(std::isfinite(run.best_pfom));
    REQUIRE(run.best_point.has_value());
    CHECK(run.evaluations == sim.calls);

    // never more PSO iterations than the per-process budget
    std::vector<std::size_t> total(cfg.de.candidates, 0);
    for (const auto& r : run.rounds)
        for (std::size_t p = 0; p < r.iterations.size(); ++p) total[p] += r.iterations[p];
    for (auto t : total) CHECK(t <= cfg.pso.max_iterations);

    CHECK(run.feedback_count() <= cfg.feedback_rounds);
    CHECK(run.loss_history.size() == run.feedback_count() + 1);
}

TEST_CASE("feedback rounds follow the contract") {
    SurrogateSimulator sim;
    const auto run = run_sizing(unreachable(), sim, corpus(), seeded(5));
    REQUIRE_FALSE(run.rounds.empty());
    REQUIRE(run.feedback_count() > 0);
    for (const auto& r : run.rounds) {
        if (!r.feedback) continue;
        CHECK(std::all_of(r.stuck.begin(), r.stuck.end(), [](bool b) { return b; }));
        REQUIRE(r.stuck_reasons.size() == r.stuck.size());
        for (auto why : r.stuck_reasons) CHECK(why != StuckReason::None);
        const auto& f = *r.feedback;
        CHECK(f.revision_after == f.revision_before + 1);
        const auto worst = std::max_element(f.deviations.begin(), f.deviations.end()) - f.deviations.begin();
        CHECK(f.scales_after[worst] > f.scales_before[worst]);
    }
    for (std::size_t i = 0; i < run.loss_history.size(); ++i) CHECK(run.loss_history[i].revision == int(i));
}

TEST_CASE("best loss never rises within a revision") {
    SurrogateSimulator sim;
    const auto run = run_sizing(unreachable(), sim, corpus(), seeded(9));
    for (std::size_t i = 1; i < run.trajectory.size(); ++i) {
        const auto& a = run.trajectory[i - 1];
        const auto& b = run.trajectory[i];
        if (a.revision == b.revision && a.phase == b.phase) REQUIRE(b.best_loss <= a.best_loss);
        REQUIRE(b.miss_count <= a.miss_count);
    }
}

TEST_CASE("worker count does not change the run") {
    SurrogateSimulator sim;
    for (auto t : {task(4), unreachable()}) {
        auto cfg = seeded(11);
        const auto a = run_sizing(t, sim, corpus(), cfg);
        cfg.threads = 3;
        const auto b = run_sizing(t, sim, corpus(), cfg);
        CHECK(a.evaluations == b.evaluations);
        CHECK(a.best_point == b.best_point);
        CHECK(a.best_outcome == b.best_outcome);
        CHECK(a.loss_history == b.loss_history);
        CHECK(trajectory_csv(a) == trajectory_csv(b));
    }
}

TEST_CASE("mostly failing simulations end with a diagnostic status") {
    BrokenSimulator sim;
    const auto run = run_sizing(task(0), sim, corpus(), seeded(1));
    CHECK(run.status == RunStatus::SimulatorFailure);
    CHECK_THAT(run.diagnostic, Catch::Matchers::ContainsSubstring("segfault"));
    CHECK(run.best_misses == 3);
    CHECK(std::isfinite(run.best_pfom));
}

TEST_CASE("uniform quadratic mode skips the profile") {
    SurrogateSimulator sim;
    auto cfg = seeded(2);
    cfg.loss_mode = LossMode::UniformQuadratic;
    const auto run = run_sizing(task(2), sim, MetricCorpus{}, cfg);
    CHECK(run.loss_history.front().provenance == Provenance::Uniform);
    CHECK(run.status == RunStatus::Success);
}

TEST_CASE("bad configuration throws") {
    SurrogateSimulator sim;
    auto cfg = seeded(2);
    cfg.pso.stuck_threshold = 99;
    CHECK_THROWS_AS(run_sizing(task(0), sim, corpus(), cfg), std::invalid_argument);
    auto bad = task(0);
    bad.bounds[MetricId::PM] = Bound::in_range(90, 60);
    CHECK_THROWS_AS(run_sizing(bad, sim, corpus(), seeded(2)), RequirementError);
}
