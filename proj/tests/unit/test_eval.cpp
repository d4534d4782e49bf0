#include <catch2/catch_amalgamated.hpp>

#include "opsizer/eval.hpp"

using namespace opsizer;

namespace {

RequirementSet t5() { return default_suite()[4].requirements; }

MetricVector at_requirements(const RequirementSet& r) {
    MetricVector m{1, 1, 75, 1, 1};
    for (auto id : r.constrained()) m[id] = r.bounds[id]->reference();
    return m;
}

SizingRun fake_run(std::size_t evals, bool success, MetricVector m) {
    SizingRun r;
    r.evaluations = evals;
    r.status = success ? RunStatus::Success : RunStatus::BudgetExhausted;
    r.best_outcome = SimOutcome::ok(m);
    return r;
}

class ThrowingSimulator final : public Simulator {
public:
    const DesignSpace& space() const override { return space_; }
    SimOutcome simulate(const DesignPoint&) const override { throw std::runtime_error("license server down"); }

private:
    DesignSpace space_ = surrogate_space();
};

const MetricCorpus& corpus() {
    static const MetricCorpus c = [] {
        SurrogateSimulator sim;
        BootstrapConfig b;
        b.runs = 3;
        return bootstrap_corpus(sim, reference_requirements(), DeConfig{}, b).corpus;
    }();
    return c;
}

}  // namespace

TEST_CASE("compute_pfom") {
    const auto req = t5();
    const auto at = at_requirements(req);
    CHECK(compute_pfom(at, req) == 0.0);

    auto m = at;
    m.gain = 4000;
    CHECK(compute_pfom(m, req) == Catch::Approx(0.5));

    m = at;
    m.pm = 120;
    CHECK(compute_pfom(m, req) == -1.0);

    m = at;
    m.gain = 0;
    CHECK(compute_pfom(m, req) == Catch::Approx((1.0 - 2000.0) / 1.0));

    auto t1 = default_suite()[0].requirements;
    m = at_requirements(t1);
    m.gain = 0;
    CHECK(compute_pfom(m, t1) == -999.0);

    SECTION("IDC rewards currents under the limit") {
        m = at;
        m.idc = 150;
        CHECK(compute_pfom(m, req) == Catch::Approx(1.0));
        m.idc = 0;
        CHECK(compute_pfom(m, req) == 0.0);
    }
    SECTION("unconstrained metrics contribute nothing") {
        m = at_requirements(t1);
        m.sr = 1e-9;
        m.idc = 1e9;
        CHECK(compute_pfom(m, t1) == 0.0);
    }
    SECTION("infeasible outcomes score as all-zero vectors") {
        CHECK(std::isfinite(compute_pfom(SimOutcome::infeasible("x"), req)));
        CHECK(compute_pfom(SimOutcome::infeasible("x"), req) == compute_pfom(MetricVector{}, req));
    }
}

TEST_CASE("PFoM is zero at the requirement point of any task") {
    Rng rng(31);
    for (int i = 0; i < 1000; ++i) {
        const auto req = sample_requirements(rng, reference_requirements());
        REQUIRE(compute_pfom(at_requirements(req), req) == 0.0);
    }
}

TEST_CASE("lowering a favorable-high metric lowers PFoM") {
    Rng rng(32);
    const auto req = t5();
    for (int i = 0; i < 1000; ++i) {
        MetricVector m{rng.uniform(1, 4e4), rng.uniform(1, 4e3), rng.uniform(1, 90), rng.uniform(0.1, 20),
                       rng.uniform(1, 600)};
        for (auto id : {MetricId::BW, MetricId::Gain, MetricId::SR}) {
            auto lower = m;
            lower[id] *= rng.uniform(0.1, 0.99);
            REQUIRE(compute_pfom(lower, req) < compute_pfom(m, req));
        }
    }
}

TEST_CASE("aggregate") {
    const auto req = t5();
    const auto at = at_requirements(req);
    std::vector<SizingRun> runs{fake_run(3000, true, at), fake_run(3100, true, at), fake_run(2900, false, at)};
    const auto s = aggregate(runs, req);
    CHECK(s.ast == 3000);
    CHECK(s.adsr == Catch::Approx(66.666666).epsilon(1e-6));
    CHECK(s.mean_pfom == 0);
    CHECK(s.mean_ms == 0);

    auto miss = at;
    miss.gain = 1000;
    miss.bw = 1000;
    const std::vector<SizingRun> single{fake_run(1234, false, miss)};
    const auto one = aggregate(single, req);
    CHECK(one.ast == 1234);
    CHECK(one.adsr == 0);
    CHECK(one.mean_ms == 2);
    CHECK(one.mean_pfom == compute_pfom(miss, req));

    CHECK_THROWS_AS(aggregate(std::vector<SizingRun>{}, req), std::invalid_argument);
}

TEST_CASE("run_benchmark") {
    SurrogateSimulator sim;
    BenchConfig cfg;
    cfg.sizing.threads = 1;

    SECTION("one task, three repetitions") {
        const TaskSuite suite{default_suite()[0]};
        const auto r = run_benchmark(suite, sim, corpus(), cfg);
        REQUIRE(r.tasks.size() == 1);
        CHECK(r.tasks[0].runs.size() == 3);
        CHECK(r.tasks[0].task == "T1");
        REQUIRE(r.tasks[0].stats.has_value());
        CHECK(r.average == r.tasks[0].stats);
        CHECK(r.tasks[0].runs[0].seed != r.tasks[0].runs[1].seed);
    }

    SECTION("repetitions must be positive") {
        cfg.repetitions = 0;
        CHECK_THROWS_AS(run_benchmark(default_suite(), sim, corpus(), cfg), std::invalid_argument);
    }

    SECTION("aborted runs become annotations") {
        ThrowingSimulator bad;
        cfg.repetitions = 2;
        const TaskSuite suite{default_suite()[0], default_suite()[1]};
        const auto r = run_benchmark(suite, bad, corpus(), cfg);
        REQUIRE(r.tasks.size() == 2);
        for (const auto& t : r.tasks) {
            CHECK_FALSE(t.stats.has_value());
            CHECK(t.failures.size() == 2);
            CHECK_THAT(t.failures[0], Catch::Matchers::ContainsSubstring("license server down"));
        }
        CHECK(r.all_aborted());
        CHECK_FALSE(r.average.has_value());
        CHECK_THAT(report_to_table(r), Catch::Matchers::ContainsSubstring("n/a"));
    }

    SECTION("reports are reproducible") {
        cfg.repetitions = 2;
        const auto a = report_to_json(run_benchmark(default_suite(), sim, corpus(), cfg)).dump(2);
        const auto b = report_to_json(run_benchmark(default_suite(), sim, corpus(), cfg)).dump(2);
        CHECK(a == b);
    }
}

TEST_CASE("report rendering") {
    SurrogateSimulator sim;
    BenchConfig cfg;
    cfg.repetitions = 1;
    cfg.sizing.threads = 1;
    std::vector<SizingRun> runs;
    const auto r = run_benchmark(default_suite(), sim, corpus(), cfg, &runs);
    CHECK(runs.size() == 5);

    const auto table = report_to_table(r);
    for (const char* s : {"T1", "T5", "Avg", "AST", "ADSR", "PFoM", "MS"})
        CHECK_THAT(table, Catch::Matchers::ContainsSubstring(s));

    const auto j = report_to_json(r);
    CHECK(j["tasks"].size() == 5);
    CHECK(j["tasks"][0]["level"] == "easy");
    CHECK(j["tasks"][4]["level"] == "hard");
    CHECK(j.dump().find("wall") == std::string::npos);

    const auto csv = trajectory_csv(runs[0]);
    CHECK(csv.rfind("iteration,best_loss,miss_count,revision\n", 0) == 0);
    const auto rj = run_to_json(runs[0]);
    CHECK(rj["status"] == "success");
    CHECK(rj["best_point"].contains("ib"));
}
