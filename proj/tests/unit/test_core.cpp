#include <catch2/catch_amalgamated.hpp>

#include "opsizer/core.hpp"
#include "opsizer/eval.hpp"
#include "opsizer/io.hpp"
#include "opsizer/util.hpp"

using namespace opsizer;

namespace {

RequirementSet t1() { return default_suite()[0].requirements; }

RequirementSet t5() { return default_suite()[4].requirements; }

}  // namespace

TEST_CASE("metric names parse back, case-insensitively") {
    for (MetricId m : kAllMetrics) {
        REQUIRE(parse_metric(metric_name(m)) == m);
    }
    CHECK(parse_metric("gain") == MetricId::Gain);
    CHECK(parse_metric("I_DC") == MetricId::IDC);
    CHECK_FALSE(parse_metric("noise").has_value());
}

TEST_CASE("metric vector layout follows MetricId order") {
    MetricVector m{1, 2, 3, 4, 5};
    for (std::size_t i = 0; i < kMetricCount; ++i) CHECK(m[kAllMetrics[i]] == static_cast<double>(i + 1));
    m[MetricId::SR] = 9;
    CHECK(m.sr == 9);
}

TEST_CASE("non-finite vectors become the infeasible marker") {
    MetricVector m{1, 2, 3, 4, 5};
    CHECK(SimOutcome::ok(m).feasible());
    m.gain = std::numeric_limits<double>::quiet_NaN();
    const auto o = SimOutcome::ok(m);
    CHECK_FALSE(o.feasible());
    CHECK_THROWS_AS(o.metrics(), std::logic_error);
    CHECK(SimOutcome::infeasible("x").diagnostic() == "x");
}

TEST_CASE("validate_requirements") {
    CHECK_NOTHROW(validate_requirements(t1()));

    auto bad = t1();
    bad.bounds[MetricId::PM] = Bound::in_range(90, 60);
    CHECK_THROWS_AS(validate_requirements(bad), RequirementError);

    bad = t1();
    bad.bounds[MetricId::Gain] = Bound::at_least(0);
    CHECK_THROWS_AS(validate_requirements(bad), RequirementError);

    bad = t1();
    bad.bounds[MetricId::IDC] = Bound::at_least(10);
    CHECK_THROWS_WITH(validate_requirements(bad), Catch::Matchers::ContainsSubstring("at-most"));

    SECTION("unknown metric names are rejected by the task loader") {
        const auto j = Json::parse(R"({"name":"x","requirements":{"noise":{"kind":"at-most","value":1}}})");
        CHECK_THROWS_AS(task_from_json(j), FormatError);
    }
}

TEST_CASE("check_satisfaction") {
    const auto req = t5();
    MetricVector at{20e3, 2e3, 60, 10, 300};
    CHECK(check_satisfaction(at, req).misses == 0);
    at.pm = 90;
    CHECK(check_satisfaction(at, req).misses == 0);

    const auto r = check_satisfaction(MetricVector{6000, 900, 75, 0, 0}, t1());
    CHECK(r.misses == 1);
    CHECK(r.passed[MetricId::Gain] == false);
    CHECK(r.passed[MetricId::BW] == true);
    CHECK_FALSE(r.passed.has(MetricId::SR));

    CHECK(check_satisfaction(SimOutcome::infeasible("boom"), req).misses == 5);
    CHECK(check_satisfaction(SimOutcome::infeasible("boom"), t1()).misses == 3);
}

TEST_CASE("miss count is monotone in each metric's favorable direction") {
    Rng rng(11);
    const auto req = t5();
    for (int trial = 0; trial < 2000; ++trial) {
        MetricVector m{rng.uniform(0, 4e4), rng.uniform(0, 4e3), rng.uniform(0, 150), rng.uniform(0, 20),
                       rng.uniform(0, 600)};
        const auto base = check_satisfaction(m, req).misses;
        for (MetricId id : {MetricId::BW, MetricId::Gain, MetricId::SR}) {
            auto better = m;
            better[id] *= 1.0 + rng.uniform();
            REQUIRE(check_satisfaction(better, req).misses <= base);
        }
        auto better = m;
        better.idc *= rng.uniform();
        REQUIRE(check_satisfaction(better, req).misses <= base);
        // PM improves by moving toward the range
        better = m;
        better.pm = m.pm < 60 ? m.pm + (60 - m.pm) * rng.uniform() : (m.pm > 90 ? m.pm - (m.pm - 90) * rng.uniform() : m.pm);
        REQUIRE(check_satisfaction(better, req).misses <= base);
    }
}

TEST_CASE("design space maps through the unit cube") {
    DesignSpace s({{"a", 1, 100, Scale::Log}, {"b", -5, 5, Scale::Linear}});
    CHECK(s.to_unit(0, 10) == Catch::Approx(0.5));
    CHECK(s.to_unit(1, 0) == Catch::Approx(0.5));
    CHECK(s.from_unit(1, 0.2) == Catch::Approx(-3));
    CHECK(s.find("b") == 1u);
    CHECK_FALSE(s.find("c").has_value());

    Rng rng(3);
    for (int i = 0; i < 500; ++i) {
        const std::vector<double> u{rng.uniform(), rng.uniform()};
        const auto p = s.from_unit(u);
        REQUIRE(s.contains(p));
        const auto back = s.to_unit(p.values);
        REQUIRE(back[0] == Catch::Approx(u[0]).margin(1e-12));
        REQUIRE(back[1] == Catch::Approx(u[1]).margin(1e-12));
    }

    CHECK_THROWS_AS(s.point({200, 0}), std::out_of_range);
    CHECK_THROWS_AS(DesignSpace({{"a", 1, 1}}), std::invalid_argument);
    CHECK_THROWS_AS(DesignSpace({{"a", 0, 1, Scale::Log}}), std::invalid_argument);
    CHECK_THROWS_AS(DesignSpace({{"a", 0, 1}, {"a", 0, 2}}), std::invalid_argument);
}

TEST_CASE("core types survive a JSON round trip") {
    for (const auto& task : default_suite()) {
        const auto j = task_to_json(task.requirements);
        CHECK(task_from_json(Json::parse(j.dump())) == task.requirements);
    }
    Rng rng(5);
    for (int i = 0; i < 200; ++i) {
        MetricVector m{rng.uniform(0, 1e6), rng.uniform(0, 1e4), rng.uniform(0, 150), rng.uniform(0, 100),
                       rng.uniform(0, 1e3)};
        REQUIRE(metrics_from_json(Json::parse(metrics_to_json(m).dump())) == m);
        const auto o = SimOutcome::ok(m);
        REQUIRE(outcome_from_json(Json::parse(outcome_to_json(o).dump())) == o);
    }
    const auto bad = SimOutcome::infeasible("timeout");
    CHECK(outcome_from_json(outcome_to_json(bad)) == bad);

    DesignSpace s({{"ib", 1, 500, Scale::Log}, {"x", -1, 1, Scale::Linear}});
    CHECK(space_from_json(Json::parse(space_to_json(s).dump())) == s);
}
