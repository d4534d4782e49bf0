#include <catch2/catch_amalgamated.hpp>

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <thread>

#include "httplib.h"
#include "opsizer/eval.hpp"
#include "opsizer/generator.hpp"

using namespace opsizer;
namespace fs = std::filesystem;

namespace {

RequirementSet t3() { return default_suite()[2].requirements; }

EoaProfile profile_for(const RequirementSet& req) {
    std::vector<MetricVector> rows;
    for (int i = 1; i <= 40; ++i) rows.push_back({250.0 * i, 60.0 * i, 2.0 * i, 0.2 * i, 10.0 * i});
    return build_profile(MetricCorpus::from_vectors(rows), req);
}

LossSpec external_spec(const RequirementSet& req) {
    LossSpec s;
    for (auto m : req.constrained()) {
        const int e = m == MetricId::Gain ? 3 : (m == MetricId::SR ? 2 : 1);
        for (auto& t : terms_for(m, *req.bounds[m], e, 0.5)) s.terms.push_back(t);
    }
    return s;
}

struct CapturedLog {
    std::vector<std::string> warnings;
    LogSink previous;
    CapturedLog() {
        previous = set_log_sink([this](LogLevel l, std::string_view msg) {
            if (l == LogLevel::Warning) warnings.emplace_back(msg);
        });
    }
    ~CapturedLog() { set_log_sink(previous); }
};

fs::path write_temp(const std::string& name, const std::string& text) {
    const auto p = fs::temp_directory_path() / ("opsizer-gen-" + std::to_string(::getpid()) + "-" + name);
    std::ofstream(p) << text;
    return p;
}

}  // namespace

TEST_CASE("rule-based dispatch is synthesize_loss") {
    const auto req = t3();
    const auto profile = profile_for(req);
    const auto r = generator_dispatch(GeneratorConfig{}, req, profile);
    CHECK(r.spec == synthesize_loss(req, profile));
    CHECK_FALSE(r.fell_back);
}

TEST_CASE("generator request carries requirements, ranks and eoa") {
    const auto req = t3();
    const auto j = make_generator_request(req, profile_for(req));
    CHECK(j["requirements"].contains("Gain"));
    CHECK(j["rank"].size() == 4);
    CHECK(j["eoa"].size() == 4);
}

TEST_CASE("command generator") {
    const auto req = t3();
    const auto profile = profile_for(req);
    GeneratorConfig cfg;
    cfg.kind = GeneratorKind::External;

    SECTION("a valid spec is accepted verbatim") {
        const auto f = write_temp("ok.json", loss_to_json(external_spec(req)).dump());
        cfg.command = "cat >/dev/null; cat '" + f.string() + "'";
        const auto r = generator_dispatch(cfg, req, profile);
        CHECK_FALSE(r.fell_back);
        CHECK(r.spec.terms == external_spec(req).terms);
        CHECK(r.spec.provenance == Provenance::External);
        fs::remove(f);
    }

    SECTION("the request arrives on stdin") {
        const auto f = write_temp("req.json", "");
        cfg.command = "cat > '" + f.string() + "'; exit 3";
        CapturedLog log;
        generator_dispatch(cfg, req, profile);
        CHECK(Json::parse(read_file(f)) == make_generator_request(req, profile));
        fs::remove(f);
    }

    SECTION("a spec without the PM term falls back with a warning") {
        auto s = external_spec(req);
        std::erase_if(s.terms, [](const LossTerm& t) { return t.metric == MetricId::PM; });
        const auto f = write_temp("nopm.json", loss_to_json(s).dump());
        cfg.command = "cat '" + f.string() + "'";
        CapturedLog log;
        const auto r = generator_dispatch(cfg, req, profile);
        CHECK(r.fell_back);
        CHECK(r.spec == synthesize_loss(req, profile));
        REQUIRE(log.warnings.size() == 1);
        CHECK_THAT(log.warnings[0], Catch::Matchers::ContainsSubstring("PM"));
        fs::remove(f);
    }

    SECTION("garbage, failures and timeouts fall back") {
        CapturedLog log;
        for (const std::string cmd : {"echo not json", "exit 2", "sleep 5"}) {
            cfg.command = cmd;
            cfg.timeout = std::chrono::milliseconds(300);
            const auto r = generator_dispatch(cfg, req, profile);
            CHECK(r.fell_back);
            CHECK(r.spec == synthesize_loss(req, profile));
        }
        CHECK(log.warnings.size() == 3);
    }

    SECTION("nothing configured falls back") {
        CapturedLog log;
        CHECK(generator_dispatch(cfg, req, profile).fell_back);
    }
}

TEST_CASE("HTTP generator") {
    const auto req = t3();
    const auto profile = profile_for(req);

    httplib::Server server;
    std::string seen;
    server.Post("/loss", [&](const httplib::Request& rq, httplib::Response& rs) {
        seen = rq.body;
        rs.set_content(loss_to_json(external_spec(req)).dump(), "application/json");
    });
    server.Post("/slow", [&](const httplib::Request&, httplib::Response& rs) {
        std::this_thread::sleep_for(std::chrono::milliseconds(1500));
        rs.set_content("{}", "application/json");
    });
    server.Post("/broken", [&](const httplib::Request&, httplib::Response& rs) { rs.status = 500; });
    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread th([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    GeneratorConfig cfg;
    cfg.kind = GeneratorKind::External;
    const std::string base = "http://127.0.0.1:" + std::to_string(port);

    cfg.url = base + "/loss";
    const auto ok = generator_dispatch(cfg, req, profile);
    CHECK_FALSE(ok.fell_back);
    CHECK(ok.spec.terms == external_spec(req).terms);
    CHECK(Json::parse(seen) == make_generator_request(req, profile));

    CapturedLog log;
    cfg.url = base + "/broken";
    CHECK(generator_dispatch(cfg, req, profile).fell_back);
    cfg.url = base + "/slow";
    cfg.timeout = std::chrono::milliseconds(200);
    CHECK(generator_dispatch(cfg, req, profile).fell_back);
    cfg.url = "not a url";
    CHECK(generator_dispatch(cfg, req, profile).fell_back);
    CHECK(log.warnings.size() == 3);

    server.stop();
    th.join();
}

TEST_CASE("rescaling the whole loss leaves the search unchanged") {
    // Every optimizer decision compares losses, and feedback picks terms by
    // unscaled deviation, so multiplying all scales by a constant must give
    // the same points, the same misses and the same success rate.
    SurrogateSimulator sim;
    auto task = default_suite()[3].requirements;
    task.bounds[MetricId::Gain] = Bound::at_least(1e6);  // forces PSO and feedback

    auto scaled = uniform_quadratic_loss(task);
    for (auto& t : scaled.terms) t.scale = 4.0;  // a power of two keeps every product exact
    const auto f = write_temp("scaled.json", loss_to_json(scaled).dump());

    std::vector<MetricVector> rows{{1, 1, 1, 1, 1}, {1e9, 1e9, 100, 1e3, 1e-3}};
    const auto corpus = MetricCorpus::from_vectors(rows);

    for (std::uint64_t seed : {1, 2}) {
        SizingConfig a;
        a.threads = 1;
        a.de.seed = seed;
        a.pso.seed = seed;
        a.loss_mode = LossMode::UniformQuadratic;
        SizingConfig b = a;
        b.loss_mode = LossMode::Synthesized;
        b.generator.kind = GeneratorKind::External;
        b.generator.command = "cat '" + f.string() + "'";

        const auto ra = run_sizing(task, sim, corpus, a);
        const auto rb = run_sizing(task, sim, corpus, b);
        REQUIRE(rb.loss_history.front().provenance == Provenance::External);
        CHECK(ra.best_point == rb.best_point);
        CHECK(ra.best_misses == rb.best_misses);
        CHECK(ra.status == rb.status);
        CHECK(ra.evaluations == rb.evaluations);
        CHECK(ra.feedback_count() == rb.feedback_count());
    }
    fs::remove(f);
}
