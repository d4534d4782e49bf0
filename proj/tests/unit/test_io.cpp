#include <catch2/catch_amalgamated.hpp>

#include <unistd.h>

#include <filesystem>

#include "opsizer/eval.hpp"
#include "opsizer/io.hpp"

using namespace opsizer;
namespace fs = std::filesystem;

TEST_CASE("task files") {
    const auto j = Json::parse(R"({
        "name": "T4",
        "requirements": {
            "BW":   {"kind": "at-least", "value": 5000},
            "Gain": {"kind": "at-least", "value": 1000},
            "PM":   {"kind": "in-range", "value": [60, 90]},
            "SR":   {"kind": "at-least", "value": 10},
            "IDC":  {"kind": "at-most",  "value": 300}
        }})");
    CHECK(task_from_json(j) == default_suite()[3].requirements);

    CHECK_THROWS_AS(task_from_json(Json::parse(R"({"name":"x","requirements":{"PM":{"kind":"in-range","value":60}}})")),
                    FormatError);
    CHECK_THROWS_AS(task_from_json(Json::parse(R"({"name":"x","requirements":{"PM":{"kind":"sideways","value":[1,2]}}})")),
                    FormatError);
    CHECK_THROWS_AS(task_from_json(Json::parse(R"({"name":"x","requirements":{"PM":{"kind":"in-range","value":[90,60]}}})")),
                    RequirementError);
    CHECK_THROWS_AS(task_from_json(Json::parse(R"({"requirements":{}})")), FormatError);
}

TEST_CASE("corpus CSV") {
    const std::vector<MetricVector> rows{{1e4, 1500, 70, 12, 300}, {0.5, 2, 3, 4, 5}};
    const auto c = MetricCorpus::from_vectors(rows);
    const auto text = corpus_to_csv(c);
    CHECK(text.rfind("BW,Gain,PM,SR,IDC\n", 0) == 0);
    CHECK(corpus_from_csv(text).rows() == rows);

    const auto mixed = corpus_from_csv("BW,Gain,PM,SR,IDC\n1,2,3,4,5\ninfeasible\n\n6,7,8,9,10\r\n");
    CHECK(mixed.size() == 2);
    CHECK(mixed.rows()[1] == MetricVector{6, 7, 8, 9, 10});

    CHECK_THROWS_AS(corpus_from_csv("Gain,BW\n1,2\n"), FormatError);
    CHECK_THROWS_AS(corpus_from_csv("BW,Gain,PM,SR,IDC\n1,2,3\n"), FormatError);
    CHECK_THROWS_AS(corpus_from_csv("BW,Gain,PM,SR,IDC\n1,2,3,4,x\n"), FormatError);
    CHECK_THROWS_AS(corpus_from_csv("BW,Gain,PM,SR,IDC\n1,2,3,4,5,6\n"), FormatError);
}

TEST_CASE("format_double round trips") {
    Rng rng(2);
    for (int i = 0; i < 1000; ++i) {
        const double v = rng.uniform(-1e6, 1e6) * std::pow(10.0, rng.uniform(-10, 10));
        REQUIRE(std::stod(format_double(v)) == v);
    }
}

TEST_CASE("atomic writes replace the file") {
    const auto p = fs::temp_directory_path() / ("opsizer-io-" + std::to_string(::getpid()) + ".txt");
    write_file_atomic(p, "one");
    write_file_atomic(p, "two");
    CHECK(read_file(p) == "two");
    for (const auto& e : fs::directory_iterator(p.parent_path()))
        CHECK(e.path().filename().string().find(p.filename().string() + ".tmp") == std::string::npos);
    fs::remove(p);
    CHECK_THROWS_AS(read_file(p), FormatError);
}

TEST_CASE("design space files") {
    const auto j = Json::parse(R"({"parameters": [
        {"name": "ib", "lower": 1, "upper": 500, "scale": "log"},
        {"name": "vb", "lower": 0.2, "upper": 1.2}]})");
    const auto s = space_from_json(j);
    CHECK(s.dim() == 2);
    CHECK(s.param(0).scale == Scale::Log);
    CHECK(s.param(1).scale == Scale::Linear);
    CHECK_THROWS(space_from_json(Json::parse(R"({"parameters": [{"name": "x", "lower": 2, "upper": 1}]})")));
}
