#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

#include "json.hpp"
#include "opsizer/core.hpp"
#include "opsizer/eoa.hpp"
#include "opsizer/loss.hpp"

namespace opsizer {

using Json = nlohmann::json;

/// Malformed input files (task, corpus, config, space).
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Task files: {"name": "T1", "requirements": {"BW": {"kind": "at-least", "value": 5000},
//                                              "PM": {"kind": "in-range", "value": [60, 90]}}}
Json requirements_to_json(const RequirementSet& req);
/// Parses the "requirements" map and validates it. Unknown metric names, bad
/// kinds or malformed values throw FormatError; invalid bounds throw RequirementError.
PerMetric<Bound> requirements_from_json(const Json& j);
Json task_to_json(const RequirementSet& req);
RequirementSet task_from_json(const Json& j);
RequirementSet load_task(const std::filesystem::path& path);

Json metrics_to_json(const MetricVector& m);
MetricVector metrics_from_json(const Json& j);
/// Infeasible outcomes serialize as {"infeasible": "<reason>"}.
Json outcome_to_json(const SimOutcome& o);
SimOutcome outcome_from_json(const Json& j);

// {"parameters": [{"name": "ib", "lower": 1, "upper": 500, "scale": "log"}, ...]}
Json space_to_json(const DesignSpace& s);
DesignSpace space_from_json(const Json& j);
DesignSpace load_space(const std::filesystem::path& path);

// {"revision": 0, "provenance": "rule-based", "terms": [{metric, weight, threshold, exponent, scale}]}
Json loss_to_json(const LossSpec& spec);
LossSpec loss_from_json(const Json& j);

Json profile_to_json(const EoaProfile& p);

/// Corpus file: header "BW,Gain,PM,SR,IDC" then one sample per line. Lines
/// holding the infeasible marker are skipped on load.
inline constexpr std::string_view kCorpusHeader = "BW,Gain,PM,SR,IDC";
inline constexpr std::string_view kInfeasibleMarker = "infeasible";
std::string corpus_to_csv(const MetricCorpus& corpus);
MetricCorpus corpus_from_csv(std::string_view text);
MetricCorpus load_corpus(const std::filesystem::path& path);

/// Shortest round-trip decimal representation.
std::string format_double(double v);

std::string read_file(const std::filesystem::path& path);
/// Writes through a sibling temp file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace opsizer
