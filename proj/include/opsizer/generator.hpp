#pragma once

#include <chrono>
#include <string>

#include "opsizer/io.hpp"
#include "opsizer/loss.hpp"

namespace opsizer {

enum class GeneratorKind { RuleBased, External };

/// Where loss specs come from. The external backend is either a command (request
/// JSON on stdin, response JSON on stdout) or an HTTP endpoint (POST).
struct GeneratorConfig {
    GeneratorKind kind = GeneratorKind::RuleBased;
    std::string command;
    std::string url;
    std::chrono::milliseconds timeout{30000};
};

struct GeneratorResult {
    LossSpec spec;
    bool fell_back = false;
    std::string warning;
};

class GeneratorError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// {"requirements": {...task requirements...}, "rank": {metric: r}, "eoa": {metric: e}}
Json make_generator_request(const RequirementSet& req, const EoaProfile& profile);

/// Parses {"terms": [...]} and validates it against `req`. Throws GeneratorError.
LossSpec parse_generator_response(std::string_view body, const RequirementSet& req);

/// Rule-based synthesis, or the external backend with fallback to the rule-based
/// spec (and a logged warning) on any transport, parse or validation failure.
GeneratorResult generator_dispatch(const GeneratorConfig& cfg, const RequirementSet& req,
                                   const EoaProfile& profile);

}  // namespace opsizer
