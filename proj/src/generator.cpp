#include "opsizer/generator.hpp"

#include "httplib.h"
#include "opsizer/process.hpp"
#include "opsizer/util.hpp"

namespace opsizer {

namespace {

std::string http_post(const std::string& url, const std::string& body, std::chrono::milliseconds timeout) {
    // scheme://host[:port]/path
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw GeneratorError("bad generator url '" + url + "'");
    const auto path_start = url.find('/', scheme_end + 3);
    const std::string origin = path_start == std::string::npos ? url : url.substr(0, path_start);
    const std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);

    httplib::Client client(origin);
    const auto secs = timeout.count() / 1000;
    const auto usecs = (timeout.count() % 1000) * 1000;
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);
    auto res = client.Post(path, body, "application/json");
    if (!res) throw GeneratorError("generator endpoint unreachable: " + httplib::to_string(res.error()));
    if (res->status != 200)
        throw GeneratorError("generator endpoint returned HTTP " + std::to_string(res->status));
    return res->body;
}

}  // namespace

Json make_generator_request(const RequirementSet& req, const EoaProfile& profile) {
    Json rank = Json::object(), eoa = Json::object();
    for (auto m : req.constrained()) {
        if (!profile.entries.has(m)) continue;
        rank[std::string(metric_name(m))] = profile.entries[m]->rank;
        eoa[std::string(metric_name(m))] = profile.entries[m]->eoa;
    }
    return Json{{"requirements", requirements_to_json(req)}, {"rank", rank}, {"eoa", eoa}};
}

LossSpec parse_generator_response(std::string_view body, const RequirementSet& req) {
    LossSpec spec;
    try {
        spec = loss_from_json(Json::parse(body));
    } catch (const Json::exception& e) {
        throw GeneratorError(std::string("malformed generator response: ") + e.what());
    } catch (const FormatError& e) {
        throw GeneratorError(std::string("malformed generator response: ") + e.what());
    }
    spec.revision = 0;
    spec.provenance = Provenance::External;
    try {
        validate_loss_spec(spec, req);
    } catch (const LossSpecError& e) {
        throw GeneratorError(std::string("invalid generator response: ") + e.what());
    }
    return spec;
}

GeneratorResult generator_dispatch(const GeneratorConfig& cfg, const RequirementSet& req,
                                   const EoaProfile& profile) {
    GeneratorResult result;
    result.spec = synthesize_loss(req, profile);
    if (cfg.kind == GeneratorKind::RuleBased) return result;

    try {
        const std::string request = make_generator_request(req, profile).dump();
        std::string response;
        if (!cfg.command.empty()) {
            const auto r = run_shell(cfg.command, request, cfg.timeout);
            if (!r.launched) throw GeneratorError("generator command could not be launched");
            if (r.timed_out) throw GeneratorError("generator command timed out");
            if (r.exit_code != 0)
                throw GeneratorError("generator command exited with status " + std::to_string(r.exit_code));
            response = r.out;
        } else if (!cfg.url.empty()) {
            response = http_post(cfg.url, request, cfg.timeout);
        } else {
            throw GeneratorError("external generator configured without a command or url");
        }
        result.spec = parse_generator_response(response, req);
    } catch (const std::exception& e) {
        result.fell_back = true;
        result.warning = std::string(e.what()) + "; falling back to the rule-based loss";
        log_warning(result.warning);
    }
    return result;
}

}  // namespace opsizer
