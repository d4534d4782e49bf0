#include "opsizer/io.hpp"

#include <unistd.h>

#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace opsizer {

namespace {

double number(const Json& j, const char* what) {
    if (!j.is_number()) throw FormatError(std::string(what) + " must be a number");
    return j.get<double>();
}

const Json& field(const Json& j, const char* key) {
    if (!j.is_object() || !j.contains(key))
        throw FormatError(std::string("missing field '") + key + "'");
    return j.at(key);
}

Scale parse_scale(const std::string& s) {
    if (s == "linear") return Scale::Linear;
    if (s == "log") return Scale::Log;
    throw FormatError("unknown scale '" + s + "' (expected linear or log)");
}

Provenance parse_provenance(const std::string& s) {
    for (auto p : {Provenance::RuleBased, Provenance::External, Provenance::Uniform}) {
        if (s == provenance_name(p)) return p;
    }
    throw FormatError("unknown provenance '" + s + "'");
}

}  // namespace

Json requirements_to_json(const RequirementSet& req) {
    Json out = Json::object();
    for (auto m : req.constrained()) {
        const Bound& b = *req.bounds[m];
        Json entry;
        entry["kind"] = std::string(bound_kind_name(b.kind));
        switch (b.kind) {
            case BoundKind::AtLeast: entry["value"] = b.lower; break;
            case BoundKind::AtMost: entry["value"] = b.upper; break;
            case BoundKind::InRange: entry["value"] = Json::array({b.lower, b.upper}); break;
        }
        out[std::string(metric_name(m))] = std::move(entry);
    }
    return out;
}

PerMetric<Bound> requirements_from_json(const Json& j) {
    if (!j.is_object()) throw FormatError("requirements must be an object");
    PerMetric<Bound> bounds;
    for (const auto& [key, entry] : j.items()) {
        const auto m = parse_metric(key);
        if (!m) throw FormatError("unknown metric name '" + key + "'");
        if (bounds.has(*m)) throw FormatError("metric '" + key + "' listed twice");
        const auto& kind_j = field(entry, "kind");
        if (!kind_j.is_string()) throw FormatError(key + ": kind must be a string");
        const auto kind = parse_bound_kind(kind_j.get<std::string>());
        if (!kind) throw FormatError(key + ": unknown bound kind '" + kind_j.get<std::string>() + "'");
        const auto& value = field(entry, "value");
        switch (*kind) {
            case BoundKind::AtLeast: bounds[*m] = Bound::at_least(number(value, "value")); break;
            case BoundKind::AtMost: bounds[*m] = Bound::at_most(number(value, "value")); break;
            case BoundKind::InRange:
                if (!value.is_array() || value.size() != 2)
                    throw FormatError(key + ": in-range value must be [low, high]");
                bounds[*m] = Bound::in_range(number(value[0], "low"), number(value[1], "high"));
                break;
        }
    }
    RequirementSet probe;
    probe.bounds = bounds;
    validate_requirements(probe);
    return bounds;
}

Json task_to_json(const RequirementSet& req) {
    return Json{{"name", req.name}, {"requirements", requirements_to_json(req)}};
}

RequirementSet task_from_json(const Json& j) {
    RequirementSet req;
    const auto& name = field(j, "name");
    if (!name.is_string()) throw FormatError("name must be a string");
    req.name = name.get<std::string>();
    req.bounds = requirements_from_json(field(j, "requirements"));
    return req;
}

RequirementSet load_task(const std::filesystem::path& path) {
    Json j;
    try {
        j = Json::parse(read_file(path));
    } catch (const Json::exception& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
    return task_from_json(j);
}

Json metrics_to_json(const MetricVector& m) {
    Json out = Json::object();
    for (auto id : kAllMetrics) out[std::string(metric_name(id))] = m[id];
    return out;
}

MetricVector metrics_from_json(const Json& j) {
    MetricVector m;
    for (auto id : kAllMetrics) m[id] = number(field(j, std::string(metric_name(id)).c_str()), "metric");
    return m;
}

Json outcome_to_json(const SimOutcome& o) {
    if (o.feasible()) return metrics_to_json(o.metrics());
    return Json{{"infeasible", o.diagnostic()}};
}

SimOutcome outcome_from_json(const Json& j) {
    if (j.is_object() && j.contains("infeasible"))
        return SimOutcome::infeasible(j.at("infeasible").get<std::string>());
    return SimOutcome::ok(metrics_from_json(j));
}

Json space_to_json(const DesignSpace& s) {
    Json params = Json::array();
    for (const auto& p : s.params()) {
        params.push_back({{"name", p.name},
                          {"lower", p.lower},
                          {"upper", p.upper},
                          {"scale", p.scale == Scale::Log ? "log" : "linear"}});
    }
    return Json{{"parameters", params}};
}

DesignSpace space_from_json(const Json& j) {
    const auto& arr = field(j, "parameters");
    if (!arr.is_array()) throw FormatError("parameters must be an array");
    std::vector<Parameter> params;
    for (const auto& e : arr) {
        Parameter p;
        p.name = field(e, "name").get<std::string>();
        p.lower = number(field(e, "lower"), "lower");
        p.upper = number(field(e, "upper"), "upper");
        p.scale = e.contains("scale") ? parse_scale(e.at("scale").get<std::string>()) : Scale::Linear;
        params.push_back(std::move(p));
    }
    try {
        return DesignSpace(std::move(params));
    } catch (const std::invalid_argument& e) {
        throw FormatError(e.what());
    }
}

DesignSpace load_space(const std::filesystem::path& path) {
    try {
        return space_from_json(Json::parse(read_file(path)));
    } catch (const Json::exception& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

Json loss_to_json(const LossSpec& spec) {
    Json terms = Json::array();
    for (const auto& t : spec.terms) {
        terms.push_back({{"metric", std::string(metric_name(t.metric))},
                         {"weight", t.weight},
                         {"threshold", t.threshold},
                         {"exponent", t.exponent},
                         {"scale", t.scale}});
    }
    return Json{{"revision", spec.revision},
                {"provenance", std::string(provenance_name(spec.provenance))},
                {"terms", terms}};
}

LossSpec loss_from_json(const Json& j) {
    LossSpec spec;
    const auto& terms = field(j, "terms");
    if (!terms.is_array()) throw FormatError("terms must be an array");
    for (const auto& e : terms) {
        LossTerm t;
        const auto& metric = field(e, "metric");
        if (!metric.is_string()) throw FormatError("term metric must be a string");
        const auto m = parse_metric(metric.get<std::string>());
        if (!m) throw FormatError("unknown metric name '" + metric.get<std::string>() + "'");
        t.metric = *m;
        const auto& w = field(e, "weight");
        const auto& x = field(e, "exponent");
        if (!w.is_number_integer() || !x.is_number_integer())
            throw FormatError("term weight and exponent must be integers");
        t.weight = w.get<int>();
        t.exponent = x.get<int>();
        t.threshold = number(field(e, "threshold"), "threshold");
        t.scale = number(field(e, "scale"), "scale");
        spec.terms.push_back(t);
    }
    if (j.contains("revision")) spec.revision = j.at("revision").get<int>();
    if (j.contains("provenance")) spec.provenance = parse_provenance(j.at("provenance").get<std::string>());
    return spec;
}

Json profile_to_json(const EoaProfile& p) {
    Json out = Json::object();
    for (auto m : kAllMetrics) {
        if (!p.entries.has(m)) continue;
        const auto& e = *p.entries[m];
        out[std::string(metric_name(m))] = {
            {"rank", e.rank}, {"eoa", e.eoa}, {"difficulty", std::string(difficulty_name(e.difficulty))}};
    }
    return out;
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string corpus_to_csv(const MetricCorpus& corpus) {
    std::string out(kCorpusHeader);
    out += '\n';
    for (const auto& row : corpus.rows()) {
        for (std::size_t i = 0; i < kMetricCount; ++i) {
            if (i) out += ',';
            out += format_double(row[kAllMetrics[i]]);
        }
        out += '\n';
    }
    return out;
}

MetricCorpus corpus_from_csv(std::string_view text) {
    std::vector<MetricVector> rows;
    std::size_t line_no = 0;
    bool header_seen = false;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.remove_suffix(1);
        while (!line.empty() && line.front() == ' ') line.remove_prefix(1);
        if (line.empty()) continue;
        if (!header_seen) {
            std::string compact;
            for (char c : line) {
                if (c != ' ') compact += c;
            }
            if (compact != kCorpusHeader)
                throw FormatError("corpus header must be '" + std::string(kCorpusHeader) + "'");
            header_seen = true;
            continue;
        }
        if (line.find(kInfeasibleMarker) != std::string_view::npos) continue;

        MetricVector m;
        std::size_t field_idx = 0, start = 0;
        while (true) {
            const auto comma = line.find(',', start);
            auto cell = line.substr(start, comma == std::string_view::npos ? line.npos : comma - start);
            while (!cell.empty() && cell.front() == ' ') cell.remove_prefix(1);
            while (!cell.empty() && cell.back() == ' ') cell.remove_suffix(1);
            if (field_idx >= kMetricCount)
                throw FormatError("corpus line " + std::to_string(line_no) + ": too many fields");
            double v = 0.0;
            const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
            if (res.ec != std::errc() || res.ptr != cell.data() + cell.size() || !std::isfinite(v))
                throw FormatError("corpus line " + std::to_string(line_no) + ": bad number '" +
                                  std::string(cell) + "'");
            m[kAllMetrics[field_idx++]] = v;
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
        if (field_idx != kMetricCount)
            throw FormatError("corpus line " + std::to_string(line_no) + ": expected 5 fields");
        rows.push_back(m);
    }
    if (!header_seen) throw FormatError("corpus file is empty");
    return MetricCorpus::from_vectors(rows);
}

MetricCorpus load_corpus(const std::filesystem::path& path) { return corpus_from_csv(read_file(path)); }

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
    static std::atomic<unsigned> counter{0};
    auto tmp = path;
    tmp += ".tmp." + std::to_string(::getpid()) + "." + std::to_string(counter++);
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) throw std::runtime_error("write failed for '" + tmp.string() + "'");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw std::runtime_error("cannot rename onto '" + path.string() + "': " + ec.message());
    }
}

}  // namespace opsizer
