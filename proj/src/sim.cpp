#include "opsizer/sim.hpp"

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>

#include "opsizer/io.hpp"
#include "opsizer/process.hpp"

namespace opsizer {

MetricVector surrogate_model(const SurrogateParams& p, const SurrogateConstants& c) {
    const double id1 = p.ib / 2.0;  // uA
    const double id6 = 2.0 * p.ib;  // uA
    const double gm1 = std::sqrt(2.0 * c.kprime * p.w1_l1 * id1);  // uA/V
    const double gm6 = std::sqrt(2.0 * c.kprime * p.w6_l6 * id6);  // uA/V

    const double gain = (gm1 / (2.0 * c.lambda * id1)) * (gm6 / (2.0 * c.lambda * id6));

    constexpr double two_pi = 2.0 * std::numbers::pi;
    const double gbw = gm1 * 1e-6 / (two_pi * p.cc * 1e-12);  // Hz
    const double p2 = gm6 * 1e-6 / (two_pi * c.cl * 1e-12);
    const double z = gm6 * 1e-6 / (two_pi * p.cc * 1e-12);
    constexpr double deg = 180.0 / std::numbers::pi;
    const double pm = 90.0 - std::atan(gbw / p2) * deg - std::atan(gbw / z) * deg;

    MetricVector m;
    m.gain = gain;
    m.bw = gbw / gain;
    m.pm = std::clamp(pm, 0.0, 150.0);
    m.sr = p.ib / (2.0 * p.cc);  // uA/pF == V/us
    m.idc = 3.0 * p.ib;
    return m;
}

DesignSpace surrogate_space() {
    return DesignSpace({{"ib", 1.0, 500.0, Scale::Log},
                        {"w1_l1", 1.0, 500.0, Scale::Log},
                        {"w6_l6", 1.0, 500.0, Scale::Log},
                        {"cc", 0.1, 20.0, Scale::Log}});
}

SurrogateSimulator::SurrogateSimulator(SurrogateConstants constants)
    : space_(surrogate_space()), constants_(constants) {
    if (!(constants_.kprime > 0.0 && constants_.lambda > 0.0 && constants_.cl > 0.0))
        throw std::invalid_argument("surrogate constants must be positive");
}

SimOutcome SurrogateSimulator::simulate(const DesignPoint& point) const {
    if (point.values.size() != space_.dim())
        throw std::invalid_argument("surrogate: point dimension mismatch");
    const auto& v = point.values;
    return SimOutcome::ok(surrogate_model({v[0], v[1], v[2], v[3]}, constants_));
}

// --- netlist templating -------------------------------------------------------

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

struct Token {
    std::size_t begin;  // offset of "{{"
    std::size_t end;    // one past "}}"
    std::string name;
};

std::vector<Token> scan_tokens(std::string_view tmpl) {
    std::vector<Token> out;
    std::size_t pos = 0;
    while ((pos = tmpl.find("{{", pos)) != std::string_view::npos) {
        const auto close = tmpl.find("}}", pos + 2);
        if (close == std::string_view::npos)
            throw TemplateError("unterminated placeholder at offset " + std::to_string(pos));
        out.push_back({pos, close + 2, std::string(trim(tmpl.substr(pos + 2, close - pos - 2)))});
        pos = close + 2;
    }
    return out;
}

void check_known(const std::vector<Token>& tokens, const DesignSpace& space) {
    std::vector<std::string> unknown;
    for (const auto& t : tokens) {
        if (!space.find(t.name) &&
            std::find(unknown.begin(), unknown.end(), t.name) == unknown.end())
            unknown.push_back(t.name);
    }
    if (unknown.empty()) return;
    std::string msg = "template mismatch: unknown placeholder(s)";
    for (const auto& u : unknown) msg += " {{" + u + "}}";
    throw TemplateError(msg);
}

}  // namespace

std::vector<std::string> template_placeholders(std::string_view tmpl) {
    std::vector<std::string> names;
    for (auto& t : scan_tokens(tmpl)) names.push_back(std::move(t.name));
    return names;
}

std::string format_spice_number(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::scientific);
    std::string s(buf, res.ptr);
    const auto e = s.find('e');
    if (e == std::string::npos) return s;
    std::string mantissa = s.substr(0, e);
    std::string exp = s.substr(e + 1);
    bool negative = false;
    if (!exp.empty() && (exp[0] == '+' || exp[0] == '-')) {
        negative = exp[0] == '-';
        exp.erase(0, 1);
    }
    exp.erase(0, std::min(exp.find_first_not_of('0'), exp.size() - 1));
    return mantissa + "e" + (negative ? "-" : "") + exp;
}

RenderResult render_netlist(std::string_view tmpl, const DesignSpace& space, const DesignPoint& point) {
    if (point.values.size() != space.dim())
        throw std::invalid_argument("render_netlist: point dimension mismatch");
    const auto tokens = scan_tokens(tmpl);
    check_known(tokens, space);

    RenderResult r;
    std::set<std::string> used;
    std::size_t last = 0;
    for (const auto& t : tokens) {
        r.text.append(tmpl.substr(last, t.begin - last));
        r.text += format_spice_number(point.values[*space.find(t.name)]);
        used.insert(t.name);
        last = t.end;
    }
    r.text.append(tmpl.substr(last));

    if (tokens.empty()) {
        r.warnings.push_back("template uses no parameters");
    } else {
        for (const auto& p : space.params()) {
            if (!used.count(p.name)) r.warnings.push_back("parameter '" + p.name + "' is not used by the template");
        }
    }
    return r;
}

// --- measurement parsing -----------------------------------------------------

SimOutcome parse_measurements(std::string_view output) {
    static constexpr std::array<std::pair<std::string_view, MetricId>, 5> names{{
        {"bw", MetricId::BW}, {"gain", MetricId::Gain}, {"pm", MetricId::PM},
        {"sr", MetricId::SR}, {"idc", MetricId::IDC}}};

    PerMetric<double> found;
    PerMetric<bool> failed;
    std::size_t pos = 0;
    while (pos < output.size()) {
        const auto nl = output.find('\n', pos);
        const auto raw = output.substr(pos, nl == std::string_view::npos ? output.npos : nl - pos);
        pos = nl == std::string_view::npos ? output.size() : nl + 1;

        std::string line(trim(raw));
        std::transform(line.begin(), line.end(), line.begin(),
                       [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
        if (line.empty()) continue;

        // Identifier at the start of the line.
        std::size_t id_end = 0;
        while (id_end < line.size() && (std::isalnum(static_cast<unsigned char>(line[id_end])) || line[id_end] == '_'))
            ++id_end;
        const std::string_view ident(line.data(), id_end);

        if (line.find("fail") != std::string::npos) {
            for (const auto& [name, id] : names) {
                // token match anywhere on a failure line
                std::size_t at = 0;
                while ((at = line.find(name, at)) != std::string::npos) {
                    const bool left = at == 0 || !std::isalnum(static_cast<unsigned char>(line[at - 1]));
                    const auto after = at + name.size();
                    const bool right = after >= line.size() || !std::isalnum(static_cast<unsigned char>(line[after]));
                    if (left && right) failed[id] = true;
                    at = after;
                }
            }
            continue;
        }

        for (const auto& [name, id] : names) {
            if (ident != name) continue;
            std::string_view rest = trim(std::string_view(line).substr(id_end));
            if (rest.empty() || rest.front() != '=') break;
            rest = trim(rest.substr(1));
            double v = 0.0;
            const auto res = std::from_chars(rest.data(), rest.data() + rest.size(), v);
            if (res.ec == std::errc() && std::isfinite(v)) found[id] = v;
            break;
        }
    }

    MetricVector m;
    std::string missing;
    for (const auto& [name, id] : names) {
        if (failed.has(id) || !found.has(id)) {
            missing += missing.empty() ? "" : ",";
            missing += name;
        } else {
            m[id] = *found[id];
        }
    }
    if (!missing.empty()) return SimOutcome::infeasible("missing or failed measurement(s): " + missing);
    return SimOutcome::ok(m);
}

// --- ngspice adapter ----------------------------------------------------------

NgspiceSimulator::NgspiceSimulator(DesignSpace space, NgspiceConfig cfg)
    : space_(std::move(space)), cfg_(std::move(cfg)) {
    if (cfg_.timeout.count() <= 0) throw std::invalid_argument("simulation timeout must be > 0");
    if (cfg_.netlist_template.empty() || !std::filesystem::exists(cfg_.netlist_template))
        throw TemplateError("netlist template '" + cfg_.netlist_template.string() + "' does not exist");
    template_ = read_file(cfg_.netlist_template);
    check_known(scan_tokens(template_), space_);
    root_ = cfg_.work_dir.empty() ? std::filesystem::temp_directory_path() / "opsizer-ngspice" : cfg_.work_dir;
}

SimOutcome NgspiceSimulator::simulate(const DesignPoint& point) const {
    static std::atomic<unsigned long> serial{0};
    const auto rendered = render_netlist(template_, space_, point);

    const auto dir = root_ / ("eval-" + std::to_string(::getpid()) + "-" + std::to_string(serial++));
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) return SimOutcome::infeasible("cannot create " + dir.string() + ": " + ec.message());
    {
        std::ofstream out(dir / "netlist.cir", std::ios::binary);
        out << rendered.text;
        if (!out) return SimOutcome::infeasible("cannot write netlist in " + dir.string());
    }

    const auto r = run_process({cfg_.ngspice_bin, "-b", "netlist.cir"}, "", cfg_.timeout, dir);
    SimOutcome outcome;
    if (!r.launched) {
        outcome = SimOutcome::infeasible("could not launch '" + cfg_.ngspice_bin + "'");
    } else if (r.timed_out) {
        outcome = SimOutcome::infeasible("ngspice timed out");
    } else if (r.exit_code != 0) {
        outcome = SimOutcome::infeasible("ngspice exited with status " + std::to_string(r.exit_code));
    } else {
        // .meas failures can be reported on stderr
        outcome = parse_measurements(r.out + "\n" + r.err);
    }

    if (outcome.feasible()) {
        std::filesystem::remove_all(dir, ec);
    } else {
        std::ofstream log(dir / "ngspice.log", std::ios::binary);
        log << r.out << "\n--- stderr ---\n" << r.err;
        outcome = SimOutcome::infeasible(outcome.diagnostic() + " (kept " + dir.string() + ")");
    }
    return outcome;
}

std::unique_ptr<Simulator> make_simulator(const SimulatorConfig& cfg, const DesignSpace* space) {
    if (cfg.backend == Backend::Surrogate) return std::make_unique<SurrogateSimulator>(cfg.surrogate);
    if (!space) throw std::invalid_argument("the ngspice backend needs a design space");
    return std::make_unique<NgspiceSimulator>(*space, cfg.ngspice);
}

}  // namespace opsizer
