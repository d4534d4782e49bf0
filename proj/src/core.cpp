#include "opsizer/core.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <sstream>

namespace opsizer {

namespace {

bool iequals(std::string_view a, std::string_view b) {
    return a.size() == b.size() &&
           std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
               return std::tolower(static_cast<unsigned char>(x)) ==
                      std::tolower(static_cast<unsigned char>(y));
           });
}

}  // namespace

std::string_view metric_name(MetricId m) {
    switch (m) {
        case MetricId::BW: return "BW";
        case MetricId::Gain: return "Gain";
        case MetricId::PM: return "PM";
        case MetricId::SR: return "SR";
        case MetricId::IDC: return "IDC";
    }
    return "?";
}

std::optional<MetricId> parse_metric(std::string_view name) {
    for (auto m : kAllMetrics) {
        if (iequals(name, metric_name(m))) return m;
    }
    if (iequals(name, "I_DC")) return MetricId::IDC;
    return std::nullopt;
}

double MetricVector::operator[](MetricId m) const {
    switch (m) {
        case MetricId::BW: return bw;
        case MetricId::Gain: return gain;
        case MetricId::PM: return pm;
        case MetricId::SR: return sr;
        case MetricId::IDC: return idc;
    }
    throw std::out_of_range("bad MetricId");
}

double& MetricVector::operator[](MetricId m) {
    switch (m) {
        case MetricId::BW: return bw;
        case MetricId::Gain: return gain;
        case MetricId::PM: return pm;
        case MetricId::SR: return sr;
        case MetricId::IDC: return idc;
    }
    throw std::out_of_range("bad MetricId");
}

bool MetricVector::finite() const {
    return std::isfinite(bw) && std::isfinite(gain) && std::isfinite(pm) && std::isfinite(sr) &&
           std::isfinite(idc);
}

SimOutcome SimOutcome::ok(const MetricVector& m) {
    if (!m.finite()) return infeasible("non-finite metric value");
    SimOutcome o;
    o.metrics_ = m;
    o.diagnostic_.clear();
    return o;
}

SimOutcome SimOutcome::infeasible(std::string reason) {
    SimOutcome o;
    o.diagnostic_ = std::move(reason);
    return o;
}

const MetricVector& SimOutcome::metrics() const {
    if (!metrics_) throw std::logic_error("infeasible outcome has no metrics: " + diagnostic_);
    return *metrics_;
}

std::string_view bound_kind_name(BoundKind k) {
    switch (k) {
        case BoundKind::AtLeast: return "at-least";
        case BoundKind::AtMost: return "at-most";
        case BoundKind::InRange: return "in-range";
    }
    return "?";
}

std::optional<BoundKind> parse_bound_kind(std::string_view name) {
    for (auto k : {BoundKind::AtLeast, BoundKind::AtMost, BoundKind::InRange}) {
        if (iequals(name, bound_kind_name(k))) return k;
    }
    return std::nullopt;
}

bool Bound::satisfied(double value) const {
    switch (kind) {
        case BoundKind::AtLeast: return value >= lower;
        case BoundKind::AtMost: return value <= upper;
        case BoundKind::InRange: return value >= lower && value <= upper;
    }
    return false;
}

double Bound::reference() const { return kind == BoundKind::AtMost ? upper : lower; }

BoundKind expected_bound_kind(MetricId m) {
    switch (m) {
        case MetricId::IDC: return BoundKind::AtMost;
        case MetricId::PM: return BoundKind::InRange;
        default: return BoundKind::AtLeast;
    }
}

std::vector<MetricId> RequirementSet::constrained() const {
    std::vector<MetricId> out;
    for (auto m : kAllMetrics) {
        if (bounds.has(m)) out.push_back(m);
    }
    return out;
}

const RequirementSet& validate_requirements(const RequirementSet& req) {
    for (auto m : req.constrained()) {
        const Bound& b = *req.bounds[m];
        const std::string name(metric_name(m));
        if (b.kind != expected_bound_kind(m)) {
            throw RequirementError(name + ": bound kind must be " +
                                   std::string(bound_kind_name(expected_bound_kind(m))) +
                                   ", got " + std::string(bound_kind_name(b.kind)));
        }
        switch (b.kind) {
            case BoundKind::AtLeast:
                if (!std::isfinite(b.lower) || b.lower <= 0.0)
                    throw RequirementError(name + ": non-positive threshold");
                break;
            case BoundKind::AtMost:
                if (!std::isfinite(b.upper) || b.upper <= 0.0)
                    throw RequirementError(name + ": non-positive threshold");
                break;
            case BoundKind::InRange:
                if (!std::isfinite(b.lower) || !std::isfinite(b.upper) || b.lower <= 0.0 ||
                    b.upper <= 0.0)
                    throw RequirementError(name + ": non-positive threshold");
                if (b.lower >= b.upper) {
                    std::ostringstream os;
                    os << name << ": invalid range [" << b.lower << ", " << b.upper << "]";
                    throw RequirementError(os.str());
                }
                break;
        }
    }
    return req;
}

SatisfactionReport check_satisfaction(const MetricVector& m, const RequirementSet& req) {
    SatisfactionReport r;
    for (auto id : req.constrained()) {
        const bool ok = req.bounds[id]->satisfied(m[id]);
        r.passed[id] = ok;
        if (!ok) ++r.misses;
    }
    return r;
}

SatisfactionReport check_satisfaction(const SimOutcome& o, const RequirementSet& req) {
    if (o.feasible()) return check_satisfaction(o.metrics(), req);
    SatisfactionReport r;
    for (auto id : req.constrained()) r.passed[id] = false;
    r.misses = req.constrained_count();
    return r;
}

DesignSpace::DesignSpace(std::vector<Parameter> params) : params_(std::move(params)) {
    std::set<std::string> names;
    for (const auto& p : params_) {
        if (p.name.empty()) throw std::invalid_argument("parameter with empty name");
        if (!names.insert(p.name).second)
            throw std::invalid_argument("duplicate parameter '" + p.name + "'");
        if (!std::isfinite(p.lower) || !std::isfinite(p.upper) || !(p.lower < p.upper))
            throw std::invalid_argument("parameter '" + p.name + "': lower must be < upper");
        if (p.scale == Scale::Log && p.lower <= 0.0)
            throw std::invalid_argument("parameter '" + p.name +
                                        "': log-scaled parameter needs lower > 0");
    }
}

std::optional<std::size_t> DesignSpace::find(std::string_view name) const {
    for (std::size_t i = 0; i < params_.size(); ++i) {
        if (params_[i].name == name) return i;
    }
    return std::nullopt;
}

double DesignSpace::to_unit(std::size_t i, double x) const {
    const auto& p = params_.at(i);
    double u = p.scale == Scale::Log
                   ? (std::log(x) - std::log(p.lower)) / (std::log(p.upper) - std::log(p.lower))
                   : (x - p.lower) / (p.upper - p.lower);
    return std::clamp(u, 0.0, 1.0);
}

double DesignSpace::from_unit(std::size_t i, double u) const {
    const auto& p = params_.at(i);
    u = std::clamp(u, 0.0, 1.0);
    double x = p.scale == Scale::Log
                   ? std::exp(std::log(p.lower) + u * (std::log(p.upper) - std::log(p.lower)))
                   : p.lower + u * (p.upper - p.lower);
    return std::clamp(x, p.lower, p.upper);
}

std::vector<double> DesignSpace::to_unit(std::span<const double> x) const {
    if (x.size() != dim()) throw std::invalid_argument("dimension mismatch");
    std::vector<double> u(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) u[i] = to_unit(i, x[i]);
    return u;
}

DesignPoint DesignSpace::from_unit(std::span<const double> u) const {
    if (u.size() != dim()) throw std::invalid_argument("dimension mismatch");
    DesignPoint p;
    p.values.resize(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) p.values[i] = from_unit(i, u[i]);
    return p;
}

bool DesignSpace::contains(const DesignPoint& p) const {
    if (p.values.size() != dim()) return false;
    for (std::size_t i = 0; i < dim(); ++i) {
        const double v = p.values[i];
        if (!(v >= params_[i].lower && v <= params_[i].upper)) return false;
    }
    return true;
}

DesignPoint DesignSpace::point(std::vector<double> values) const {
    DesignPoint p{std::move(values)};
    if (!contains(p)) throw std::out_of_range("design point outside its design space");
    return p;
}

}  // namespace opsizer
