#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace opsizer {

/// The five op-amp performance metrics. The declaration order is the layout
/// order of every per-metric array, CSV row and JSON listing in the project.
enum class MetricId : std::size_t { BW = 0, Gain = 1, PM = 2, SR = 3, IDC = 4 };

inline constexpr std::size_t kMetricCount = 5;
inline constexpr std::array<MetricId, kMetricCount> kAllMetrics{
    MetricId::BW, MetricId::Gain, MetricId::PM, MetricId::SR, MetricId::IDC};

constexpr std::size_t index_of(MetricId m) { return static_cast<std::size_t>(m); }

std::string_view metric_name(MetricId m);
/// Case-insensitive; accepts the canonical names plus "I_DC".
std::optional<MetricId> parse_metric(std::string_view name);

/// Fixed-layout optional slot per metric.
template <typename T>
struct PerMetric {
    std::array<std::optional<T>, kMetricCount> slots{};

    std::optional<T>& operator[](MetricId m) { return slots[index_of(m)]; }
    const std::optional<T>& operator[](MetricId m) const { return slots[index_of(m)]; }

    bool has(MetricId m) const { return slots[index_of(m)].has_value(); }

    std::size_t count() const {
        std::size_t n = 0;
        for (const auto& s : slots) n += s.has_value() ? 1 : 0;
        return n;
    }

    friend bool operator==(const PerMetric&, const PerMetric&) = default;
};

/// One simulation outcome. Units: BW Hz, Gain V/V, PM degrees, SR V/us, IDC uA.
struct MetricVector {
    double bw = 0.0;
    double gain = 0.0;
    double pm = 0.0;
    double sr = 0.0;
    double idc = 0.0;

    double operator[](MetricId m) const;
    double& operator[](MetricId m);
    bool finite() const;

    friend bool operator==(const MetricVector&, const MetricVector&) = default;
};

/// Either a finite MetricVector or the explicit infeasible marker.
class SimOutcome {
public:
    SimOutcome() : diagnostic_("not simulated") {}

    /// Non-finite vectors are demoted to infeasible.
    static SimOutcome ok(const MetricVector& m);
    static SimOutcome infeasible(std::string reason);

    bool feasible() const { return metrics_.has_value(); }
    /// Throws std::logic_error on the infeasible marker.
    const MetricVector& metrics() const;
    const std::string& diagnostic() const { return diagnostic_; }

    friend bool operator==(const SimOutcome&, const SimOutcome&) = default;

private:
    std::optional<MetricVector> metrics_;
    std::string diagnostic_;
};

enum class BoundKind { AtLeast, AtMost, InRange };

std::string_view bound_kind_name(BoundKind k);
std::optional<BoundKind> parse_bound_kind(std::string_view name);

struct Bound {
    BoundKind kind = BoundKind::AtLeast;
    double lower = 0.0;  // used by AtLeast and InRange
    double upper = 0.0;  // used by AtMost and InRange

    static Bound at_least(double v) { return {BoundKind::AtLeast, v, 0.0}; }
    static Bound at_most(double v) { return {BoundKind::AtMost, 0.0, v}; }
    static Bound in_range(double lo, double hi) { return {BoundKind::InRange, lo, hi}; }

    /// Inclusive on every side.
    bool satisfied(double value) const;
    /// The single threshold used by rank and PFoM: lower bound for AtLeast and
    /// InRange, upper bound for AtMost.
    double reference() const;

    friend bool operator==(const Bound&, const Bound&) = default;
};

/// The bound kind each metric must use (BW/Gain/SR at-least, IDC at-most, PM in-range).
BoundKind expected_bound_kind(MetricId m);

/// A task definition. Unconstrained metrics have no bound at all.
struct RequirementSet {
    std::string name;
    PerMetric<Bound> bounds;

    std::vector<MetricId> constrained() const;
    std::size_t constrained_count() const { return bounds.count(); }

    friend bool operator==(const RequirementSet&, const RequirementSet&) = default;
};

class RequirementError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Returns `req` unchanged if well-formed, throws RequirementError otherwise.
const RequirementSet& validate_requirements(const RequirementSet& req);

struct SatisfactionReport {
    PerMetric<bool> passed;  // set only for constrained metrics
    std::size_t misses = 0;
};

SatisfactionReport check_satisfaction(const MetricVector& m, const RequirementSet& req);
/// The infeasible marker misses every constrained metric.
SatisfactionReport check_satisfaction(const SimOutcome& o, const RequirementSet& req);

enum class Scale { Linear, Log };

struct Parameter {
    std::string name;
    double lower = 0.0;
    double upper = 1.0;
    Scale scale = Scale::Linear;

    friend bool operator==(const Parameter&, const Parameter&) = default;
};

struct DesignPoint {
    std::vector<double> values;

    friend bool operator==(const DesignPoint&, const DesignPoint&) = default;
};

/// Ordered box of named parameters. Optimizers work in the unit cube; log-scaled
/// parameters map through log space.
class DesignSpace {
public:
    DesignSpace() = default;
    /// Throws std::invalid_argument on lower >= upper, non-positive log bounds or
    /// duplicate names.
    explicit DesignSpace(std::vector<Parameter> params);

    std::size_t dim() const { return params_.size(); }
    const std::vector<Parameter>& params() const { return params_; }
    const Parameter& param(std::size_t i) const { return params_.at(i); }
    std::optional<std::size_t> find(std::string_view name) const;

    double to_unit(std::size_t i, double x) const;
    double from_unit(std::size_t i, double u) const;
    std::vector<double> to_unit(std::span<const double> x) const;
    DesignPoint from_unit(std::span<const double> u) const;

    bool contains(const DesignPoint& p) const;
    /// Validated constructor for points; throws std::out_of_range.
    DesignPoint point(std::vector<double> values) const;

    friend bool operator==(const DesignSpace&, const DesignSpace&) = default;

private:
    std::vector<Parameter> params_;
};

}  // namespace opsizer
