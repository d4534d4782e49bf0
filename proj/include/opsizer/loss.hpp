#pragma once

#include <chrono>
#include <stdexcept>
#include <string>
#include <vector>

#include "opsizer/core.hpp"
#include "opsizer/eoa.hpp"

namespace opsizer {

/// Loss charged for a failed simulation.
inline constexpr double kInfeasiblePenalty = 1e6;
/// Feedback multiplies the largest-deviation term's scale by this factor.
inline constexpr double kFeedbackFactor = 2.0;
/// Upper limit on any term's scale after feedback.
inline constexpr double kScaleCap = 1e3;
/// Synthesized scales never drop below this, so a rank-0 metric still counts.
inline constexpr double kMinScale = 1e-3;

enum class Provenance { RuleBased, External, Uniform };

std::string_view provenance_name(Provenance p);

/// scale * basic_metric_loss(metric, weight, threshold)^exponent.
struct LossTerm {
    MetricId metric = MetricId::Gain;
    int weight = 1;  // +1 or -1
    double threshold = 1.0;
    int exponent = 2;  // 1, 2 or 3
    double scale = 1.0;

    friend bool operator==(const LossTerm&, const LossTerm&) = default;
};

/// A PM range contributes two terms: (+1, low) and (-1, high).
struct LossSpec {
    std::vector<LossTerm> terms;
    int revision = 0;
    Provenance provenance = Provenance::RuleBased;

    friend bool operator==(const LossSpec&, const LossSpec&) = default;
};

class LossSpecError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// |min(w (value - threshold), 0)| / threshold.
double basic_metric_loss(double value, int weight, double threshold);

/// Piecewise PM loss: below-or-at `high` penalizes shortfall against `low`,
/// above `high` penalizes the overshoot against `high`.
double pm_loss(double pm, double low, double high);

/// The term(s) a constrained metric contributes, with the given exponent and scale.
std::vector<LossTerm> terms_for(MetricId m, const Bound& b, int exponent, double scale);

/// Rule-based loss synthesis from an EOA profile:
///  - PM: exponent 1, scale eoa_PM.
///  - two or more hard non-PM metrics: exponent 1/2/3 for hard/medium/simple.
///  - otherwise every non-PM term is quadratic.
/// Every scale is max(eoa, kMinScale). Unconstrained metrics get no term.
LossSpec synthesize_loss(const RequirementSet& req, const EoaProfile& profile);

/// Equal-weight quadratic loss (scale 1, exponent 2) over every constrained
/// metric, PM included. The no-EOA baseline.
LossSpec uniform_quadratic_loss(const RequirementSet& req);

/// Sum of scale * basic^exponent; kInfeasiblePenalty for the infeasible marker.
double evaluate_loss(const LossSpec& spec, const MetricVector& m);
double evaluate_loss(const LossSpec& spec, const SimOutcome& o);

/// Unscaled basic loss of every term at `m`, in term order.
std::vector<double> term_deviations(const LossSpec& spec, const MetricVector& m);

class NothingToAdjustError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Doubles (capped at kScaleCap) the scale of every term whose deviation equals
/// the maximum deviation at `best`; everything else is copied. Revision + 1.
/// Throws NothingToAdjustError when every deviation is zero.
LossSpec adjust_loss(const LossSpec& spec, const MetricVector& best, const RequirementSet& req);

/// Checks the LossSpec invariants against `req`: exponents in {1,2,3}, finite
/// non-negative scales, weights and thresholds matching the requirement bounds,
/// every constrained metric covered (both sides for PM), no unconstrained
/// metric present.
void validate_loss_spec(const LossSpec& spec, const RequirementSet& req);

}  // namespace opsizer
