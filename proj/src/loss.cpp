#include "opsizer/loss.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace opsizer {

std::string_view provenance_name(Provenance p) {
    switch (p) {
        case Provenance::RuleBased: return "rule-based";
        case Provenance::External: return "external";
        case Provenance::Uniform: return "uniform";
    }
    return "?";
}

double basic_metric_loss(double value, int weight, double threshold) {
    const double shortfall = std::min(weight * (value - threshold), 0.0);
    return std::abs(shortfall / threshold);
}

double pm_loss(double pm, double low, double high) {
    if (pm <= high) return basic_metric_loss(pm, +1, low);
    return basic_metric_loss(pm, -1, high);
}

std::vector<LossTerm> terms_for(MetricId m, const Bound& b, int exponent, double scale) {
    switch (b.kind) {
        case BoundKind::AtLeast: return {LossTerm{m, +1, b.lower, exponent, scale}};
        case BoundKind::AtMost: return {LossTerm{m, -1, b.upper, exponent, scale}};
        case BoundKind::InRange:
            return {LossTerm{m, +1, b.lower, exponent, scale},
                    LossTerm{m, -1, b.upper, exponent, scale}};
    }
    return {};
}

namespace {

int exponent_for(Difficulty d) {
    switch (d) {
        case Difficulty::Hard: return 1;
        case Difficulty::Medium: return 2;
        case Difficulty::Simple: return 3;
    }
    return 2;
}

void append(std::vector<LossTerm>& out, std::vector<LossTerm> more) {
    out.insert(out.end(), more.begin(), more.end());
}

}  // namespace

LossSpec synthesize_loss(const RequirementSet& req, const EoaProfile& profile) {
    for (auto m : req.constrained()) {
        if (!profile.entries.has(m))
            throw std::invalid_argument("EOA profile does not cover constrained metric " +
                                        std::string(metric_name(m)));
    }

    std::size_t hard = 0;
    for (auto m : req.constrained()) {
        if (m != MetricId::PM && profile.entries[m]->difficulty == Difficulty::Hard) ++hard;
    }
    const bool mixed_exponents = hard >= 2;

    LossSpec spec;
    spec.provenance = Provenance::RuleBased;
    for (auto m : req.constrained()) {
        const EoaEntry& e = *profile.entries[m];
        const double scale = std::max(e.eoa, kMinScale);
        int exponent = 2;
        if (m == MetricId::PM) {
            exponent = 1;
        } else if (mixed_exponents) {
            exponent = exponent_for(e.difficulty);
        }
        append(spec.terms, terms_for(m, *req.bounds[m], exponent, scale));
    }
    return spec;
}

LossSpec uniform_quadratic_loss(const RequirementSet& req) {
    LossSpec spec;
    spec.provenance = Provenance::Uniform;
    for (auto m : req.constrained()) append(spec.terms, terms_for(m, *req.bounds[m], 2, 1.0));
    return spec;
}

double evaluate_loss(const LossSpec& spec, const MetricVector& m) {
    double total = 0.0;
    for (const auto& t : spec.terms) {
        const double base = basic_metric_loss(m[t.metric], t.weight, t.threshold);
        if (base == 0.0) continue;
        double powered = base;
        for (int i = 1; i < t.exponent; ++i) powered *= base;
        total += t.scale * powered;
    }
    return total;
}

double evaluate_loss(const LossSpec& spec, const SimOutcome& o) {
    return o.feasible() ? evaluate_loss(spec, o.metrics()) : kInfeasiblePenalty;
}

std::vector<double> term_deviations(const LossSpec& spec, const MetricVector& m) {
    std::vector<double> d;
    d.reserve(spec.terms.size());
    for (const auto& t : spec.terms) d.push_back(basic_metric_loss(m[t.metric], t.weight, t.threshold));
    return d;
}

LossSpec adjust_loss(const LossSpec& spec, const MetricVector& best, const RequirementSet&) {
    const auto dev = term_deviations(spec, best);
    const double worst = dev.empty() ? 0.0 : *std::max_element(dev.begin(), dev.end());
    if (!(worst > 0.0)) throw NothingToAdjustError("every requirement is already satisfied");

    LossSpec out = spec;
    out.revision = spec.revision + 1;
    for (std::size_t i = 0; i < dev.size(); ++i) {
        if (dev[i] == worst) {
            auto& s = out.terms[i].scale;
            s = std::min(s * kFeedbackFactor, kScaleCap);
        }
    }
    return out;
}

void validate_loss_spec(const LossSpec& spec, const RequirementSet& req) {
    auto fail = [](const std::string& msg) { throw LossSpecError(msg); };
    auto same = [](double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(b)); };

    PerMetric<int> coverage;  // bit 1: lower side, bit 2: upper side
    for (const auto& t : spec.terms) {
        const std::string name(metric_name(t.metric));
        if (t.exponent < 1 || t.exponent > 3) fail(name + ": exponent must be 1, 2 or 3");
        if (!std::isfinite(t.scale) || t.scale < 0.0) fail(name + ": scale must be finite and >= 0");
        if (!std::isfinite(t.threshold) || t.threshold <= 0.0) fail(name + ": threshold must be > 0");
        if (t.weight != 1 && t.weight != -1) fail(name + ": weight must be +1 or -1");
        if (!req.bounds.has(t.metric)) fail(name + ": term for an unconstrained metric");

        const Bound& b = *req.bounds[t.metric];
        int side = 0;
        if (t.weight == +1 && (b.kind == BoundKind::AtLeast || b.kind == BoundKind::InRange)) {
            if (!same(t.threshold, b.lower)) fail(name + ": threshold does not match requirement");
            side = 1;
        } else if (t.weight == -1 && (b.kind == BoundKind::AtMost || b.kind == BoundKind::InRange)) {
            if (!same(t.threshold, b.upper)) fail(name + ": threshold does not match requirement");
            side = 2;
        } else {
            fail(name + ": weight sign does not match the requirement direction");
        }
        coverage[t.metric] = coverage[t.metric].value_or(0) | side;
    }

    for (auto m : req.constrained()) {
        const int need = req.bounds[m]->kind == BoundKind::InRange  ? 3
                         : req.bounds[m]->kind == BoundKind::AtLeast ? 1
                                                                     : 2;
        if (coverage[m].value_or(0) != need) {
            std::ostringstream os;
            os << metric_name(m) << ": constrained metric is not fully covered by the loss";
            fail(os.str());
        }
    }
}

}  // namespace opsizer
