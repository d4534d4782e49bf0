#include "opsizer/eoa.hpp"

#include <algorithm>
#include <cmath>

namespace opsizer {

std::string_view difficulty_name(Difficulty d) {
    switch (d) {
        case Difficulty::Simple: return "simple";
        case Difficulty::Medium: return "medium";
        case Difficulty::Hard: return "hard";
    }
    return "?";
}

Direction direction_of(MetricId m) {
    return m == MetricId::IDC ? Direction::FavorLow : Direction::FavorHigh;
}

MetricCorpus::MetricCorpus(PerMetric<std::vector<double>> columns) : columns_(std::move(columns)) {
    bool first = true;
    for (auto m : kAllMetrics) {
        if (!columns_.has(m)) continue;
        const auto& col = *columns_[m];
        if (first) {
            size_ = col.size();
            first = false;
        } else if (col.size() != size_) {
            throw std::invalid_argument("corpus columns differ in length");
        }
        for (double v : col) {
            if (!std::isfinite(v)) throw std::invalid_argument("corpus holds a non-finite value");
        }
        auto s = col;
        std::sort(s.begin(), s.end());
        sorted_[m] = std::move(s);
    }
}

MetricCorpus MetricCorpus::from_vectors(std::span<const MetricVector> samples) {
    PerMetric<std::vector<double>> cols;
    for (auto m : kAllMetrics) {
        std::vector<double> c;
        c.reserve(samples.size());
        for (const auto& s : samples) c.push_back(s[m]);
        cols[m] = std::move(c);
    }
    return MetricCorpus(std::move(cols));
}

void MetricCorpus::append(const MetricVector& v) {
    if (!v.finite()) throw std::invalid_argument("corpus sample must be finite");
    if (size_ > 0 && columns_.count() != kMetricCount)
        throw std::logic_error("append needs a five-column corpus");
    for (auto m : kAllMetrics) {
        if (!columns_.has(m)) {
            columns_[m].emplace();
            sorted_[m].emplace();
        }
        columns_[m]->push_back(v[m]);
        auto& s = *sorted_[m];
        s.insert(std::upper_bound(s.begin(), s.end(), v[m]), v[m]);
    }
    ++size_;
}

std::span<const double> MetricCorpus::column(MetricId m) const {
    if (!columns_.has(m)) return {};
    return *columns_[m];
}

std::span<const double> MetricCorpus::sorted(MetricId m) const {
    if (!sorted_.has(m)) return {};
    return *sorted_[m];
}

std::vector<MetricVector> MetricCorpus::rows() const {
    if (size_ > 0 && columns_.count() != kMetricCount)
        throw std::logic_error("rows() needs a five-column corpus");
    std::vector<MetricVector> out(size_);
    for (auto m : kAllMetrics) {
        if (!columns_.has(m)) continue;
        for (std::size_t i = 0; i < size_; ++i) out[i][m] = (*columns_[m])[i];
    }
    return out;
}

double compute_rank(std::span<const double> sorted, double threshold, Direction direction) {
    if (sorted.empty()) throw std::invalid_argument("compute_rank: empty sample list");
    if (!std::is_sorted(sorted.begin(), sorted.end()))
        throw std::invalid_argument("compute_rank: samples must be sorted ascending");
    const auto below = std::lower_bound(sorted.begin(), sorted.end(), threshold) - sorted.begin();
    const double frac = static_cast<double>(below) / static_cast<double>(sorted.size());
    return direction == Direction::FavorHigh ? frac : 1.0 - frac;
}

PerMetric<double> compute_eoa(const PerMetric<double>& ranks) {
    double total = 0.0;
    for (auto m : kAllMetrics) {
        if (ranks.has(m)) total += *ranks[m];
    }
    if (!(total > 0.0)) throw DegenerateProfileError("all ranks are zero");
    PerMetric<double> eoa;
    for (auto m : kAllMetrics) {
        if (ranks.has(m)) eoa[m] = *ranks[m] / total;
    }
    return eoa;
}

Difficulty classify_difficulty(double rank) {
    if (rank < 1.0 / 3.0) return Difficulty::Simple;
    if (rank < 2.0 / 3.0) return Difficulty::Medium;
    return Difficulty::Hard;
}

double rank_threshold(MetricId, const Bound& b) { return b.reference(); }

namespace {

PerMetric<double> profile_ranks(const MetricCorpus& corpus, const RequirementSet& req) {
    PerMetric<double> ranks;
    for (auto m : req.constrained()) {
        if (!corpus.covers(m))
            throw std::invalid_argument("corpus does not cover metric " +
                                        std::string(metric_name(m)));
        if (corpus.size() < 2) throw std::invalid_argument("corpus needs at least two samples");
        ranks[m] = compute_rank(corpus.sorted(m), rank_threshold(m, *req.bounds[m]),
                                direction_of(m));
    }
    return ranks;
}

}  // namespace

EoaProfile build_profile(const MetricCorpus& corpus, const RequirementSet& req) {
    const auto ranks = profile_ranks(corpus, req);
    const auto eoa = compute_eoa(ranks);
    EoaProfile p;
    for (auto m : req.constrained()) {
        p.entries[m] = EoaEntry{*ranks[m], *eoa[m], classify_difficulty(*ranks[m])};
    }
    return p;
}

EoaProfile uniform_profile(const RequirementSet& req, const PerMetric<double>& ranks) {
    EoaProfile p;
    const auto n = static_cast<double>(req.constrained_count());
    for (auto m : req.constrained()) {
        const double r = ranks.has(m) ? *ranks[m] : 0.0;
        p.entries[m] = EoaEntry{r, 1.0 / n, classify_difficulty(r)};
    }
    return p;
}

EoaProfile build_profile_or_uniform(const MetricCorpus& corpus, const RequirementSet& req,
                                    bool* fell_back) {
    const auto ranks = profile_ranks(corpus, req);
    if (fell_back) *fell_back = false;
    try {
        return build_profile(corpus, req);
    } catch (const DegenerateProfileError&) {
        if (fell_back) *fell_back = true;
        return uniform_profile(req, ranks);
    }
}

RequirementSet reference_requirements() {
    RequirementSet r;
    r.name = "reference";
    r.bounds[MetricId::BW] = Bound::at_least(5000.0);
    r.bounds[MetricId::Gain] = Bound::at_least(1000.0);
    r.bounds[MetricId::PM] = Bound::in_range(60.0, 90.0);
    r.bounds[MetricId::SR] = Bound::at_least(10.0);
    r.bounds[MetricId::IDC] = Bound::at_most(1000.0);
    return r;
}

RequirementSet sample_requirements(Rng& rng, const RequirementSet& reference) {
    RequirementSet out;
    out.name = "sampled";
    for (auto m : reference.constrained()) {
        const Bound& b = *reference.bounds[m];
        switch (b.kind) {
            case BoundKind::AtLeast: out.bounds[m] = Bound::at_least(rng.uniform(b.lower, 4.0 * b.lower)); break;
            case BoundKind::AtMost: out.bounds[m] = Bound::at_most(rng.uniform(b.upper / 4.0, b.upper)); break;
            case BoundKind::InRange: out.bounds[m] = b; break;
        }
    }
    return out;
}

}  // namespace opsizer
