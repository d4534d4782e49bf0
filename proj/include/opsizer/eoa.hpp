#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "opsizer/core.hpp"
#include "opsizer/util.hpp"

namespace opsizer {

class Simulator;
struct DeConfig;

enum class Direction { FavorHigh, FavorLow };
enum class Difficulty { Simple, Medium, Hard };

std::string_view difficulty_name(Difficulty d);

/// Which way a metric improves: IDC is favorable-low, everything else favorable-high.
Direction direction_of(MetricId m);

/// Per-metric sample lists from past simulations. Every populated column has the
/// same length; sorted copies are kept alongside insertion order.
class MetricCorpus {
public:
    MetricCorpus() = default;
    /// Throws std::invalid_argument when populated columns differ in length or
    /// hold non-finite values.
    explicit MetricCorpus(PerMetric<std::vector<double>> columns);

    static MetricCorpus from_vectors(std::span<const MetricVector> samples);

    /// Appends one full five-metric sample (only valid on five-column corpora
    /// or an empty one).
    void append(const MetricVector& m);

    std::size_t size() const { return size_; }
    bool covers(MetricId m) const { return columns_.has(m); }
    std::span<const double> column(MetricId m) const;
    std::span<const double> sorted(MetricId m) const;

    /// Rows in insertion order; requires all five columns.
    std::vector<MetricVector> rows() const;

private:
    PerMetric<std::vector<double>> columns_;
    PerMetric<std::vector<double>> sorted_;
    std::size_t size_ = 0;
};

class DegenerateProfileError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct EoaEntry {
    double rank = 0.0;
    double eoa = 0.0;
    Difficulty difficulty = Difficulty::Simple;

    friend bool operator==(const EoaEntry&, const EoaEntry&) = default;
};

struct EoaProfile {
    PerMetric<EoaEntry> entries;

    friend bool operator==(const EoaProfile&, const EoaProfile&) = default;
};

/// Fraction of samples strictly below `threshold` (insertion index before equal
/// elements). For favorable-low metrics the fraction is flipped so that a higher
/// rank always means a harder target. `sorted` must be ascending and non-empty.
double compute_rank(std::span<const double> sorted, double threshold, Direction direction);

/// rank_i / sum(rank). Throws DegenerateProfileError when every rank is zero.
PerMetric<double> compute_eoa(const PerMetric<double>& ranks);

/// Tercile split: [0, 1/3) simple, [1/3, 2/3) medium, [2/3, 1] hard.
Difficulty classify_difficulty(double rank);

/// Threshold used to rank a bound (PM ranges rank on their lower bound).
double rank_threshold(MetricId m, const Bound& b);

EoaProfile build_profile(const MetricCorpus& corpus, const RequirementSet& req);

/// Equal EOA (1/n) over the constrained metrics, keeping the given ranks and
/// their difficulty classes. Fallback for degenerate profiles.
EoaProfile uniform_profile(const RequirementSet& req, const PerMetric<double>& ranks = {});

/// build_profile, falling back to uniform_profile on an all-zero rank profile.
EoaProfile build_profile_or_uniform(const MetricCorpus& corpus, const RequirementSet& req,
                                    bool* fell_back = nullptr);

/// Dataset-generation reference requirements: BW>5000, Gain>1000, PM in [60,90],
/// SR>10, IDC<1000.
RequirementSet reference_requirements();

/// Random requirement setting drawn around `reference`: at-least thresholds
/// uniform in [t, 4t], at-most uniform in [t/4, t], PM range kept.
RequirementSet sample_requirements(Rng& rng, const RequirementSet& reference);

struct BootstrapConfig {
    std::size_t runs = 10;
    std::uint64_t seed = 1;
    std::size_t threads = 1;
    /// Each run targets its own sample_requirements() draw around `req`;
    /// false runs every search against `req` itself.
    bool vary_requirements = true;
};

struct BootstrapResult {
    MetricCorpus corpus;
    std::size_t evaluations = 0;
    std::size_t failures = 0;
};

class BootstrapError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Runs `cfg.runs` independent DE searches against `sim` under the uniform
/// quadratic loss and records every feasible evaluated point. Run i uses seed
/// derive_seed(cfg.seed, i) and, with vary_requirements, the requirement draw
/// seeded by derive_seed(cfg.seed, i, 1); corpora merge in run order. Throws
/// BootstrapError when more than half of all simulations are infeasible.
BootstrapResult bootstrap_corpus(const Simulator& sim, const RequirementSet& req,
                                 const DeConfig& de, const BootstrapConfig& cfg);

}  // namespace opsizer
