#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "opsizer/search.hpp"
#include "opsizer/util.hpp"

namespace opsizer {

void DeConfig::validate() const {
    if (population < 4) throw std::invalid_argument("DE population must be >= 4");
    if (max_iterations < 1) throw std::invalid_argument("DE max iterations must be >= 1");
    if (!(f > 0.0 && f <= 2.0)) throw std::invalid_argument("DE F must be in (0, 2]");
    if (!(cr >= 0.0 && cr <= 1.0)) throw std::invalid_argument("DE CR must be in [0, 1]");
    if (candidates < 1 || candidates > population)
        throw std::invalid_argument("DE candidate count must be in [1, population]");
}

std::string_view de_strategy_name(DeStrategy s) {
    return s == DeStrategy::Best1Bin ? "best1bin" : "rand1bin";
}

std::optional<DeStrategy> parse_de_strategy(std::string_view name) {
    if (name == "best1bin") return DeStrategy::Best1Bin;
    if (name == "rand1bin") return DeStrategy::Rand1Bin;
    return std::nullopt;
}

double normalized_distance(const DesignSpace& space, const DesignPoint& a, const DesignPoint& b) {
    const auto ua = space.to_unit(a.values);
    const auto ub = space.to_unit(b.values);
    double s = 0.0;
    for (std::size_t i = 0; i < ua.size(); ++i) s += (ua[i] - ub[i]) * (ua[i] - ub[i]);
    return ua.empty() ? 0.0 : std::sqrt(s / static_cast<double>(ua.size()));
}

namespace {

std::vector<Evaluation> pick_candidates(const std::vector<Evaluation>& log, const DesignSpace& space,
                                        std::size_t k) {
    std::vector<std::size_t> order(log.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return log[a].loss < log[b].loss; });

    std::vector<Evaluation> out;
    std::vector<bool> taken(log.size(), false);
    for (std::size_t idx : order) {
        if (out.size() == k) break;
        bool distinct = true;
        for (const auto& c : out) {
            if (normalized_distance(space, c.point, log[idx].point) < kCandidateSeparation) {
                distinct = false;
                break;
            }
        }
        if (distinct) {
            out.push_back(log[idx]);
            taken[idx] = true;
        }
    }
    // Not enough distinct points: fill with the next best regardless.
    for (std::size_t idx : order) {
        if (out.size() == k) break;
        if (!taken[idx]) out.push_back(log[idx]);
    }
    return out;
}

}  // namespace

DeResult de_search(const Objective& objective, const DesignSpace& space, const DeConfig& cfg,
                   const DeObserver& observer) {
    cfg.validate();
    if (space.dim() == 0) throw std::invalid_argument("DE needs a non-empty design space");

    const std::size_t np = cfg.population;
    const std::size_t d = space.dim();
    Rng rng(cfg.seed);

    std::vector<std::vector<double>> pop(np, std::vector<double>(d));
    for (auto& x : pop) {
        for (auto& u : x) u = rng.uniform();
    }

    DeResult result;
    result.log.reserve(np * cfg.max_iterations);

    auto evaluate_all = [&](const std::vector<std::vector<double>>& xs) {
        std::vector<DesignPoint> points(xs.size());
        std::vector<double> losses(xs.size());
        for (std::size_t i = 0; i < xs.size(); ++i) points[i] = space.from_unit(xs[i]);
        parallel_for(xs.size(), cfg.threads, [&](std::size_t i) { losses[i] = objective(points[i]); });
        for (std::size_t i = 0; i < xs.size(); ++i) result.log.push_back({points[i], losses[i]});
        return losses;
    };

    std::vector<double> fitness = evaluate_all(pop);
    result.iterations = 1;
    auto best_of = [&] { return *std::min_element(fitness.begin(), fitness.end()); };

    std::vector<std::vector<double>> trials(np, std::vector<double>(d));
    for (std::size_t gen = 1; gen < cfg.max_iterations && best_of() > 0.0; ++gen) {
        const auto best_idx =
            static_cast<std::size_t>(std::min_element(fitness.begin(), fitness.end()) - fitness.begin());
        for (std::size_t i = 0; i < np; ++i) {
            std::size_t a, b, c;
            do { a = rng.index(np); } while (a == i);
            do { b = rng.index(np); } while (b == i || b == a);
            do { c = rng.index(np); } while (c == i || c == a || c == b);
            if (cfg.strategy == DeStrategy::Best1Bin) a = best_idx;
            const std::size_t forced = rng.index(d);
            for (std::size_t j = 0; j < d; ++j) {
                if (j == forced || rng.uniform() < cfg.cr) {
                    double v = pop[a][j] + cfg.f * (pop[b][j] - pop[c][j]);
                    // out-of-range genes land between the parent and the violated bound
                    if (v < 0.0) v = rng.uniform() * pop[i][j];
                    if (v > 1.0) v = pop[i][j] + rng.uniform() * (1.0 - pop[i][j]);
                    trials[i][j] = v;
                } else {
                    trials[i][j] = pop[i][j];
                }
            }
        }

        const auto trial_fitness = evaluate_all(trials);
        const auto parents = fitness;
        for (std::size_t i = 0; i < np; ++i) {
            if (trial_fitness[i] <= fitness[i]) {
                pop[i] = trials[i];
                fitness[i] = trial_fitness[i];
            }
        }
        if (observer) observer(gen, parents, trial_fitness, fitness);
        ++result.iterations;
    }

    result.candidates = pick_candidates(result.log, space, cfg.candidates);
    result.best = result.candidates.front();
    return result;
}

}  // namespace opsizer
