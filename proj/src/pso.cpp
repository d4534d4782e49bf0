#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "opsizer/search.hpp"

namespace opsizer {

void PsoConfig::validate() const {
    if (swarm < 2) throw std::invalid_argument("PSO swarm must be >= 2");
    if (max_iterations < 1) throw std::invalid_argument("PSO max iterations must be >= 1");
    if (stuck_threshold > max_iterations)
        throw std::invalid_argument("PSO stuck threshold must not exceed max iterations");
}

ParticleSwarm::ParticleSwarm(Objective objective, DesignSpace region, const PsoConfig& cfg,
                             const DesignPoint& seed)
    : objective_(std::move(objective)), region_(std::move(region)), cfg_(cfg), rng_(cfg.seed) {
    cfg_.validate();
    if (!region_.contains(seed)) throw std::invalid_argument("PSO seed point lies outside its region");

    const std::size_t d = region_.dim();
    x_.assign(cfg_.swarm, std::vector<double>(d));
    v_.assign(cfg_.swarm, std::vector<double>(d));
    x_[0] = region_.to_unit(seed.values);
    for (std::size_t i = 1; i < cfg_.swarm; ++i) {
        for (auto& u : x_[i]) u = rng_.uniform();
    }
    for (auto& vel : v_) {
        for (auto& u : vel) u = rng_.uniform(-kVelocityClamp, kVelocityClamp);
    }
    pbest_ = x_;
    pbest_loss_.assign(cfg_.swarm, std::numeric_limits<double>::infinity());

    pbest_loss_[0] = eval(x_[0]);
    if (pbest_loss_[0] > 0.0) {
        for (std::size_t i = 1; i < cfg_.swarm; ++i) pbest_loss_[i] = eval(x_[i]);
    }
    refresh_best();
}

double ParticleSwarm::eval(const std::vector<double>& unit) {
    ++evaluations_;
    return objective_(region_.from_unit(unit));
}

void ParticleSwarm::refresh_best() {
    gbest_ = static_cast<std::size_t>(
        std::min_element(pbest_loss_.begin(), pbest_loss_.end()) - pbest_loss_.begin());
}

Evaluation ParticleSwarm::best() const { return {region_.from_unit(pbest_[gbest_]), pbest_loss_[gbest_]}; }

std::string_view stuck_reason_name(StuckReason r) {
    switch (r) {
        case StuckReason::None: return "none";
        case StuckReason::NoProgress: return "no-progress";
        case StuckReason::StepLimit: return "step-limit";
        case StuckReason::Budget: return "budget";
    }
    return "none";
}

PsoResult ParticleSwarm::run(std::size_t max_iterations) {
    PsoResult r;
    r.trajectory.push_back(pbest_loss_[gbest_]);
    const std::size_t evals_before = evaluations_;

    std::size_t since_improvement = 0;
    std::size_t done = 0;
    if (pbest_loss_[gbest_] == 0.0) r.solved = true;

    const std::size_t d = region_.dim();
    while (!r.solved && done < max_iterations) {
        ++done;
        ++iterations_;
        const double before = pbest_loss_[gbest_];
        const std::vector<double> g = pbest_[gbest_];

        for (std::size_t i = 0; i < cfg_.swarm; ++i) {
            auto& x = x_[i];
            auto& v = v_[i];
            for (std::size_t j = 0; j < d; ++j) {
                const double r1 = rng_.uniform();
                const double r2 = rng_.uniform();
                v[j] = cfg_.inertia * v[j] + cfg_.c1 * r1 * (pbest_[i][j] - x[j]) + cfg_.c2 * r2 * (g[j] - x[j]);
                v[j] = std::clamp(v[j], -kVelocityClamp, kVelocityClamp);
                x[j] += v[j];
                if (x[j] < 0.0 || x[j] > 1.0) {
                    x[j] = std::clamp(x[j], 0.0, 1.0);
                    v[j] = 0.0;
                }
            }
            const double loss = eval(x);
            if (loss < pbest_loss_[i]) {
                pbest_loss_[i] = loss;
                pbest_[i] = x;
            }
        }
        refresh_best();
        const double after = pbest_loss_[gbest_];
        r.trajectory.push_back(after);

        if (after == 0.0) {
            r.solved = true;
            break;
        }
        since_improvement = after < before ? 0 : since_improvement + 1;
        if (since_improvement >= cfg_.stuck_threshold || done > cfg_.stuck_threshold) {
            r.stuck = true;
            r.stuck_reason = since_improvement >= cfg_.stuck_threshold ? StuckReason::NoProgress : StuckReason::StepLimit;
            break;
        }
    }

    r.best = best();
    r.iterations = done;
    r.evaluations = evaluations_ - evals_before;
    return r;
}

void ParticleSwarm::rescore(Objective objective, const std::function<double(const DesignPoint&)>& rescore) {
    objective_ = std::move(objective);
    for (std::size_t i = 0; i < cfg_.swarm; ++i) {
        if (std::isfinite(pbest_loss_[i])) pbest_loss_[i] = rescore(region_.from_unit(pbest_[i]));
    }
    refresh_best();
}

PsoResult pso_refine(const Objective& objective, const DesignSpace& region, const PsoConfig& cfg,
                     const DesignPoint& seed) {
    ParticleSwarm swarm(objective, region, cfg, seed);
    auto r = swarm.run(cfg.max_iterations);
    r.evaluations = swarm.evaluations();
    return r;
}

std::vector<DesignSpace> make_regions(std::span<const DesignPoint> candidates, const DesignSpace& space,
                                      double half_width) {
    std::vector<DesignSpace> out;
    out.reserve(candidates.size());
    for (const auto& c : candidates) {
        if (!space.contains(c)) throw std::invalid_argument("make_regions: candidate outside the design space");
        std::vector<Parameter> params;
        for (std::size_t j = 0; j < space.dim(); ++j) {
            const double u = space.to_unit(j, c.values[j]);
            const auto& p = space.param(j);
            double lo = space.from_unit(j, std::max(0.0, u - half_width));
            double hi = space.from_unit(j, std::min(1.0, u + half_width));
            // the candidate itself must stay inside its region despite round-off
            lo = std::min(lo, c.values[j]);
            hi = std::max(hi, c.values[j]);
            params.push_back({p.name, lo, hi, p.scale});
        }
        out.emplace_back(std::move(params));
    }
    return out;
}

}  // namespace opsizer
