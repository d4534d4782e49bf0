#include <map>
#include <mutex>

#include "opsizer/eoa.hpp"
#include "opsizer/loss.hpp"
#include "opsizer/search.hpp"
#include "opsizer/sim.hpp"

namespace opsizer {

namespace {

struct RunLog {
    std::vector<SimOutcome> outcomes;  // DE log order
};

RunLog bootstrap_run(const Simulator& sim, const LossSpec& spec, DeConfig de) {
    std::mutex mu;
    std::map<std::vector<double>, SimOutcome> seen;
    const auto objective = [&](const DesignPoint& p) {
        auto o = sim.simulate(p);
        const double loss = evaluate_loss(spec, o);
        std::lock_guard lock(mu);
        seen.emplace(p.values, std::move(o));
        return loss;
    };
    const auto result = de_search(objective, sim.space(), de);

    RunLog log;
    log.outcomes.reserve(result.log.size());
    for (const auto& e : result.log) log.outcomes.push_back(seen.at(e.point.values));
    return log;
}

}  // namespace

BootstrapResult bootstrap_corpus(const Simulator& sim, const RequirementSet& req, const DeConfig& de,
                                 const BootstrapConfig& cfg) {
    validate_requirements(req);
    de.validate();
    if (cfg.runs == 0) throw std::invalid_argument("bootstrap needs at least one run");
    std::vector<RunLog> logs(cfg.runs);
    parallel_for(cfg.runs, cfg.threads, [&](std::size_t i) {
        DeConfig run_cfg = de;
        run_cfg.seed = derive_seed(cfg.seed, i);
        run_cfg.threads = 1;
        RequirementSet target = req;
        if (cfg.vary_requirements) {
            Rng rng(derive_seed(cfg.seed, i, 1));
            target = sample_requirements(rng, req);
        }
        logs[i] = bootstrap_run(sim, uniform_quadratic_loss(target), run_cfg);
    });

    BootstrapResult r;
    std::string first_failure;
    for (const auto& log : logs) {
        for (const auto& o : log.outcomes) {
            ++r.evaluations;
            if (o.feasible()) {
                r.corpus.append(o.metrics());
            } else {
                ++r.failures;
                if (first_failure.empty()) first_failure = o.diagnostic();
            }
        }
    }
    if (2 * r.failures > r.evaluations) {
        throw BootstrapError("simulator failure: " + std::to_string(r.failures) + " of " +
                             std::to_string(r.evaluations) + " simulations infeasible (first: " + first_failure +
                             ")");
    }
    return r;
}

}  // namespace opsizer
