#include "syncleft/pbs.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>

namespace syncleft {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

enum class ParticleState : std::uint8_t { Solute, Bound, Degraded };

}  // namespace

void PbsConfig::validate() const {
    scenario.validate();
    if (!(dt_pbs > 0)) throw ConfigError("dt_pbs", "must be > 0");
    const double step_len = std::sqrt(2.0 * scenario.diffusion * dt_pbs);
    if (step_len > scenario.cleft_width / 10.0)
        throw ConfigError("dt_pbs", "sqrt(2 D dt_pbs) = " + std::to_string(step_len) +
                                        " exceeds a/10 = " +
                                        std::to_string(scenario.cleft_width / 10.0) +
                                        "; reduce dt_pbs");
    if (trials < 1) throw ConfigError("trials", "must be >= 1");
}

std::uint64_t derive_trial_seed(std::uint64_t master_seed, int trial_index) {
    return splitmix64(master_seed ^
                      (0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(trial_index) + 1)));
}

TrialResult run_trial(const PbsConfig& config, std::uint64_t trial_seed) {
    const ScenarioConfig& sc = config.scenario;
    const double dt = config.dt_pbs;
    const double a = sc.cleft_width;
    const double sigma = std::sqrt(2.0 * sc.diffusion * dt);
    const double p_unbind = -std::expm1(-sc.kappa_d * dt);
    const double p_degrade = -std::expm1(-sc.kappa_e * dt);
    // Partially reflecting boundary: per-contact acceptance for the Robin
    // condition with rate kappa_a0 * (free receptors).
    const double bind_scale =
        sc.receptors > 0
            ? sc.kappa_a0() * std::sqrt(std::numbers::pi * dt / sc.diffusion)
            : 0.0;

    std::mt19937_64 rng(trial_seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);

    std::vector<double> x(sc.n0, 0.0);
    std::vector<ParticleState> state(sc.n0, ParticleState::Solute);
    int free_receptors = sc.receptors;
    int alive = sc.n0;
    int bound = 0;

    // Sample times map to step indices; dt is not adjusted.
    std::vector<long> sample_steps;
    sample_steps.reserve(sc.sample_times.size());
    for (double t : sc.sample_times) sample_steps.push_back(std::lround(t / dt));
    long last_step = 0;
    for (long s : sample_steps) last_step = std::max(last_step, s);

    TrialResult result;
    result.n_counts.resize(sc.sample_times.size());
    result.o_counts.resize(sc.sample_times.size());

    auto record_if_due = [&](long step) {
        for (std::size_t i = 0; i < sample_steps.size(); ++i)
            if (sample_steps[i] == step) {
                result.n_counts[i] = alive;
                result.o_counts[i] = bound;
            }
    };
    record_if_due(0);

    for (long step = 1; step <= last_step; ++step) {
        for (int i = 0; i < sc.n0; ++i) {
            switch (state[i]) {
                case ParticleState::Degraded:
                    break;
                case ParticleState::Bound:
                    if (uniform(rng) < p_unbind) {
                        state[i] = ParticleState::Solute;
                        x[i] = a;
                        --bound;
                        ++free_receptors;
                    }
                    break;
                case ParticleState::Solute: {
                    if (p_degrade > 0.0 && uniform(rng) < p_degrade) {
                        state[i] = ParticleState::Degraded;
                        --alive;
                        break;
                    }
                    double pos = x[i] + sigma * normal(rng);
                    bool absorbed = false;
                    while (pos < 0.0 || pos > a) {
                        if (pos < 0.0) {
                            pos = -pos;
                            continue;
                        }
                        ++result.boundary_contacts;
                        double p_bind = bind_scale * free_receptors;
                        if (p_bind > 1.0) {
                            p_bind = 1.0;
                            ++result.clamped_contacts;
                        }
                        if (p_bind > 0.0 && uniform(rng) < p_bind) {
                            state[i] = ParticleState::Bound;
                            ++bound;
                            --free_receptors;
                            absorbed = true;
                            break;
                        }
                        pos = 2.0 * a - pos;
                    }
                    if (!absorbed) x[i] = pos;
                    break;
                }
            }
        }
        record_if_due(step);
    }

    if (config.record_final_positions) {
        for (int i = 0; i < sc.n0; ++i)
            if (state[i] == ParticleState::Solute) result.final_positions.push_back(x[i]);
    }
    return result;
}

EmpiricalDistribution run_ensemble(const PbsConfig& config) {
    config.validate();
    const ScenarioConfig& sc = config.scenario;

    std::vector<TrialResult> results(config.trials);
    int thread_count = config.threads > 0
                           ? config.threads
                           : static_cast<int>(std::thread::hardware_concurrency());
    thread_count = std::clamp(thread_count, 1, config.trials);

    auto worker = [&](int first, int stride) {
        for (int i = first; i < config.trials; i += stride)
            results[i] = run_trial(config, derive_trial_seed(config.seed, i));
    };
    if (thread_count == 1) {
        worker(0, 1);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(thread_count);
        for (int t = 0; t < thread_count; ++t) pool.emplace_back(worker, t, thread_count);
        for (std::thread& t : pool) t.join();
    }

    EmpiricalDistribution dist;
    dist.sample_times = sc.sample_times;
    dist.trials = config.trials;
    dist.n_hist.assign(sc.sample_times.size(),
                       std::vector<std::uint64_t>(static_cast<std::size_t>(sc.n0) + 1, 0));
    dist.o_hist.assign(sc.sample_times.size(),
                       std::vector<std::uint64_t>(static_cast<std::size_t>(sc.receptors) + 1, 0));
    // Aggregation in trial order: independent of thread scheduling.
    for (const TrialResult& r : results) {
        for (std::size_t ti = 0; ti < sc.sample_times.size(); ++ti) {
            ++dist.n_hist[ti][static_cast<std::size_t>(r.n_counts[ti])];
            ++dist.o_hist[ti][static_cast<std::size_t>(r.o_counts[ti])];
        }
        dist.boundary_contacts += r.boundary_contacts;
        dist.clamped_contacts += r.clamped_contacts;
    }
    return dist;
}

bool EmpiricalDistribution::clamp_warning() const {
    return boundary_contacts > 0 &&
           static_cast<double>(clamped_contacts) > 1e-3 * static_cast<double>(boundary_contacts);
}

UnivariatePmf empirical_pmf(const EmpiricalDistribution& dist, double t, Variable variable) {
    std::size_t ti = dist.sample_times.size();
    for (std::size_t i = 0; i < dist.sample_times.size(); ++i)
        if (std::fabs(dist.sample_times[i] - t) <= 1e-9 * std::max(1.0, std::fabs(t))) {
            ti = i;
            break;
        }
    if (ti == dist.sample_times.size())
        throw std::invalid_argument("empirical_pmf: " + std::to_string(t) +
                                    " is not a sample time");
    const auto& hist = variable == Variable::N ? dist.n_hist[ti] : dist.o_hist[ti];
    UnivariatePmf pmf;
    pmf.min_value = 0;
    pmf.probs.resize(hist.size());
    for (std::size_t i = 0; i < hist.size(); ++i)
        pmf.probs[i] = static_cast<double>(hist[i]) / dist.trials;
    return pmf;
}

}  // namespace syncleft
