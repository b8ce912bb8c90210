#pragma once

#include <cstdint>
#include <vector>

#include "syncleft/config.hpp"
#include "syncleft/reference_models.hpp"

namespace syncleft {

enum class Variable { N, O };

struct PbsConfig {
    ScenarioConfig scenario;
    double dt_pbs = 0.05;      ///< particle time step, µs
    int trials = 6000;
    std::uint64_t seed = 12345;
    int threads = 0;           ///< 0 -> hardware concurrency
    bool record_final_positions = false;

    void validate() const;
};

/// One realization: counts at each scenario sample time.
struct TrialResult {
    std::vector<int> n_counts;
    std::vector<int> o_counts;
    std::uint64_t boundary_contacts = 0;
    std::uint64_t clamped_contacts = 0;
    std::vector<double> final_positions;  ///< solute positions at the horizon, when recorded
};

/// Ensemble histograms of N(t) and O(t) at the sample times.
struct EmpiricalDistribution {
    std::vector<double> sample_times;
    std::vector<std::vector<std::uint64_t>> n_hist;  ///< [time][value 0..N0]
    std::vector<std::vector<std::uint64_t>> o_hist;  ///< [time][value 0..C]
    int trials = 0;
    std::uint64_t boundary_contacts = 0;
    std::uint64_t clamped_contacts = 0;

    /// True when the binding-probability clamp engaged on > 0.1 % of contacts;
    /// callers should warn and recommend a smaller dt_pbs.
    bool clamp_warning() const;
};

/// Deterministic per-trial seed derived from the master seed; trial i's seed
/// does not change when the ensemble grows.
std::uint64_t derive_trial_seed(std::uint64_t master_seed, int trial_index);

TrialResult run_trial(const PbsConfig& config, std::uint64_t trial_seed);

EmpiricalDistribution run_ensemble(const PbsConfig& config);

/// Histogram at a sample time normalized by the trial count.
UnivariatePmf empirical_pmf(const EmpiricalDistribution& dist, double t, Variable variable);

}  // namespace syncleft
