#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "syncleft/config.hpp"
#include "syncleft/mean_field.hpp"

namespace syncleft {

/// Rectangular (n, o) index window retained during one interval of the
/// adaptive state-reduction scheme. Bounds are inclusive.
struct StateWindow {
    int n_min = 0;
    int n_max = 0;
    int o_min = 0;
    int o_max = 0;
    int interval_index = 0;

    int levels() const { return n_max - n_min + 1; }
    int width() const { return o_max - o_min + 1; }
    std::size_t size() const {
        return static_cast<std::size_t>(levels()) * static_cast<std::size_t>(width());
    }
    bool contains(int n, int o) const {
        return n >= n_min && n <= n_max && o >= o_min && o <= o_max;
    }
    bool operator==(const StateWindow&) const = default;
};

/// Joint probability mass of (N(t), O(t)) on a window.
///
/// probs is row-major over (n - n_min, o - o_min). Entries at infeasible
/// states (o > n) are exactly 0. Total mass may fall below 1: the adaptive
/// scheme leaks the truncated tail mass by construction.
struct JointPmf {
    StateWindow window;
    int n_full = 0;  ///< full-space level count bound N0
    int o_full = 0;  ///< full-space occupancy bound C
    double time = 0.0;
    std::vector<double> probs;

    static JointPmf point_mass(int n, int o, int n_full, int o_full, double time = 0.0);

    double& at(int n, int o) {
        return probs[static_cast<std::size_t>(n - window.n_min) * window.width() +
                     (o - window.o_min)];
    }
    double at(int n, int o) const {
        return probs[static_cast<std::size_t>(n - window.n_min) * window.width() +
                     (o - window.o_min)];
    }
    double mass() const;
};

/// Within-level (tridiagonal) transition rates of one level n at a query time.
/// Index is the occupancy o over the full range {0..C}; infeasible entries
/// (o > n) are zeroed.
struct TridiagonalRates {
    int level = 0;
    std::vector<double> diag;    ///< total outflow, negated
    std::vector<double> bind;    ///< rate into (n, o) from (n, o-1); bind[0] = 0
    std::vector<double> unbind;  ///< rate into (n, o) from (n, o+1); unbind[C] = 0
};

TridiagonalRates q_block(int n, double t, const ScenarioConfig& config,
                         const BindingRateProfile& profile);

/// Degradation inflow rates into destination level n from level n+1, indexed
/// by o over {0..C}; zeroed when o > n+1.
std::vector<double> d_block(int n, const ScenarioConfig& config);

/// Matrix-free evaluation of dπ/dt = A(t)π restricted to the pmf window.
/// Out-of-window inflow is treated as 0, out-of-window outflow leaks.
void apply_generator(const JointPmf& pmf, double t, const ScenarioConfig& config,
                     const BindingRateProfile& profile, std::span<double> out);

/// Window of interval k (1-based) from the binomial tail bounds driven by the
/// mean-field trajectory and the current marginal of N at t_k.
StateWindow compute_window(int k, const ScenarioConfig& config,
                           const MeanFieldSolution& meanfield,
                           const std::vector<double>& current_pn, double epsilon);

/// Copies overlapping probabilities onto the target window; everything else
/// becomes 0 (mass outside the target is dropped).
JointPmf project(const JointPmf& pmf, const StateWindow& target);

/// Integrates the window-restricted CME from pmf.time to each checkpoint
/// (strictly increasing, last one is the interval end) and returns the
/// snapshots in order.
std::vector<JointPmf> step_interval(const JointPmf& pmf, const std::vector<double>& checkpoints,
                                    const ScenarioConfig& config,
                                    const BindingRateProfile& profile);

/// First and second moments of a joint pmf, normalized by its total mass.
struct Moments {
    double mean_n = 0.0;
    double var_n = 0.0;
    double mean_o = 0.0;
    double var_o = 0.0;
    double cov_no = 0.0;
    double mass = 0.0;
};

Moments moments(const JointPmf& pmf);

/// Marginal pmf of N, zero-padded to {0..N0}.
std::vector<double> marginal_n(const JointPmf& pmf);
/// Marginal pmf of O, zero-padded to {0..C}.
std::vector<double> marginal_o(const JointPmf& pmf);

struct AdaptiveOptions {
    std::size_t max_window_states = 4'000'000;
};

/// Trajectory snapshots at interval boundaries and sample times (ascending,
/// deduplicated), plus the final pmf re-embedded on the full state space.
struct CmeTrajectory {
    std::vector<JointPmf> snapshots;
    JointPmf final_full;

    /// Snapshot with time closest to t (must be within 1e-9 of a stored time).
    const JointPmf& at_time(double t) const;
};

/// Iterative adaptive state-reduction solve over K = ceil(horizon/delta_t)
/// intervals. The κa(t) profile is taken from meanfield.kappa_profile
/// (a zero profile is substituted when receptors == 0).
CmeTrajectory run_adaptive(const ScenarioConfig& config, const MeanFieldSolution& meanfield,
                           const AdaptiveOptions& options = {});

/// Direct integration on the full state space; ground truth for small
/// instances. Refuses when (N0+1)(C+1) exceeds state_cap.
CmeTrajectory solve_full_dense(const ScenarioConfig& config, const BindingRateProfile& profile,
                               std::size_t state_cap = 40'000);

}  // namespace syncleft
