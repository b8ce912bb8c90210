#pragma once

#include <cstddef>
#include <vector>

#include "syncleft/config.hpp"

namespace syncleft {

/// Time-dependent macroscopic binding rate κa(t), per NT-receptor pair, 1/µs.
struct BindingRateProfile {
    std::vector<double> t_grid;  ///< µs
    std::vector<double> values;  ///< 1/µs
    /// First time after which the profile is clamped to 0 (infinity if never).
    double floor_time = 0.0;

    /// Constant-rate profile over [0, horizon]; useful for synthetic scenarios.
    static BindingRateProfile constant(double rate, double horizon);
};

/// Discretized solution of the deterministic reaction-diffusion problem.
struct MeanFieldSolution {
    std::vector<double> t_grid;  ///< µs, uniform, starts at 0
    std::vector<double> x_grid;  ///< µm, node-centered, x_grid.front()=0, back()=a
    std::vector<double> c;       ///< concentration, 1/µm; row-major [time][space]
    std::vector<double> o_mean;  ///< expected occupied receptors
    std::vector<double> n_mean;  ///< expected total surviving NTs
    BindingRateProfile kappa_profile;  ///< empty values when receptors == 0

    std::size_t nx() const { return x_grid.size(); }
    double c_at(std::size_t ti, std::size_t xi) const { return c[ti * nx() + xi]; }
    double c_boundary(std::size_t ti) const { return c[ti * nx() + nx() - 1]; }

    /// Trapezoidal quadrature of c(·, t_grid[ti]) over [0, a].
    double integrate_c(std::size_t ti) const;

    /// Linear interpolation of n_mean / o_mean at time t (µs).
    double n_at(double t) const;
    double o_at(double t) const;
};

/// Solves the mean-field boundary value problem by method of lines.
MeanFieldSolution solve_mean_field(const ScenarioConfig& config);

/// Samples κa(t) = κ̃a0 · c(a,t) / ∫c on the solution grid. The profile is
/// clamped to 0 once ∫c falls below mass_floor (pass a negative value for the
/// default floor 1e-9 · N0 / a). Throws ConfigError when receptors == 0.
BindingRateProfile binding_rate_profile(const MeanFieldSolution& solution,
                                        const ScenarioConfig& config,
                                        double mass_floor = -1.0);

/// Linear interpolation between profile samples; exact at sample points,
/// 0 beyond floor_time. Throws std::out_of_range outside the covered range.
double kappa_at(const BindingRateProfile& profile, double t);

}  // namespace syncleft
