#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace syncleft {

/// Time-stepping scheme for the mean-field PDE solve.
enum class PdeScheme { CrankNicolson, ExplicitEuler };

/// Configuration error carrying the offending field name.
class ConfigError : public std::invalid_argument {
public:
    ConfigError(std::string field, const std::string& message)
        : std::invalid_argument(field + ": " + message), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// Failure inside a numerical solver (non-convergence, step underflow, ...).
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// All physical and numerical parameters of one scenario.
///
/// Units are fixed throughout the library: lengths in µm, times in µs,
/// rates in 1/µs, the aggregate binding rate in µm/µs.
struct ScenarioConfig {
    int n0 = 1000;                 ///< released neurotransmitters N0
    int receptors = 203;           ///< postsynaptic receptor count C
    double kappa_a_agg = 1.52e-5;  ///< aggregate binding rate of the boundary condition, µm/µs
    double kappa_d = 8.5e-3;       ///< unbinding rate, 1/µs
    double kappa_e = 1e-3;         ///< enzymatic degradation rate, 1/µs
    double diffusion = 3.3e-4;     ///< diffusion coefficient D, µm²/µs
    double cleft_width = 0.5;      ///< cleft width a, µm

    double epsilon = 1e-6;         ///< truncation tolerance for the state reduction
    double delta_t = 50.0;         ///< interval length for the adaptive scheme, µs
    double horizon = 1000.0;       ///< total simulated time, µs

    int nx = 201;                  ///< spatial grid points
    double dt_pde = 0.25;          ///< PDE time step, µs
    PdeScheme pde_scheme = PdeScheme::CrankNicolson;

    double ode_tol = 1e-10;        ///< absolute per-component tolerance of the pmf integrator
    std::vector<double> sample_times{100.0, 250.0, 500.0, 750.0, 1000.0};  ///< output times, µs

    /// Per NT-receptor pair rate: kappa_a_agg / receptors. Requires receptors > 0.
    double kappa_a0() const;

    /// Number of intervals K = ceil(horizon / delta_t).
    int interval_count() const;

    /// Throws ConfigError naming the first violated field.
    void validate() const;
};

}  // namespace syncleft
