#include "syncleft/config.hpp"

#include <cmath>

namespace syncleft {

double ScenarioConfig::kappa_a0() const {
    if (receptors <= 0)
        throw ConfigError("C", "per-pair binding rate undefined for C = 0");
    return kappa_a_agg / receptors;
}

int ScenarioConfig::interval_count() const {
    return static_cast<int>(std::ceil(horizon / delta_t - 1e-12));
}

void ScenarioConfig::validate() const {
    if (n0 < 1) throw ConfigError("N0", "must be >= 1");
    if (receptors < 0) throw ConfigError("C", "must be >= 0");
    if (kappa_a_agg < 0) throw ConfigError("kappa_a_agg", "must be >= 0");
    if (kappa_d < 0) throw ConfigError("kappa_d", "must be >= 0");
    if (kappa_e < 0) throw ConfigError("kappa_e", "must be >= 0");
    if (!(diffusion > 0)) throw ConfigError("D", "must be > 0");
    if (!(cleft_width > 0)) throw ConfigError("a", "must be > 0");
    if (!(epsilon > 0)) throw ConfigError("epsilon", "must be > 0");
    if (!(delta_t > 0)) throw ConfigError("delta_t", "must be > 0");
    if (!(horizon > 0)) throw ConfigError("horizon", "must be > 0");
    if (nx < 3) throw ConfigError("nx", "must be >= 3");
    if (!(dt_pde > 0)) throw ConfigError("dt_pde", "must be > 0");
    if (!(ode_tol > 0)) throw ConfigError("ode_tol", "must be > 0");
    if (sample_times.empty()) throw ConfigError("sample_times", "must not be empty");
    for (double t : sample_times)
        if (t < 0 || t > horizon + 1e-9 * horizon)
            throw ConfigError("sample_times",
                              "entry " + std::to_string(t) + " outside [0, horizon]");
    if (receptors > 0 && !std::isfinite(kappa_a_agg / receptors))
        throw ConfigError("kappa_a_agg", "kappa_a_agg / C must be finite");
}

}  // namespace syncleft
