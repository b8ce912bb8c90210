#pragma once

#include <vector>

#include "syncleft/config.hpp"
#include "syncleft/mean_field.hpp"

namespace syncleft {

/// Probability mass function on a contiguous integer support.
struct UnivariatePmf {
    int min_value = 0;
    std::vector<double> probs;

    int max_value() const { return min_value + static_cast<int>(probs.size()) - 1; }
    double total() const;
    /// Probability of an integer value; 0 outside the support.
    double at_value(int v) const;
    double mean() const;
    double variance() const;
};

/// Exact binomial mass P_B(k; n, p), computed in log space.
double binomial_pmf(int k, int n, double p);

/// Lower-tail CDF sum_{k'=0}^{k} P_B(k'; n, p), direct summation in log space.
double binomial_cdf(int k, int n, double p);

/// Upper tail sum_{k'=k}^{n} P_B(k'; n, p).
double binomial_upper_tail(int k, int n, double p);

/// Full Binomial(n, p) pmf on {0..n}, normalized to sum exactly 1.
UnivariatePmf binomial_distribution(int n, double p);

/// Receptor-independence benchmark: Binomial(C, o(t)/C).
UnivariatePmf occupancy_model(const MeanFieldSolution& meanfield, const ScenarioConfig& config,
                              double t);

/// NT-independence benchmark: Binomial(N0, n(t)/N0).
UnivariatePmf survival_model(const MeanFieldSolution& meanfield, const ScenarioConfig& config,
                             double t);

}  // namespace syncleft
