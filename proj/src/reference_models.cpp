#include "syncleft/reference_models.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace syncleft {

namespace {

void check_domain(int k, int n, double p) {
    if (n < 0) throw std::invalid_argument("binomial: n must be >= 0");
    if (k < 0 || k > n)
        throw std::invalid_argument("binomial: k=" + std::to_string(k) +
                                    " outside [0, " + std::to_string(n) + "]");
    if (p < 0.0 || p > 1.0)
        throw std::invalid_argument("binomial: p=" + std::to_string(p) + " outside [0, 1]");
}

double log_binomial_pmf(int k, int n, double p) {
    return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) +
           k * std::log(p) + (n - k) * std::log1p(-p);
}

}  // namespace

double UnivariatePmf::total() const {
    double s = 0.0;
    for (double v : probs) s += v;
    return s;
}

double UnivariatePmf::at_value(int v) const {
    const int i = v - min_value;
    if (i < 0 || i >= static_cast<int>(probs.size())) return 0.0;
    return probs[static_cast<std::size_t>(i)];
}

double UnivariatePmf::mean() const {
    double m = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i)
        m += (min_value + static_cast<double>(i)) * probs[i];
    const double mass = total();
    if (mass <= 0.0) throw std::invalid_argument("pmf has zero mass");
    return m / mass;
}

double UnivariatePmf::variance() const {
    const double mu = mean();
    double v = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const double x = min_value + static_cast<double>(i) - mu;
        v += x * x * probs[i];
    }
    return v / total();
}

double binomial_pmf(int k, int n, double p) {
    check_domain(k, n, p);
    if (p == 0.0) return k == 0 ? 1.0 : 0.0;
    if (p == 1.0) return k == n ? 1.0 : 0.0;
    return std::exp(log_binomial_pmf(k, n, p));
}

double binomial_cdf(int k, int n, double p) {
    check_domain(k, n, p);
    long double acc = 0.0L;
    for (int i = 0; i <= k; ++i) acc += static_cast<long double>(binomial_pmf(i, n, p));
    return static_cast<double>(std::min(acc, 1.0L));
}

double binomial_upper_tail(int k, int n, double p) {
    check_domain(k, n, p);
    long double acc = 0.0L;
    for (int i = n; i >= k; --i) acc += static_cast<long double>(binomial_pmf(i, n, p));
    return static_cast<double>(std::min(acc, 1.0L));
}

UnivariatePmf binomial_distribution(int n, double p) {
    check_domain(0, n, p);
    UnivariatePmf pmf;
    pmf.min_value = 0;
    pmf.probs.resize(n + 1);
    long double sum = 0.0L;
    for (int k = 0; k <= n; ++k) {
        pmf.probs[k] = binomial_pmf(k, n, p);
        sum += pmf.probs[k];
    }
    const double norm = static_cast<double>(sum);
    for (double& v : pmf.probs) v /= norm;
    return pmf;
}

UnivariatePmf occupancy_model(const MeanFieldSolution& meanfield, const ScenarioConfig& config,
                              double t) {
    const double p = config.receptors > 0
                         ? std::clamp(meanfield.o_at(t) / config.receptors, 0.0, 1.0)
                         : 0.0;
    return binomial_distribution(config.receptors, p);
}

UnivariatePmf survival_model(const MeanFieldSolution& meanfield, const ScenarioConfig& config,
                             double t) {
    const double p = std::clamp(meanfield.n_at(t) / config.n0, 0.0, 1.0);
    return binomial_distribution(config.n0, p);
}

}  // namespace syncleft
