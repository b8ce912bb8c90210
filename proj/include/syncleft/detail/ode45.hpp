#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "syncleft/config.hpp"

namespace syncleft::detail {

struct OdeOptions {
    double abs_tol = 1e-10;
    double rel_tol = 0.0;
    double initial_step = 0.0;  // 0 -> heuristic
    double max_step = std::numeric_limits<double>::infinity();
    std::size_t max_steps = 50'000'000;
    // Upper bound on the spectral radius of the Jacobian at time t. When set,
    // the step is capped at the explicit stability limit instead of letting
    // the error controller thrash through reject cycles on stiff stretches.
    std::function<double(double)> stability_rate;
};

// Dormand-Prince 5(4) with FSAL and a PI-free elementary step controller.
// Integrates y' = rhs(t, y) in place from t0 to t1 (t1 > t0). The rhs functor
// signature is rhs(double t, const std::vector<double>& y, std::vector<double>& dydt).
template <typename Rhs>
void integrate_dp5(Rhs&& rhs, double t0, double t1, std::vector<double>& y,
                   const OdeOptions& opt) {
    static constexpr double a21 = 1.0 / 5.0;
    static constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
    static constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
    static constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0,
                            a53 = 64448.0 / 6561.0, a54 = -212.0 / 729.0;
    static constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0,
                            a63 = 46732.0 / 5247.0, a64 = 49.0 / 176.0,
                            a65 = -5103.0 / 18656.0;
    static constexpr double b1 = 35.0 / 384.0, b3 = 500.0 / 1113.0, b4 = 125.0 / 192.0,
                            b5 = -2187.0 / 6784.0, b6 = 11.0 / 84.0;
    static constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                            e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
    static constexpr double c2 = 1.0 / 5.0, c3 = 3.0 / 10.0, c4 = 4.0 / 5.0, c5 = 8.0 / 9.0;
    // DP5 real-axis stability boundary is ~3.3; keep a margin.
    static constexpr double stability_span = 3.0;

    if (!(t1 > t0)) return;
    const std::size_t n = y.size();
    std::vector<double> k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ytmp(n), ynew(n);

    double t = t0;
    rhs(t, y, k1);

    auto stability_cap = [&](double at) {
        if (!opt.stability_rate) return std::numeric_limits<double>::infinity();
        const double rate = opt.stability_rate(at);
        return rate > 0.0 ? stability_span / rate : std::numeric_limits<double>::infinity();
    };

    double h = opt.initial_step;
    if (h <= 0.0) {
        h = std::min((t1 - t0) / 100.0, stability_cap(t0));
        if (!(h > 0.0) || !std::isfinite(h)) h = (t1 - t0) / 100.0;
    }
    h = std::min({h, opt.max_step, t1 - t0});

    const double h_floor = std::max(1e-14, 1e-13 * (t1 - t0));
    std::size_t steps = 0;

    while (t < t1) {
        if (++steps > opt.max_steps)
            throw SolverError("ode integrator exceeded max step count at t=" + std::to_string(t));
        h = std::min({h, opt.max_step, t1 - t, stability_cap(t)});
        if (h < h_floor)
            throw SolverError("ode integrator step size underflow at t=" + std::to_string(t));

        for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + h * a21 * k1[i];
        rhs(t + c2 * h, ytmp, k2);
        for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
        rhs(t + c3 * h, ytmp, k3);
        for (std::size_t i = 0; i < n; ++i)
            ytmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        rhs(t + c4 * h, ytmp, k4);
        for (std::size_t i = 0; i < n; ++i)
            ytmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
        rhs(t + c5 * h, ytmp, k5);
        for (std::size_t i = 0; i < n; ++i)
            ytmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] +
                                  a65 * k5[i]);
        rhs(t + h, ytmp, k6);
        for (std::size_t i = 0; i < n; ++i)
            ynew[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
        rhs(t + h, ynew, k7);

        double err = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] +
                                  e6 * k6[i] + e7 * k7[i]);
            const double scale =
                opt.abs_tol + opt.rel_tol * std::max(std::fabs(y[i]), std::fabs(ynew[i]));
            err = std::max(err, std::fabs(e) / scale);
        }

        if (err <= 1.0) {
            t += h;
            y.swap(ynew);
            k1.swap(k7);  // FSAL: k7 was evaluated at the accepted state
        }
        const double factor =
            err > 0.0 ? std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0) : 5.0;
        h *= factor;
    }
}

}  // namespace syncleft::detail
