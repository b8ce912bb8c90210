#include "syncleft/mean_field.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace syncleft {

namespace {

constexpr double kPicardTol = 1e-10;
constexpr int kPicardMaxIter = 200;
// Rannacher startup: the first CN steps are replaced by pairs of halved
// backward-Euler substeps, damping the oscillatory modes the Dirac initial
// condition would otherwise excite.
constexpr int kRannacherPairs = 2;

double trapezoid_mass(const std::vector<double>& c, double dx) {
    double sum = 0.5 * (c.front() + c.back());
    for (std::size_t i = 1; i + 1 < c.size(); ++i) sum += c[i];
    return sum * dx;
}

// Thomas algorithm; diag/rhs are consumed as scratch.
void solve_tridiagonal(std::vector<double>& sub, std::vector<double>& diag,
                       std::vector<double>& sup, std::vector<double>& rhs,
                       std::vector<double>& out) {
    const std::size_t n = diag.size();
    for (std::size_t i = 1; i < n; ++i) {
        const double w = sub[i] / diag[i - 1];
        diag[i] -= w * sup[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    out[n - 1] = rhs[n - 1] / diag[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) out[i] = (rhs[i] - sup[i] * out[i + 1]) / diag[i];
}

double interpolate(const std::vector<double>& grid, const std::vector<double>& values,
                   double t, const char* what) {
    const double span = grid.back() - grid.front();
    const double slack = 1e-9 * std::max(span, 1.0);
    if (t < grid.front() - slack || t > grid.back() + slack)
        throw std::out_of_range(std::string(what) + ": time " + std::to_string(t) +
                                " outside [" + std::to_string(grid.front()) + ", " +
                                std::to_string(grid.back()) + "]");
    t = std::clamp(t, grid.front(), grid.back());
    const auto it = std::upper_bound(grid.begin(), grid.end(), t);
    if (it == grid.begin()) return values.front();
    if (it == grid.end()) return values.back();
    const std::size_t hi = static_cast<std::size_t>(it - grid.begin());
    const std::size_t lo = hi - 1;
    const double w = (t - grid[lo]) / (grid[hi] - grid[lo]);
    return (1.0 - w) * values[lo] + w * values[hi];
}

}  // namespace

BindingRateProfile BindingRateProfile::constant(double rate, double horizon) {
    BindingRateProfile p;
    p.t_grid = {0.0, horizon};
    p.values = {rate, rate};
    p.floor_time = std::numeric_limits<double>::infinity();
    return p;
}

double MeanFieldSolution::integrate_c(std::size_t ti) const {
    const std::size_t m = nx();
    const double* row = c.data() + ti * m;
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < m; ++i)
        sum += 0.5 * (row[i] + row[i + 1]) * (x_grid[i + 1] - x_grid[i]);
    return sum;
}

double MeanFieldSolution::n_at(double t) const { return interpolate(t_grid, n_mean, t, "n_at"); }
double MeanFieldSolution::o_at(double t) const { return interpolate(t_grid, o_mean, t, "o_at"); }

MeanFieldSolution solve_mean_field(const ScenarioConfig& config) {
    config.validate();

    const int m = config.nx - 1;  // last node index
    const double dx = config.cleft_width / m;
    const int steps = std::max(1, static_cast<int>(std::ceil(config.horizon / config.dt_pde - 1e-9)));
    const double dt = config.horizon / steps;
    const double big_c = static_cast<double>(config.receptors);
    const double flush = 1e-12 * config.n0 / config.cleft_width;

    if (config.pde_scheme == PdeScheme::ExplicitEuler) {
        const double cfl = config.diffusion * dt / (dx * dx);
        if (cfl > 0.5)
            throw SolverError("explicit PDE step is unstable (D*dt/dx^2 = " +
                              std::to_string(cfl) + " > 0.5); reduce dt_pde below " +
                              std::to_string(0.5 * dx * dx / config.diffusion) + " us");
    }

    auto binding_coeff = [&](double o) {
        return config.receptors > 0 ? config.kappa_a_agg * (1.0 - o / big_c) : 0.0;
    };
    auto boundary_flux = [&](double c_a, double o) {
        return binding_coeff(o) * c_a - config.kappa_d * o;
    };
    // Semi-discrete right-hand side; g is the boundary flux into receptors.
    auto rhs = [&](const std::vector<double>& cv, double g, std::vector<double>& out) {
        const double idx2 = config.diffusion / (dx * dx);
        out[0] = 2.0 * idx2 * (cv[1] - cv[0]) - config.kappa_e * cv[0];
        for (int i = 1; i < m; ++i)
            out[i] = idx2 * (cv[i - 1] - 2.0 * cv[i] + cv[i + 1]) - config.kappa_e * cv[i];
        out[m] = 2.0 * idx2 * (cv[m - 1] - cv[m]) - (2.0 / dx) * g - config.kappa_e * cv[m];
    };

    MeanFieldSolution sol;
    sol.x_grid.resize(m + 1);
    for (int i = 0; i <= m; ++i) sol.x_grid[i] = i * dx;
    sol.t_grid.resize(steps + 1);
    sol.c.reserve(static_cast<std::size_t>(steps + 1) * (m + 1));
    sol.o_mean.reserve(steps + 1);
    sol.n_mean.reserve(steps + 1);

    // Initial mass sits in the half-cell around x=0 so the trapezoidal mass
    // is exactly N0.
    std::vector<double> c(m + 1, 0.0);
    c[0] = 2.0 * config.n0 / dx;
    double o = 0.0;
    double n = static_cast<double>(config.n0);
    double g_prev = boundary_flux(c[m], o);

    auto record = [&](int step) {
        sol.t_grid[step] = step * dt;
        sol.c.insert(sol.c.end(), c.begin(), c.end());
        sol.o_mean.push_back(o);
        sol.n_mean.push_back(n);
    };
    record(0);

    std::vector<double> sub(m + 1), diag(m + 1), sup(m + 1), rhs_vec(m + 1);
    std::vector<double> c_new(m + 1), deriv(m + 1);

    // One theta-step of length h (theta = 1: backward Euler, 0.5: CN). The
    // binding part of the boundary flux is implicit in c_m; the remaining
    // nonlinearity is resolved by Picard iteration to a 1e-10 residual.
    auto advance_implicit = [&](double h, double theta, int step) {
        const double r = config.diffusion * h / (dx * dx);
        const double q = config.kappa_e * h;
        const double mass_old = trapezoid_mass(c, dx);
        rhs(c, g_prev, deriv);  // explicit part

        double o_star = o;
        double c_m_prev = c[m];
        double o_new = o;
        bool converged = false;
        for (int iter = 0; iter < kPicardMaxIter; ++iter) {
            const double alpha = binding_coeff(o_star);
            for (int i = 0; i <= m; ++i) {
                diag[i] = 1.0 + 2.0 * theta * r + theta * q;
                sub[i] = -theta * r;
                sup[i] = -theta * r;
                rhs_vec[i] = c[i] + h * (1.0 - theta) * deriv[i];
            }
            sup[0] = -2.0 * theta * r;
            sub[m] = -2.0 * theta * r;
            diag[m] += theta * h * (2.0 / dx) * alpha;
            rhs_vec[m] += theta * h * (2.0 / dx) * config.kappa_d * o_star;

            solve_tridiagonal(sub, diag, sup, rhs_vec, c_new);

            o_new = (o + h * (1.0 - theta) * g_prev + h * theta * alpha * c_new[m]) /
                    (1.0 + h * theta * config.kappa_d);

            const double res = std::fabs(o_new - o_star) / (1.0 + std::fabs(o_new)) +
                               std::fabs(c_new[m] - c_m_prev) / (1.0 + std::fabs(c_new[m]));
            o_star = o_new;
            c_m_prev = c_new[m];
            if (res < kPicardTol) {
                converged = true;
                break;
            }
        }
        if (!converged)
            throw SolverError("nonlinear boundary iteration did not converge at step " +
                              std::to_string(step) + " (t=" + std::to_string(step * dt) +
                              " us)");

        const double mass_new = trapezoid_mass(c_new, dx);
        n -= config.kappa_e * h * (theta * mass_new + (1.0 - theta) * mass_old);
        c.swap(c_new);
        o = o_new;
        g_prev = boundary_flux(c[m], o);
    };

    for (int step = 1; step <= steps; ++step) {
        if (config.pde_scheme == PdeScheme::ExplicitEuler) {
            const double mass_old = trapezoid_mass(c, dx);
            rhs(c, g_prev, deriv);
            for (int i = 0; i <= m; ++i) c_new[i] = c[i] + dt * deriv[i];
            const double o_new = o + dt * g_prev;
            n -= config.kappa_e * dt * mass_old;
            c.swap(c_new);
            o = o_new;
            g_prev = boundary_flux(c[m], o);
        } else if (step <= kRannacherPairs) {
            advance_implicit(dt / 2.0, 1.0, step);
            advance_implicit(dt / 2.0, 1.0, step);
        } else {
            advance_implicit(dt, 0.5, step);
        }

        for (int i = 0; i <= m; ++i)
            if (c[i] < 0.0 && c[i] > -flush) c[i] = 0.0;

        record(step);
    }

    if (config.receptors > 0) sol.kappa_profile = binding_rate_profile(sol, config);
    return sol;
}

BindingRateProfile binding_rate_profile(const MeanFieldSolution& solution,
                                        const ScenarioConfig& config, double mass_floor) {
    if (config.receptors == 0)
        throw ConfigError("C", "binding rate undefined for C = 0; use a zero profile");
    if (mass_floor < 0) mass_floor = 1e-9 * config.n0 / config.cleft_width;

    const double ka0 = config.kappa_a0();
    BindingRateProfile profile;
    profile.t_grid = solution.t_grid;
    profile.values.resize(solution.t_grid.size());
    profile.floor_time = std::numeric_limits<double>::infinity();

    bool clamped = false;
    for (std::size_t ti = 0; ti < solution.t_grid.size(); ++ti) {
        const double mass = solution.integrate_c(ti);
        if (clamped || mass < mass_floor) {
            profile.values[ti] = 0.0;
            if (!clamped) {
                clamped = true;
                profile.floor_time = solution.t_grid[ti];
            }
        } else {
            profile.values[ti] = ka0 * solution.c_boundary(ti) / mass;
        }
    }
    return profile;
}

double kappa_at(const BindingRateProfile& profile, double t) {
    const double v = interpolate(profile.t_grid, profile.values, t, "kappa_at");
    return t >= profile.floor_time ? 0.0 : v;
}

}  // namespace syncleft
