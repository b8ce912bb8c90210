#include "syncleft/cme.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "syncleft/detail/ode45.hpp"
#include "syncleft/reference_models.hpp"

namespace syncleft {

namespace {

// Matrix-free CME right-hand side on a window. Out-of-window inflow is 0;
// outflow across the window edge leaves through the diagonal (mass leak).
void generator_rhs(const StateWindow& w, int receptors, double kappa_a, double kappa_d,
                   double kappa_e, std::span<const double> probs, std::span<double> out) {
    const int width = w.width();
    const double cr = static_cast<double>(receptors);
    for (int n = w.n_min; n <= w.n_max; ++n) {
        const std::size_t row = static_cast<std::size_t>(n - w.n_min) * width;
        for (int o = w.o_min; o <= w.o_max; ++o) {
            const std::size_t idx = row + static_cast<std::size_t>(o - w.o_min);
            if (o > n) {
                out[idx] = 0.0;
                continue;
            }
            const double solute = static_cast<double>(n - o);
            double d = -(kappa_d * o + kappa_e * solute + kappa_a * solute * (cr - o)) *
                       probs[idx];
            if (o + 1 <= w.o_max) d += kappa_d * (o + 1) * probs[idx + 1];
            if (n + 1 <= w.n_max) d += kappa_e * (n + 1 - o) * probs[idx + width];
            if (o - 1 >= w.o_min)
                d += kappa_a * (solute + 1.0) * (cr - o + 1.0) * probs[idx - 1];
            out[idx] = d;
        }
    }
}

// Largest k with CDF(k; n, p) < eps; -1 when even k=0 fails (empty set).
int lower_tail_bound(int n, double p, double eps) {
    long double acc = 0.0L;
    for (int k = 0; k <= n; ++k) {
        acc += static_cast<long double>(binomial_pmf(k, n, p));
        if (acc >= static_cast<long double>(eps)) return k - 1;
    }
    return n;
}

// Smallest k with upper tail(k; n, p) < eps; n+1 when even k=n fails.
int upper_tail_bound(int n, double p, double eps) {
    long double acc = 0.0L;
    for (int k = n; k >= 0; --k) {
        acc += static_cast<long double>(binomial_pmf(k, n, p));
        if (acc >= static_cast<long double>(eps)) return k + 1;
    }
    return 0;
}

StateWindow full_window(const ScenarioConfig& config, int interval_index) {
    return StateWindow{0, config.n0, 0, config.receptors, interval_index};
}

std::vector<double> merged_record_times(const ScenarioConfig& config) {
    std::vector<double> times;
    const int k_count = config.interval_count();
    for (int k = 1; k <= k_count; ++k)
        times.push_back(std::min(k * config.delta_t, config.horizon));
    for (double s : config.sample_times)
        if (s > 0.0) times.push_back(std::min(s, config.horizon));
    std::sort(times.begin(), times.end());
    const double tiny = 1e-9 * config.horizon;
    times.erase(std::unique(times.begin(), times.end(),
                            [tiny](double a, double b) { return std::fabs(a - b) < tiny; }),
                times.end());
    return times;
}

}  // namespace

JointPmf JointPmf::point_mass(int n, int o, int n_full, int o_full, double time) {
    JointPmf pmf;
    pmf.window = StateWindow{n, n, o, o, 0};
    pmf.n_full = n_full;
    pmf.o_full = o_full;
    pmf.time = time;
    pmf.probs = {1.0};
    return pmf;
}

double JointPmf::mass() const {
    double s = 0.0;
    for (double p : probs) s += p;
    return s;
}

TridiagonalRates q_block(int n, double t, const ScenarioConfig& config,
                         const BindingRateProfile& profile) {
    const int cr = config.receptors;
    const double ka = kappa_at(profile, t);
    TridiagonalRates rates;
    rates.level = n;
    rates.diag.assign(cr + 1, 0.0);
    rates.bind.assign(cr + 1, 0.0);
    rates.unbind.assign(cr + 1, 0.0);
    for (int o = 0; o <= cr; ++o) {
        if (o > n) continue;  // infeasible destination states stay zero
        rates.diag[o] = -(config.kappa_d * o + config.kappa_e * (n - o) +
                          ka * (n - o) * (cr - o));
        if (o >= 1) rates.bind[o] = ka * (n - o + 1) * (cr - o + 1);
        if (o + 1 <= cr) rates.unbind[o] = config.kappa_d * (o + 1);
    }
    return rates;
}

std::vector<double> d_block(int n, const ScenarioConfig& config) {
    std::vector<double> rates(config.receptors + 1, 0.0);
    for (int o = 0; o <= config.receptors; ++o) {
        if (o > n + 1) continue;
        rates[o] = config.kappa_e * (n + 1 - o);
    }
    return rates;
}

void apply_generator(const JointPmf& pmf, double t, const ScenarioConfig& config,
                     const BindingRateProfile& profile, std::span<double> out) {
    if (out.size() != pmf.probs.size())
        throw std::invalid_argument("apply_generator: output size mismatch");
    generator_rhs(pmf.window, config.receptors, kappa_at(profile, t), config.kappa_d,
                  config.kappa_e, pmf.probs, out);
}

StateWindow compute_window(int k, const ScenarioConfig& config,
                           const MeanFieldSolution& meanfield,
                           const std::vector<double>& current_pn, double epsilon) {
    const int n0 = config.n0;
    const int cr = config.receptors;
    const double t_k = (k - 1) * config.delta_t;
    const double t_end = std::min(k * config.delta_t, config.horizon);

    // N window: binomial tail at the interval-end mean below, current
    // marginal tail above.
    const double p_next = std::clamp(meanfield.n_at(t_end) / n0, 0.0, 1.0);
    int n_min = std::clamp(lower_tail_bound(n0, p_next, epsilon), 0, n0);

    int n_max = n0;
    {
        long double acc = 0.0L;
        bool hit = false;
        for (int n = n0; n >= 0; --n) {
            acc += current_pn[static_cast<std::size_t>(n)];
            if (acc >= static_cast<long double>(epsilon)) {
                n_max = std::min(n + 1, n0);
                hit = true;
                break;
            }
        }
        if (!hit) n_max = 0;  // remaining mass itself below epsilon
    }

    // O window from the occupancy fraction extremes over I_k (tails are
    // monotone in p, so the extreme fractions realize the max over t).
    std::vector<double> ts{t_k, t_end};
    for (double t : meanfield.t_grid)
        if (t > t_k && t < t_end) ts.push_back(t);
    double p_lo = 1.0, p_hi = 0.0;
    double n_lo = static_cast<double>(n0), n_hi = 0.0;
    for (double t : ts) {
        const double o_t = meanfield.o_at(t);
        const double n_t = meanfield.n_at(t);
        const double frac = cr > 0 ? std::clamp(o_t / cr, 0.0, 1.0) : 0.0;
        p_lo = std::min(p_lo, frac);
        p_hi = std::max(p_hi, frac);
        n_lo = std::min(n_lo, n_t);
        n_hi = std::max(n_hi, n_t);
    }
    int o_min = cr > 0 ? std::clamp(lower_tail_bound(cr, p_lo, epsilon), 0, cr) : 0;
    int o_max = cr > 0 ? std::clamp(upper_tail_bound(cr, p_hi, epsilon), 0, cr) : 0;

    // The window always contains the rounded mean-field pair.
    n_min = std::min(n_min, std::clamp(static_cast<int>(std::llround(n_lo)), 0, n0));
    n_max = std::max(n_max, std::clamp(static_cast<int>(std::llround(n_hi)), 0, n0));
    if (cr > 0) {
        o_min = std::min(o_min, std::clamp(static_cast<int>(std::llround(p_lo * cr)), 0, cr));
        o_max = std::max(o_max, std::clamp(static_cast<int>(std::llround(p_hi * cr)), 0, cr));
    }

    return StateWindow{n_min, n_max, o_min, o_max, k};
}

JointPmf project(const JointPmf& pmf, const StateWindow& target) {
    JointPmf out;
    out.window = target;
    out.n_full = pmf.n_full;
    out.o_full = pmf.o_full;
    out.time = pmf.time;
    out.probs.assign(target.size(), 0.0);
    const int n_lo = std::max(pmf.window.n_min, target.n_min);
    const int n_hi = std::min(pmf.window.n_max, target.n_max);
    const int o_lo = std::max(pmf.window.o_min, target.o_min);
    const int o_hi = std::min(pmf.window.o_max, target.o_max);
    for (int n = n_lo; n <= n_hi; ++n)
        for (int o = o_lo; o <= o_hi; ++o) out.at(n, o) = pmf.at(n, o);
    return out;
}

std::vector<JointPmf> step_interval(const JointPmf& pmf, const std::vector<double>& checkpoints,
                                    const ScenarioConfig& config,
                                    const BindingRateProfile& profile) {
    if (pmf.probs.size() != pmf.window.size())
        throw std::invalid_argument("step_interval: pmf storage does not match its window");
    const StateWindow w = pmf.window;

    detail::OdeOptions opt;
    opt.abs_tol = config.ode_tol;
    const double cr = static_cast<double>(config.receptors);
    opt.stability_rate = [&profile, w, cr, &config](double t) {
        // Upper bound on the largest total outflow rate over the window.
        const double ka = kappa_at(profile, t);
        return config.kappa_d * w.o_max + config.kappa_e * (w.n_max - w.o_min) +
               ka * static_cast<double>(w.n_max - w.o_min) * (cr - w.o_min);
    };

    std::vector<double> y = pmf.probs;
    std::vector<JointPmf> snapshots;
    snapshots.reserve(checkpoints.size());
    const double flush = 10.0 * config.ode_tol;  // integrator noise below zero
    double t = pmf.time;
    for (double cp : checkpoints) {
        if (cp < t - 1e-12)
            throw std::invalid_argument("step_interval: checkpoints must be ascending");
        try {
            integrate_dp5(
                [&](double tt, const std::vector<double>& yy, std::vector<double>& dd) {
                    generator_rhs(w, config.receptors, kappa_at(profile, tt), config.kappa_d,
                                  config.kappa_e, yy, dd);
                },
                t, cp, y, opt);
        } catch (const SolverError& e) {
            throw SolverError("interval " + std::to_string(w.interval_index) + ": " + e.what());
        }
        for (double& v : y)
            if (v < 0.0 && v > -flush) v = 0.0;
        t = cp;
        JointPmf snap;
        snap.window = w;
        snap.n_full = pmf.n_full;
        snap.o_full = pmf.o_full;
        snap.time = cp;
        snap.probs = y;
        snapshots.push_back(std::move(snap));
    }
    return snapshots;
}

Moments moments(const JointPmf& pmf) {
    Moments m;
    m.mass = pmf.mass();
    if (!(m.mass > 0.0)) throw std::invalid_argument("moments: pmf has zero mass");
    const StateWindow& w = pmf.window;
    double en = 0.0, eo = 0.0, enn = 0.0, eoo = 0.0, eno = 0.0;
    for (int n = w.n_min; n <= w.n_max; ++n)
        for (int o = w.o_min; o <= w.o_max; ++o) {
            const double p = pmf.at(n, o);
            en += n * p;
            eo += o * p;
            enn += static_cast<double>(n) * n * p;
            eoo += static_cast<double>(o) * o * p;
            eno += static_cast<double>(n) * o * p;
        }
    en /= m.mass;
    eo /= m.mass;
    enn /= m.mass;
    eoo /= m.mass;
    eno /= m.mass;
    m.mean_n = en;
    m.mean_o = eo;
    m.var_n = enn - en * en;
    m.var_o = eoo - eo * eo;
    m.cov_no = eno - en * eo;
    return m;
}

std::vector<double> marginal_n(const JointPmf& pmf) {
    std::vector<double> out(static_cast<std::size_t>(pmf.n_full) + 1, 0.0);
    const StateWindow& w = pmf.window;
    for (int n = w.n_min; n <= w.n_max; ++n) {
        double s = 0.0;
        for (int o = w.o_min; o <= w.o_max; ++o) s += pmf.at(n, o);
        out[static_cast<std::size_t>(n)] = s;
    }
    return out;
}

std::vector<double> marginal_o(const JointPmf& pmf) {
    std::vector<double> out(static_cast<std::size_t>(pmf.o_full) + 1, 0.0);
    const StateWindow& w = pmf.window;
    for (int o = w.o_min; o <= w.o_max; ++o) {
        double s = 0.0;
        for (int n = w.n_min; n <= w.n_max; ++n) s += pmf.at(n, o);
        out[static_cast<std::size_t>(o)] = s;
    }
    return out;
}

const JointPmf& CmeTrajectory::at_time(double t) const {
    const double slack = 1e-9 * std::max(1.0, std::fabs(t));
    for (const JointPmf& p : snapshots)
        if (std::fabs(p.time - t) <= slack) return p;
    throw std::out_of_range("no trajectory snapshot at t=" + std::to_string(t));
}

CmeTrajectory run_adaptive(const ScenarioConfig& config, const MeanFieldSolution& meanfield,
                           const AdaptiveOptions& options) {
    config.validate();
    BindingRateProfile zero_profile;
    const BindingRateProfile* profile = &meanfield.kappa_profile;
    if (config.receptors == 0) {
        zero_profile = BindingRateProfile::constant(0.0, config.horizon);
        profile = &zero_profile;
    } else if (meanfield.kappa_profile.values.empty()) {
        throw std::invalid_argument("run_adaptive: meanfield.kappa_profile is empty");
    }

    const int k_count = config.interval_count();
    const double tiny = 1e-9 * config.horizon;

    CmeTrajectory traj;
    JointPmf pmf = JointPmf::point_mass(config.n0, 0, config.n0, config.receptors, 0.0);
    traj.snapshots.push_back(pmf);

    for (int k = 1; k <= k_count; ++k) {
        const double t_k = (k - 1) * config.delta_t;
        const double t_end = std::min(k * config.delta_t, config.horizon);

        const std::vector<double> pn = marginal_n(pmf);
        const StateWindow window = compute_window(k, config, meanfield, pn, config.epsilon);
        if (window.size() > options.max_window_states)
            throw SolverError("interval " + std::to_string(k) + ": window has " +
                              std::to_string(window.size()) + " states (cap " +
                              std::to_string(options.max_window_states) +
                              "); raise --max-window-states or epsilon");

        pmf = project(pmf, window);
        pmf.window.interval_index = k;

        std::vector<double> checkpoints;
        for (double s : config.sample_times)
            if (s > t_k + tiny && s < t_end - tiny) checkpoints.push_back(s);
        std::sort(checkpoints.begin(), checkpoints.end());
        checkpoints.push_back(t_end);

        std::vector<JointPmf> snaps = step_interval(pmf, checkpoints, config, *profile);
        pmf = snaps.back();
        for (JointPmf& s : snaps) traj.snapshots.push_back(std::move(s));
    }

    traj.final_full = project(pmf, full_window(config, k_count));
    return traj;
}

CmeTrajectory solve_full_dense(const ScenarioConfig& config, const BindingRateProfile& profile,
                               std::size_t state_cap) {
    config.validate();
    const std::size_t states =
        (static_cast<std::size_t>(config.n0) + 1) * (static_cast<std::size_t>(config.receptors) + 1);
    if (states > state_cap)
        throw SolverError("full state space has " + std::to_string(states) + " states (cap " +
                          std::to_string(state_cap) + "); use run_adaptive instead");

    JointPmf pmf = project(JointPmf::point_mass(config.n0, 0, config.n0, config.receptors, 0.0),
                           full_window(config, 0));

    CmeTrajectory traj;
    traj.snapshots.push_back(pmf);
    std::vector<JointPmf> snaps = step_interval(pmf, merged_record_times(config), config, profile);
    traj.final_full = snaps.back();
    for (JointPmf& s : snaps) traj.snapshots.push_back(std::move(s));
    return traj;
}

}  // namespace syncleft
