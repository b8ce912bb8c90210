#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "syncleft/cme.hpp"
#include "syncleft/reference_models.hpp"
#include "test_support.hpp"

using namespace syncleft;
using test_support::synthetic_mean_field;

namespace {

ScenarioConfig tiny_config(int n0, int receptors) {
    ScenarioConfig cfg;
    cfg.n0 = n0;
    cfg.receptors = receptors;
    cfg.kappa_a_agg = 0.0;  // CME paths take rates from the profile
    cfg.kappa_d = 0.0;
    cfg.kappa_e = 0.0;
    cfg.horizon = 10.0;
    cfg.delta_t = 10.0;
    cfg.sample_times = {10.0};
    cfg.ode_tol = 1e-12;
    return cfg;
}

}  // namespace

TEST_CASE("q_block reproduces the level transition rates") {
    ScenarioConfig cfg = tiny_config(2, 1);
    cfg.kappa_d = 1.0;
    cfg.kappa_e = 0.5;
    const auto profile = BindingRateProfile::constant(0.1, cfg.horizon);

    const TridiagonalRates rates = q_block(2, 0.0, cfg, profile);
    CHECK(rates.diag[0] == doctest::Approx(-1.2).epsilon(1e-14));
    CHECK(rates.bind[1] == doctest::Approx(0.2).epsilon(1e-14));
    CHECK(rates.unbind[0] == doctest::Approx(1.0).epsilon(1e-14));

    const TridiagonalRates empty = q_block(0, 0.0, cfg, profile);
    CHECK(empty.diag[0] == 0.0);
    CHECK(empty.bind[1] == 0.0);

    // receptor saturation: no binding outflow from o = C
    ScenarioConfig sat = tiny_config(3, 2);
    sat.kappa_d = 0.7;
    sat.kappa_e = 0.3;
    const TridiagonalRates sat_rates = q_block(3, 0.0, sat, profile);
    CHECK(sat_rates.diag[2] == doctest::Approx(-(0.7 * 2 + 0.3 * 1)).epsilon(1e-14));
}

TEST_CASE("d_block carries the degradation inflow rates") {
    ScenarioConfig cfg = tiny_config(5, 4);
    cfg.kappa_e = 0.5;
    const std::vector<double> rates = d_block(2, cfg);
    CHECK(rates[0] == doctest::Approx(1.5).epsilon(1e-14));  // ke * (n+1-o)
    CHECK(rates[3] == 0.0);                                  // o = n+1: source has no solute
    CHECK(rates[4] == 0.0);                                  // o > n+1: infeasible

    cfg.kappa_e = 0.0;
    for (double r : d_block(2, cfg)) CHECK(r == 0.0);
}

TEST_CASE("apply_generator conserves probability on the full space") {
    ScenarioConfig cfg = tiny_config(12, 7);
    cfg.kappa_d = 0.3;
    cfg.kappa_e = 0.2;
    const auto profile = BindingRateProfile::constant(0.05, cfg.horizon);
    std::mt19937_64 rng(42);
    const StateWindow full{0, cfg.n0, 0, cfg.receptors, 0};
    for (int rep = 0; rep < 20; ++rep) {
        const JointPmf pmf = test_support::random_joint_pmf(rng, full, cfg.n0, cfg.receptors);
        std::vector<double> out(pmf.probs.size());
        apply_generator(pmf, 3.0, cfg, profile, out);
        double sum = 0.0, magnitude = 0.0;
        for (double v : out) {
            sum += v;
            magnitude += std::fabs(v);
        }
        CHECK(std::fabs(sum) <= 1e-12 * std::max(1.0, magnitude));
    }
}

TEST_CASE("apply_generator agrees with the assembled q/d blocks") {
    ScenarioConfig cfg = tiny_config(9, 5);
    cfg.kappa_d = 0.4;
    cfg.kappa_e = 0.15;
    const auto profile = BindingRateProfile::constant(0.02, cfg.horizon);
    const double t = 1.7;

    std::mt19937_64 rng(1234);
    const StateWindow window{2, 7, 1, 4, 0};
    const JointPmf pmf = test_support::random_joint_pmf(rng, window, cfg.n0, cfg.receptors);
    std::vector<double> fast(pmf.probs.size());
    apply_generator(pmf, t, cfg, profile, fast);

    for (int n = window.n_min; n <= window.n_max; ++n) {
        const TridiagonalRates q = q_block(n, t, cfg, profile);
        const std::vector<double> d = d_block(n, cfg);
        for (int o = window.o_min; o <= window.o_max; ++o) {
            double expected = 0.0;
            if (o <= n) {
                expected += q.diag[o] * pmf.at(n, o);
                if (o - 1 >= window.o_min) expected += q.bind[o] * pmf.at(n, o - 1);
                if (o + 1 <= window.o_max) expected += q.unbind[o] * pmf.at(n, o + 1);
                if (n + 1 <= window.n_max) expected += d[o] * pmf.at(n + 1, o);
            }
            const double got =
                fast[static_cast<std::size_t>(n - window.n_min) * window.width() +
                     (o - window.o_min)];
            CHECK(got == doctest::Approx(expected).epsilon(1e-13));
        }
    }
}

TEST_CASE("point mass with degradation only feeds the level below") {
    ScenarioConfig cfg = tiny_config(6, 3);
    cfg.kappa_e = 0.25;
    cfg.kappa_d = 0.9;
    const auto profile = BindingRateProfile::constant(0.0, cfg.horizon);
    JointPmf pmf = project(JointPmf::point_mass(6, 0, 6, 3), StateWindow{0, 6, 0, 3, 0});
    std::vector<double> out(pmf.probs.size());
    apply_generator(pmf, 0.0, cfg, profile, out);
    for (int n = 0; n <= 6; ++n)
        for (int o = 0; o <= 3; ++o) {
            const double v = out[static_cast<std::size_t>(n) * 4 + o];
            if (n == 6 && o == 0)
                CHECK(v == doctest::Approx(-0.25 * 6).epsilon(1e-14));
            else if (n == 5 && o == 0)
                CHECK(v == doctest::Approx(0.25 * 6).epsilon(1e-14));
            else
                CHECK(v == 0.0);
        }
}

TEST_CASE("two-state chain: P(O=1) = 1 - exp(-kappa_a t)") {
    ScenarioConfig cfg = tiny_config(1, 1);
    const auto profile = BindingRateProfile::constant(0.1, cfg.horizon);
    const JointPmf start =
        project(JointPmf::point_mass(1, 0, 1, 1), StateWindow{0, 1, 0, 1, 1});
    const std::vector<JointPmf> snaps = step_interval(start, {10.0}, cfg, profile);
    const double expected = 1.0 - std::exp(-1.0);
    CHECK(snaps.back().at(1, 1) == doctest::Approx(expected).epsilon(1e-8));
    CHECK(snaps.back().time == 10.0);
}

TEST_CASE("zero generator leaves the pmf untouched") {
    ScenarioConfig cfg = tiny_config(4, 2);
    const auto profile = BindingRateProfile::constant(0.0, cfg.horizon);
    std::mt19937_64 rng(5);
    const JointPmf pmf =
        test_support::random_joint_pmf(rng, StateWindow{0, 4, 0, 2, 1}, 4, 2);
    const std::vector<JointPmf> snaps = step_interval(pmf, {10.0}, cfg, profile);
    for (std::size_t i = 0; i < pmf.probs.size(); ++i)
        CHECK(snaps.back().probs[i] == doctest::Approx(pmf.probs[i]).epsilon(1e-14));
}

TEST_CASE("pure death marginal is binomial") {
    ScenarioConfig cfg;
    cfg.n0 = 3;
    cfg.receptors = 0;
    cfg.kappa_a_agg = 0.0;
    cfg.kappa_e = 0.1;
    cfg.kappa_d = 0.0;
    cfg.horizon = 10.0;
    cfg.delta_t = 5.0;
    cfg.epsilon = 1e-12;
    cfg.ode_tol = 1e-12;
    cfg.sample_times = {10.0};
    const MeanFieldSolution mf = synthetic_mean_field(cfg, 0.0);
    const CmeTrajectory traj = run_adaptive(cfg, mf);
    const std::vector<double> pn = marginal_n(traj.final_full);
    const std::vector<double> expected = test_support::pure_death_marginal(3, 0.1, 10.0);
    CHECK(test_support::l1_distance(pn, expected) <= 1e-9);
}

TEST_CASE("window bounds: deterministic survival pins the N range") {
    ScenarioConfig cfg = tiny_config(10, 4);
    cfg.delta_t = 10.0;
    const MeanFieldSolution mf = synthetic_mean_field(cfg, 0.0);  // ke = 0: n(t) = 10
    std::vector<double> pn(11, 0.0);
    pn[10] = 1.0;
    const StateWindow w = compute_window(1, cfg, mf, pn, 1e-6);
    CHECK(w.n_min == 9);
    CHECK(w.n_max == 10);
    // o(t) = 0 throughout: lower empty-set fallback, upper bound one state up
    CHECK(w.o_min == 0);
    CHECK(w.o_max == 1);
}

TEST_CASE("window bounds: binomial lower tail against the summation oracle") {
    ScenarioConfig cfg = tiny_config(100, 4);
    cfg.kappa_e = 1.0;  // synthetic decay; only n(t_end) matters below
    const double eps = 1e-6;

    // library window for an interval whose end sits at n(t)/N0 = 0.5
    MeanFieldSolution mf;
    mf.t_grid = {0.0, 10.0};
    mf.n_mean = {50.0, 50.0};
    mf.o_mean = {0.0, 0.0};
    mf.kappa_profile = BindingRateProfile::constant(0.0, 10.0);
    std::vector<double> pn(101, 0.0);
    pn[50] = 1.0;
    const StateWindow w = compute_window(1, cfg, mf, pn, eps);

    int expected = 0;
    for (int n = 0; n <= 100; ++n)
        if (test_support::binomial_cdf_oracle(n, 100, 0.5) < eps) expected = n;
    CHECK(w.n_min == expected);
    CHECK(w.n_min == 26);  // frozen from the oracle: largest n with CDF < 1e-6
}

TEST_CASE("projection copies overlap and drops the rest") {
    std::mt19937_64 rng(9);
    const StateWindow src{2, 6, 0, 3, 1};
    const JointPmf pmf = test_support::random_joint_pmf(rng, src, 8, 4);

    const JointPmf same = project(pmf, src);
    for (std::size_t i = 0; i < pmf.probs.size(); ++i) CHECK(same.probs[i] == pmf.probs[i]);

    const StateWindow shifted{4, 8, 1, 4, 2};
    const JointPmf moved = project(pmf, shifted);
    double outside = 0.0;
    for (int n = src.n_min; n <= src.n_max; ++n)
        for (int o = src.o_min; o <= src.o_max; ++o)
            if (!shifted.contains(n, o)) outside += pmf.at(n, o);
    CHECK(moved.mass() == doctest::Approx(pmf.mass() - outside).epsilon(1e-12));

    const JointPmf disjoint = project(pmf, StateWindow{7, 8, 4, 4, 3});
    CHECK(disjoint.mass() == 0.0);
}

TEST_CASE("marginals zero-pad and preserve mass") {
    std::mt19937_64 rng(21);
    const StateWindow w{3, 9, 1, 5, 0};
    const JointPmf pmf = test_support::random_joint_pmf(rng, w, 12, 6);
    const std::vector<double> pn = marginal_n(pmf);
    const std::vector<double> po = marginal_o(pmf);
    CHECK(pn.size() == 13);
    CHECK(po.size() == 7);
    CHECK(std::accumulate(pn.begin(), pn.end(), 0.0) ==
          doctest::Approx(pmf.mass()).epsilon(1e-12));
    CHECK(std::accumulate(po.begin(), po.end(), 0.0) ==
          doctest::Approx(pmf.mass()).epsilon(1e-12));
    CHECK(pn[0] == 0.0);
    CHECK(po[6] == 0.0);

    JointPmf joint;
    joint.window = StateWindow{1, 1, 0, 1, 0};
    joint.n_full = 2;
    joint.o_full = 1;
    joint.probs = {0.5, 0.5};
    CHECK(marginal_n(joint)[1] == doctest::Approx(1.0).epsilon(1e-14));

    const JointPmf point = JointPmf::point_mass(5, 0, 5, 3);
    CHECK(marginal_o(point)[0] == 1.0);
}

TEST_CASE("moments of point masses and product laws") {
    const JointPmf point = JointPmf::point_mass(5, 2, 8, 4);
    const Moments mp = moments(point);
    CHECK(mp.mean_n == 5.0);
    CHECK(mp.mean_o == 2.0);
    CHECK(mp.var_n == 0.0);
    CHECK(mp.var_o == 0.0);

    // product of two binomials: independent, zero covariance
    const UnivariatePmf bn = binomial_distribution(6, 0.4);
    const UnivariatePmf bo = binomial_distribution(4, 0.7);
    JointPmf prod;
    prod.window = StateWindow{0, 6, 0, 4, 0};
    prod.n_full = 6;
    prod.o_full = 4;
    prod.probs.resize(prod.window.size());
    for (int n = 0; n <= 6; ++n)
        for (int o = 0; o <= 4; ++o) prod.at(n, o) = bn.probs[n] * bo.probs[o];
    CHECK(std::fabs(moments(prod).cov_no) <= 1e-12);

    JointPmf empty = JointPmf::point_mass(1, 0, 1, 1);
    empty.probs[0] = 0.0;
    CHECK_THROWS_AS(moments(empty), std::invalid_argument);
}

TEST_CASE("dense solver refuses oversized state spaces") {
    ScenarioConfig cfg = tiny_config(300, 200);
    const auto profile = BindingRateProfile::constant(0.0, cfg.horizon);
    CHECK_THROWS_WITH_AS(solve_full_dense(cfg, profile), doctest::Contains("run_adaptive"),
                         SolverError);
}

TEST_CASE("adaptive matches dense on a small constant-rate instance") {
    ScenarioConfig cfg;
    cfg.n0 = 8;
    cfg.receptors = 4;
    cfg.kappa_d = 2e-3;
    cfg.kappa_e = 1e-3;
    cfg.horizon = 200.0;
    cfg.delta_t = 50.0;
    cfg.epsilon = 1e-8;
    cfg.ode_tol = 1e-12;
    cfg.sample_times = {75.0, 200.0};
    const double kappa_const = 2e-3;
    cfg.kappa_a_agg = kappa_const * cfg.receptors;  // keeps the mean ODE consistent

    const MeanFieldSolution mf = synthetic_mean_field(cfg, kappa_const);
    const auto profile = BindingRateProfile::constant(kappa_const, cfg.horizon);
    const CmeTrajectory adaptive = run_adaptive(cfg, mf);
    const CmeTrajectory dense = solve_full_dense(cfg, profile);

    // full-space conservation of the dense route
    CHECK(std::fabs(1.0 - dense.final_full.mass()) <= 1e-9);
    CHECK(dense.snapshots.front().at(8, 0) == 1.0);

    for (const JointPmf& snap : adaptive.snapshots) {
        const JointPmf reference = project(dense.at_time(snap.time), snap.window);
        double l1 = 0.0;
        for (std::size_t i = 0; i < snap.probs.size(); ++i)
            l1 += std::fabs(snap.probs[i] - reference.probs[i]);
        CHECK(l1 < 4 * cfg.epsilon);
    }

    // level monotonicity: upper tails of P_N never grow
    std::vector<double> prev;
    for (const JointPmf& snap : adaptive.snapshots) {
        const std::vector<double> pn = marginal_n(snap);
        if (!prev.empty()) {
            double tail_now = 0.0, tail_prev = 0.0;
            for (int n0 = cfg.n0; n0 >= 0; --n0) {
                tail_now += pn[n0];
                tail_prev += prev[n0];
                CHECK(tail_now <= tail_prev + 1e-9);
            }
        }
        prev = pn;
    }

    // feasibility: o > n states carry exactly zero; everything nonnegative
    for (const JointPmf& snap : adaptive.snapshots)
        for (int n = snap.window.n_min; n <= snap.window.n_max; ++n)
            for (int o = snap.window.o_min; o <= snap.window.o_max; ++o) {
                if (o > n) CHECK(snap.at(n, o) == 0.0);
                CHECK(snap.at(n, o) >= 0.0);
            }
}

TEST_CASE("a horizon that delta_t does not divide gets a short last interval") {
    ScenarioConfig cfg;
    cfg.n0 = 5;
    cfg.receptors = 2;
    cfg.kappa_a_agg = 2e-3;
    cfg.kappa_d = 1e-3;
    cfg.kappa_e = 1e-3;
    cfg.horizon = 120.0;
    cfg.delta_t = 50.0;
    cfg.sample_times = {60.0, 120.0};
    CHECK(cfg.interval_count() == 3);

    const MeanFieldSolution mf = synthetic_mean_field(cfg, 1e-3);
    const CmeTrajectory traj = run_adaptive(cfg, mf);
    CHECK(traj.final_full.time == doctest::Approx(120.0));
    CHECK(traj.at_time(60.0).time == doctest::Approx(60.0));
    CHECK(traj.final_full.mass() == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("aggressive truncation stays within the mass-deficit budget") {
    ScenarioConfig cfg;
    cfg.n0 = 30;
    cfg.receptors = 10;
    cfg.kappa_d = 5e-3;
    cfg.kappa_e = 2e-3;
    cfg.horizon = 500.0;
    cfg.delta_t = 50.0;
    cfg.epsilon = 1e-3;
    cfg.sample_times = {500.0};
    const double kappa_const = 1e-3;
    cfg.kappa_a_agg = kappa_const * cfg.receptors;

    const MeanFieldSolution mf = synthetic_mean_field(cfg, kappa_const);
    const CmeTrajectory traj = run_adaptive(cfg, mf);
    const double deficit = 1.0 - traj.final_full.mass();
    CHECK(deficit >= 0.0);
    CHECK(deficit <= 4.0 * cfg.epsilon * cfg.interval_count());

    // the running deficit respects the per-interval budget as well
    for (const JointPmf& snap : traj.snapshots)
        CHECK(1.0 - snap.mass() <= 4.0 * cfg.epsilon * snap.window.interval_index + 1e-12);
}

TEST_CASE("window cap aborts with guidance") {
    ScenarioConfig cfg = tiny_config(50, 20);
    const MeanFieldSolution mf = synthetic_mean_field(cfg, 1e-3);
    AdaptiveOptions opts;
    opts.max_window_states = 4;
    CHECK_THROWS_WITH_AS(run_adaptive(cfg, mf, opts), doctest::Contains("max-window-states"),
                         SolverError);
}
