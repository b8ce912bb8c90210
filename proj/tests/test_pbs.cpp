#include <cmath>
#include <numeric>

#include "doctest.h"
#include "syncleft/pbs.hpp"

using namespace syncleft;

namespace {

PbsConfig base_config() {
    PbsConfig cfg;
    cfg.scenario.n0 = 200;
    cfg.scenario.receptors = 50;
    cfg.scenario.kappa_a_agg = 1e-3;
    cfg.scenario.kappa_d = 8.5e-3;
    cfg.scenario.kappa_e = 1e-3;
    cfg.scenario.horizon = 200.0;
    cfg.scenario.sample_times = {50.0, 100.0, 200.0};
    cfg.dt_pbs = 0.5;
    cfg.trials = 32;
    cfg.seed = 99;
    return cfg;
}

}  // namespace

TEST_CASE("trial results are bit-reproducible from the seed") {
    const PbsConfig cfg = base_config();
    const TrialResult a = run_trial(cfg, derive_trial_seed(cfg.seed, 3));
    const TrialResult b = run_trial(cfg, derive_trial_seed(cfg.seed, 3));
    CHECK(a.n_counts == b.n_counts);
    CHECK(a.o_counts == b.o_counts);
    CHECK(a.boundary_contacts == b.boundary_contacts);
}

TEST_CASE("free diffusion leaves every count untouched") {
    PbsConfig cfg = base_config();
    cfg.scenario.kappa_a_agg = 0.0;
    cfg.scenario.kappa_d = 0.0;
    cfg.scenario.kappa_e = 0.0;
    cfg.trials = 4;
    const EmpiricalDistribution dist = run_ensemble(cfg);
    for (std::size_t ti = 0; ti < dist.sample_times.size(); ++ti) {
        CHECK(dist.n_hist[ti][static_cast<std::size_t>(cfg.scenario.n0)] ==
              static_cast<std::uint64_t>(cfg.trials));
        CHECK(dist.o_hist[ti][0] == static_cast<std::uint64_t>(cfg.trials));
    }
}

TEST_CASE("per-trial invariants: occupancy bounded, survivors non-increasing") {
    const PbsConfig cfg = base_config();
    for (int trial = 0; trial < 24; ++trial) {
        const TrialResult r = run_trial(cfg, derive_trial_seed(cfg.seed, trial));
        int prev_n = cfg.scenario.n0;
        for (std::size_t ti = 0; ti < r.n_counts.size(); ++ti) {
            CHECK(r.o_counts[ti] <= std::min(r.n_counts[ti], cfg.scenario.receptors));
            CHECK(r.o_counts[ti] >= 0);
            CHECK(r.n_counts[ti] <= prev_n);
            prev_n = r.n_counts[ti];
        }
    }
}

TEST_CASE("growing the ensemble keeps earlier trials intact") {
    PbsConfig small = base_config();
    small.trials = 8;
    PbsConfig large = base_config();
    large.trials = 16;

    // the ensemble is the in-order aggregation of per-trial runs
    EmpiricalDistribution dist = run_ensemble(small);
    std::vector<std::uint64_t> manual(dist.sample_times.size() *
                                      (static_cast<std::size_t>(small.scenario.n0) + 1));
    for (int i = 0; i < small.trials; ++i) {
        const TrialResult r = run_trial(small, derive_trial_seed(small.seed, i));
        for (std::size_t ti = 0; ti < dist.sample_times.size(); ++ti)
            ++manual[ti * (small.scenario.n0 + 1) + static_cast<std::size_t>(r.n_counts[ti])];
    }
    for (std::size_t ti = 0; ti < dist.sample_times.size(); ++ti)
        for (std::size_t v = 0; v <= static_cast<std::size_t>(small.scenario.n0); ++v)
            CHECK(dist.n_hist[ti][v] == manual[ti * (small.scenario.n0 + 1) + v]);

    // first half of the larger ensemble reproduces the smaller one's trials
    for (int i = 0; i < small.trials; ++i)
        CHECK(derive_trial_seed(small.seed, i) == derive_trial_seed(large.seed, i));
}

TEST_CASE("ensemble mean follows the degradation law within 3 standard errors") {
    PbsConfig cfg;
    cfg.scenario.n0 = 500;
    cfg.scenario.receptors = 0;
    cfg.scenario.kappa_a_agg = 0.0;
    cfg.scenario.kappa_d = 0.0;
    cfg.scenario.kappa_e = 1e-3;
    cfg.scenario.horizon = 1000.0;
    cfg.scenario.sample_times = {1000.0};
    cfg.dt_pbs = 1.0;
    cfg.trials = 400;
    cfg.seed = 2024;

    const EmpiricalDistribution dist = run_ensemble(cfg);
    double mean = 0.0;
    for (std::size_t v = 0; v < dist.n_hist[0].size(); ++v)
        mean += static_cast<double>(v) * dist.n_hist[0][v];
    mean /= cfg.trials;

    const double survive = std::exp(-1.0);
    const double expected = cfg.scenario.n0 * survive;
    const double se =
        std::sqrt(cfg.scenario.n0 * survive * (1.0 - survive) / cfg.trials);
    CHECK(std::fabs(mean - expected) <= 3.0 * se);
}

TEST_CASE("with all reactions off the particles spread uniformly") {
    PbsConfig cfg;
    cfg.scenario.n0 = 100000;
    cfg.scenario.receptors = 0;
    cfg.scenario.kappa_a_agg = 0.0;
    cfg.scenario.kappa_d = 0.0;
    cfg.scenario.kappa_e = 0.0;
    cfg.scenario.horizon = 3000.0;  // several mixing times a^2/D
    cfg.scenario.sample_times = {3000.0};
    cfg.dt_pbs = 2.5;
    cfg.trials = 1;
    cfg.seed = 7;
    cfg.record_final_positions = true;

    const TrialResult r = run_trial(cfg, derive_trial_seed(cfg.seed, 0));
    REQUIRE(r.final_positions.size() == 100000);

    const int bins = 10;
    std::vector<int> hist(bins, 0);
    for (double x : r.final_positions) {
        int b = static_cast<int>(x / cfg.scenario.cleft_width * bins);
        if (b == bins) b = bins - 1;
        ++hist[b];
    }
    const double expected = 100000.0 / bins;
    double chi2 = 0.0;
    for (int b = 0; b < bins; ++b) {
        const double d = hist[b] - expected;
        chi2 += d * d / expected;
    }
    CHECK(chi2 < 21.666);  // chi-square(9 dof) at 1 % significance
}

TEST_CASE("saturating scenario drives every NT onto a receptor") {
    PbsConfig cfg;
    cfg.scenario.n0 = 3;
    cfg.scenario.receptors = 5;
    cfg.scenario.kappa_a_agg = 5e-3;
    cfg.scenario.kappa_d = 0.0;
    cfg.scenario.kappa_e = 0.0;
    cfg.scenario.horizon = 4000.0;
    cfg.scenario.sample_times = {4000.0};
    cfg.dt_pbs = 1.0;
    cfg.trials = 100;
    cfg.seed = 31;

    const EmpiricalDistribution dist = run_ensemble(cfg);
    const UnivariatePmf po = empirical_pmf(dist, 4000.0, Variable::O);
    CHECK(po.at_value(3) >= 0.95);
}

TEST_CASE("empirical_pmf normalizes histograms") {
    EmpiricalDistribution dist;
    dist.sample_times = {5.0};
    dist.trials = 4;
    dist.n_hist = {{0, 0, 2, 2}};  // counts 2,2,3,3
    dist.o_hist = {{4, 0, 0, 0}};

    const UnivariatePmf pn = empirical_pmf(dist, 5.0, Variable::N);
    CHECK(pn.at_value(2) == doctest::Approx(0.5));
    CHECK(pn.at_value(3) == doctest::Approx(0.5));
    CHECK(pn.total() == doctest::Approx(1.0));

    const UnivariatePmf po = empirical_pmf(dist, 5.0, Variable::O);
    CHECK(po.at_value(0) == 1.0);

    CHECK_THROWS_AS(empirical_pmf(dist, 6.0, Variable::N), std::invalid_argument);
}

TEST_CASE("binding probability clamp raises the warning flag") {
    PbsConfig cfg = base_config();
    cfg.scenario.kappa_a_agg = 5.0;  // forces p_bind far above 1
    cfg.scenario.kappa_e = 0.0;
    cfg.scenario.kappa_d = 0.0;
    cfg.scenario.receptors = 10;
    cfg.trials = 4;
    const EmpiricalDistribution dist = run_ensemble(cfg);
    CHECK(dist.clamped_contacts > 0);
    CHECK(dist.clamp_warning());
}

TEST_CASE("config validation enforces the step-size bound") {
    PbsConfig cfg = base_config();
    cfg.dt_pbs = 10.0;  // sqrt(2 D dt) > a/10
    CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("dt_pbs"), ConfigError);
    cfg.dt_pbs = 0.5;
    cfg.trials = 0;
    CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("trials"), ConfigError);
}
