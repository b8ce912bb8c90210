"""Smoke tests for the python bindings: the main operations round-trip end to
end through the extension module."""

import math

import numpy as np
import pytest

import syncleft


def small_config():
    cfg = syncleft.ScenarioConfig()
    cfg.n0 = 50
    cfg.receptors = 20
    cfg.kappa_a_agg = 6e-4
    cfg.kappa_d = 8.5e-3
    cfg.kappa_e = 1e-3
    cfg.horizon = 200.0
    cfg.delta_t = 50.0
    cfg.nx = 51
    cfg.dt_pde = 1.0
    cfg.sample_times = [100.0, 200.0]
    return cfg


def test_preset_parameters():
    s0 = syncleft.preset("S0")
    assert s0.scenario.n0 == 1000
    assert s0.scenario.receptors == 203
    assert s0.scenario.kappa_a_agg == pytest.approx(1.52e-5)
    assert s0.scenario.kappa_a0() == pytest.approx(1.52e-5 / 203)
    with pytest.raises(ValueError):
        syncleft.preset("S9")


def test_mean_field_conservation():
    cfg = small_config()
    cfg.kappa_a_agg = 0.0
    cfg.kappa_e = 0.0
    mf = syncleft.solve_mean_field(cfg)
    n = np.asarray(mf.n_mean)
    assert n.shape[0] == mf.t_grid.shape[0]
    assert np.allclose(n, cfg.n0, rtol=0, atol=1e-9 * cfg.n0)
    assert mf.c.shape == (mf.t_grid.shape[0], cfg.nx)


def test_two_state_chain():
    cfg = syncleft.ScenarioConfig()
    cfg.n0 = 1
    cfg.receptors = 1
    cfg.kappa_a_agg = 0.1
    cfg.kappa_d = 0.0
    cfg.kappa_e = 0.0
    cfg.horizon = 10.0
    cfg.delta_t = 10.0
    cfg.ode_tol = 1e-12
    cfg.sample_times = [10.0]

    profile = syncleft.BindingRateProfile.constant(0.1, 10.0)
    traj = syncleft.solve_full_dense(cfg, profile)
    p_bound = traj.final_full.at(1, 1)
    assert p_bound == pytest.approx(1.0 - math.exp(-1.0), abs=1e-8)

    m = syncleft.moments(traj.final_full)
    assert m.mean_o == pytest.approx(1.0 - math.exp(-1.0), abs=1e-8)


def test_pure_death_matches_survival_model():
    cfg = small_config()
    cfg.kappa_a_agg = 0.0
    mf = syncleft.solve_mean_field(cfg)
    traj = syncleft.run_adaptive(cfg, mf)
    pn = syncleft.marginal_n(traj.at_time(200.0))
    model = syncleft.survival_model(mf, cfg, 200.0)
    assert syncleft.tvd(_pmf(pn), model) < 1e-5


def _pmf(probs):
    pmf = syncleft.UnivariatePmf()
    pmf.min_value = 0
    pmf.probs = list(probs)
    return pmf


def test_binomial_helpers():
    assert syncleft.binomial_pmf(1, 2, 0.5) == pytest.approx(0.5)
    assert syncleft.binomial_cdf(2, 2, 0.5) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        syncleft.binomial_pmf(3, 2, 0.5)
    dist = syncleft.binomial_distribution(10, 0.3)
    assert dist.total() == pytest.approx(1.0, abs=1e-12)
    assert dist.mean() == pytest.approx(3.0, abs=1e-9)


def test_pbs_determinism_and_pmf():
    pbs = syncleft.PbsConfig()
    pbs.scenario = small_config()
    pbs.dt_pbs = 1.0
    pbs.trials = 16
    pbs.seed = 5

    a = syncleft.run_ensemble(pbs)
    b = syncleft.run_ensemble(pbs)
    assert a.n_hist == b.n_hist
    assert a.o_hist == b.o_hist

    pmf = syncleft.empirical_pmf(a, 200.0, syncleft.Variable.N)
    assert pmf.total() == pytest.approx(1.0)


def test_windows_and_tvd():
    cfg = small_config()
    mf = syncleft.solve_mean_field(cfg)
    traj = syncleft.run_adaptive(cfg, mf)
    snap = traj.at_time(200.0)
    w = snap.window
    assert 0 <= w.n_min <= w.n_max <= cfg.n0
    assert 0 <= w.o_min <= w.o_max <= cfg.receptors
    assert snap.probs.shape == (w.n_max - w.n_min + 1, w.o_max - w.o_min + 1)
    assert snap.mass() == pytest.approx(1.0, abs=1e-4)

    point = _pmf([1.0])
    coin = _pmf([0.5, 0.5])
    assert syncleft.tvd(point, point) == 0.0
    assert syncleft.tvd(point, coin) == pytest.approx(0.5)


def test_run_scenario_writes_artifacts(tmp_path):
    loaded = syncleft.LoadedConfig()
    loaded.scenario = small_config()
    loaded.dt_pbs = 1.0
    loaded.trials = 32
    loaded.seed = 11

    report = syncleft.run_scenario(loaded, tmp_path)
    assert (tmp_path / "report.json").exists()
    assert (tmp_path / "meanfield.csv").exists()
    assert (tmp_path / "cme_marginals.csv").exists()
    assert (tmp_path / "pbs_hist.csv").exists()
    assert 0.0 <= report.mass_deficit_final < 1e-3
    assert len(report.config_hash) == 16
    models = {entry.model for entry in report.moment_table}
    assert models == {"cme", "binomial", "pbs"}
