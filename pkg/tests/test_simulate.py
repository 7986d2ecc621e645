import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from icts import (HyperParams, InputError, ModelSpec, StatePrior,
                  durbin_levinson, observation_fn, simulate_dataset,
                  simulate_pacf_walk, sim_state_prior)
from icts._kernels import reflect_into_unit
from icts.simulate import COEF_WALK_PRESETS, Scenario, write_sim_dir

import oracles


# ---------------------------------------------------------------------------
# Durbin-Levinson


def test_dl_order_one_identity():
    assert durbin_levinson([0.37])[0] == pytest.approx(0.37)


def test_dl_order_two_fixture():
    phi = durbin_levinson([0.5, 0.2])
    assert phi == pytest.approx([0.4, 0.2], abs=1e-12)


def test_dl_rejects_boundary():
    with pytest.raises(InputError):
        durbin_levinson([0.5, 1.0])
    with pytest.raises(InputError):
        durbin_levinson([-1.2])


def test_dl_always_stationary():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        pacf = rng.uniform(-1, 1, size=5)
        roots = oracles.ar_companion_roots(durbin_levinson(pacf))
        assert roots.max() < 1.0 - 1e-12


@given(st.lists(st.floats(-0.95, 0.95), min_size=1, max_size=8))
def test_dl_reverse_levinson_round_trip(pacf):
    phi = durbin_levinson(pacf)
    back = oracles.reverse_levinson(phi)
    assert np.allclose(back, pacf, atol=1e-10)


# ---------------------------------------------------------------------------
# PACF random walk


def test_pacf_walk_constant_when_frozen():
    rng = np.random.default_rng(1)
    rho0 = np.array([0.3, -0.5])
    paths = simulate_pacf_walk(0.0, 2, 100, rng, rho0=rho0)
    assert np.all(paths == rho0)


def test_reflection_rule():
    assert reflect_into_unit(1.2) == pytest.approx(0.8)
    assert reflect_into_unit(-1.2) == pytest.approx(-0.8)
    assert reflect_into_unit(3.7) == pytest.approx(-0.3)  # applied repeatedly
    assert reflect_into_unit(0.9) == 0.9


def test_pacf_walk_stays_inside_unit_interval():
    rng = np.random.default_rng(2)
    paths = simulate_pacf_walk(0.05, 3, 20000, rng)
    assert np.all(paths > -1.0) and np.all(paths < 1.0)


def test_pacf_walk_increment_variance():
    rng = np.random.default_rng(3)
    W = 1e-4
    paths = simulate_pacf_walk(W, 1, 200000, rng, rho0=np.array([0.0]))
    x = paths[:, 0]
    inc = np.diff(x)
    away = (np.abs(x[:-1]) < 0.8) & (np.abs(x[1:]) < 0.8)
    assert inc[away].var() == pytest.approx(W, rel=0.05)


# ---------------------------------------------------------------------------
# Full-model simulation


def base_spec(kind="none", T=400):
    return ModelSpec(harmonics=2, ar_order=5, intervention=kind, n_obs=T)


def table_s2_phi(**kw):
    base = dict(V=0.1**2, W_mu=0.1**2, W_beta=0.0001**2, W_psi=0.1**2,
                W_X=5.0**2, W_phi=0.015**2)
    base.update(kw)
    return HyperParams(**base)


def test_degenerate_simulation_is_identically_zero():
    spec = base_spec(T=50)
    phi = HyperParams(V=0.0, W_mu=0.0, W_beta=0.0, W_psi=0.0, W_X=0.0, W_phi=0.0)
    truth = simulate_dataset(spec, phi, sim_state_prior(spec), "basic", 0,
                             W_rho=0.0, rho0=np.zeros(5),
                             theta0=np.zeros(spec.layout.dim))
    assert np.all(truth.y == 0.0)
    assert np.all(truth.states == 0.0)


def test_simulation_scenario_must_match_spec():
    spec = base_spec(kind="none")
    with pytest.raises(InputError):
        simulate_dataset(spec, table_s2_phi(), sim_state_prior(spec),
                         "mean_intervention", 0)


def test_simulation_reproducible_bitwise():
    spec = base_spec(T=300)
    prior = sim_state_prior(spec)
    t1 = simulate_dataset(spec, table_s2_phi(), prior, "basic", 123)
    t2 = simulate_dataset(spec, table_s2_phi(), prior, "basic", 123)
    assert np.array_equal(t1.y, t2.y)
    assert np.array_equal(t1.states, t2.states)
    assert np.array_equal(t1.pacf, t2.pacf)
    t3 = simulate_dataset(spec, table_s2_phi(), prior, "basic", 124)
    assert not np.array_equal(t1.y, t3.y)


def test_observations_regenerate_from_latents():
    spec = base_spec(kind="mean", T=500)
    phi = table_s2_phi(alpha=334.0, gamma=90.0, rho=0.2, varphi=0.995,
                       W_delta=0.5**2)
    truth = simulate_dataset(spec, phi, sim_state_prior(spec),
                             "mean_intervention", 7)
    for t in range(spec.n_obs):
        y_re = observation_fn(truth.states[t], truth.obs_noise[t],
                              truth.lam[t], spec)
        assert y_re == truth.y[t]


def test_basic_thirty_years_finite_and_irregular_dominated():
    T = 30 * 365
    spec = base_spec(T=T)
    truth = simulate_dataset(spec, table_s2_phi(), sim_state_prior(spec),
                             "basic", 2024)
    assert np.all(np.isfinite(truth.y))
    x = truth.component("x")
    resid = truth.y - truth.component("eta")
    assert np.var(x) / np.var(resid) > 0.5
    assert np.var(x) / np.var(truth.y) > 0.3


def test_mean_intervention_effect_confined_to_coupling_windows():
    spec = base_spec(kind="mean", T=4 * 365)
    phi = table_s2_phi(alpha=334.0, gamma=90.0, rho=0.2, varphi=0.995,
                       W_delta=0.5**2)
    truth = simulate_dataset(spec, phi, sim_state_prior(spec),
                             "mean_intervention", 99)
    signal = truth.coupling_signal()
    assert np.all(signal[truth.lam == 0.0] == 0.0)
    active = truth.lam > 0.5
    assert np.abs(signal[active]).max() > 0.0


def test_autocorr_scenario_and_presets():
    assert COEF_WALK_PRESETS["fast"] == pytest.approx(0.015**2)
    assert COEF_WALK_PRESETS["slow"] == pytest.approx(0.0015**2)
    spec = base_spec(kind="autocorrelation", T=3 * 365)
    phi = table_s2_phi(W_phi=COEF_WALK_PRESETS["slow"], alpha=334.0,
                       gamma=90.0, rho=0.2, varphi=1.0,
                       W_delta=COEF_WALK_PRESETS["slow"])
    truth = simulate_dataset(spec, phi, sim_state_prior(spec),
                             "autocorr_intervention", 5)
    assert np.all(np.isfinite(truth.y))
    # every simulated coefficient vector is stationary
    for t in range(0, spec.n_obs, 97):
        phis = np.array([truth.phi_path(p)[t] for p in range(1, 6)])
        assert oracles.ar_companion_roots(phis).max() < 1.0


def test_sim_dir_round_trip(tmp_path):
    spec = base_spec(kind="mean", T=60)
    phi = table_s2_phi(alpha=10.0, gamma=20.0, rho=0.2, varphi=0.99,
                       W_delta=0.25)
    truth = simulate_dataset(spec, phi, sim_state_prior(spec),
                             "mean_intervention", 11)
    write_sim_dir(truth, tmp_path)
    obs = (tmp_path / "observations.csv").read_text().splitlines()
    assert obs[0] == "t,value"
    assert len(obs) == 61
    lat = (tmp_path / "latents.csv").read_text().splitlines()
    assert len(lat) == 61
    meta = (tmp_path / "meta.txt").read_text()
    assert "scenario = mean_intervention" in meta
    assert "phi.W_delta = 0.25" in meta
    # values parse back exactly
    val = float(obs[1].split(",")[1])
    assert val == truth.y[0]


def test_scenario_parsing():
    assert Scenario.parse("basic") is Scenario.BASIC
    with pytest.raises(InputError):
        Scenario.parse("nope")
