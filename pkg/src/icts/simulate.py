"""Synthetic-data generation with stationarity-preserving TVAR paths.

Simulated coefficient paths follow reflected random walks on the partial
autocorrelations, mapped to AR coefficients with the Durbin-Levinson
recursion; every simulated coefficient vector is therefore stationary even
though the fitted model places the random walk on the coefficients
directly.  That asymmetry is deliberate.
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _kernels as _k
from .errors import InputError
from .model import (HyperParams, Intervention, ModelSpec, StatePrior, _trig,
                    irregular_variance_path, profile_for)


class Scenario(enum.Enum):
    BASIC = "basic"
    MEAN_INTERVENTION = "mean_intervention"
    AUTOCORR_INTERVENTION = "autocorr_intervention"

    @classmethod
    def parse(cls, value) -> "Scenario":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        for sc in cls:
            if sc.value == key:
                return sc
        raise InputError(f"unknown scenario: {value!r}")


_SCENARIO_KIND = {Scenario.BASIC: Intervention.NONE,
                  Scenario.MEAN_INTERVENTION: Intervention.MEAN,
                  Scenario.AUTOCORR_INTERVENTION: Intervention.AUTOCORRELATION}

# Coefficient-walk variance presets: quickly vs slowly evolving structure.
COEF_WALK_PRESETS = {"fast": 0.015**2, "slow": 0.0015**2}


def durbin_levinson(pacf) -> np.ndarray:
    """AR coefficients whose partial autocorrelations equal pacf.

    Every |pacf_p| must be < 1; the returned polynomial is stationary.
    """
    pacf = np.ascontiguousarray(pacf, dtype=float)
    if pacf.ndim != 1 or pacf.size < 1:
        raise InputError("pacf must be a non-empty 1-D vector")
    if np.any(np.abs(pacf) >= 1.0):
        raise InputError("partial autocorrelations must lie strictly inside (-1, 1)")
    return _k.durbin_levinson(pacf)


def simulate_pacf_walk(W_rho: float, P: int, T: int, rng: np.random.Generator,
                       rho0=None) -> np.ndarray:
    """Reflected Gaussian random-walk paths on (-1, 1), shape (T, P).

    rho0 gives the starting values; by default they are drawn uniformly from
    (-0.5, 0.5).
    """
    if W_rho < 0:
        raise InputError("W_rho must be nonnegative")
    if rho0 is None:
        rho0 = rng.uniform(-0.5, 0.5, size=P)
    rho0 = np.ascontiguousarray(rho0, dtype=float)
    if rho0.shape != (P,):
        raise InputError(f"rho0 must have shape ({P},)")
    if np.any(np.abs(rho0) >= 1.0):
        raise InputError("rho0 must lie strictly inside (-1, 1)")
    xi = rng.standard_normal((T, P))
    return _k.pacf_walk(rho0, np.sqrt(W_rho), xi)


@dataclass(frozen=True)
class SimTruth:
    """A simulated dataset plus everything needed to reproduce it.

    states holds the full latent trajectory (T, dim) in the model layout;
    pacf the coefficient-walk paths; obs_noise the observation errors, so
    y can be regenerated exactly from the latents.
    """

    y: np.ndarray
    states: np.ndarray
    pacf: np.ndarray
    obs_noise: np.ndarray
    lam: np.ndarray
    spec: ModelSpec
    phi: HyperParams
    scenario: Scenario
    seed: int

    def component(self, name: str) -> np.ndarray:
        lay = self.spec.layout
        if name == "mu":
            return self.states[:, lay.mu]
        if name == "beta":
            return self.states[:, lay.beta]
        if name == "x":
            return self.states[:, lay.lag(0)]
        if name == "eta":
            psi = sum(self.states[:, lay.psi(k)] for k in range(1, lay.harmonics + 1))
            return self.states[:, lay.mu] + psi
        raise InputError(f"unknown component {name!r}")

    def phi_path(self, p: int) -> np.ndarray:
        return self.states[:, self.spec.layout.phi(p)]

    def coupling_signal(self) -> np.ndarray:
        """lambda_t times the effect term that enters the observation."""
        lay = self.spec.layout
        if lay.kind is Intervention.NONE:
            return np.zeros(self.spec.n_obs)
        if lay.kind is Intervention.MEAN:
            return self.lam * self.states[:, lay.delta()]
        out = np.zeros(self.spec.n_obs)
        for p in range(1, lay.ar_order + 1):
            out += self.states[:, lay.delta(p)] * self.states[:, lay.lag(p)]
        return self.lam * out


def simulate_dataset(spec: ModelSpec, phi: HyperParams, state_prior: StatePrior,
                     scenario, rng_or_seed, W_rho: float | None = None,
                     rho0=None, theta0=None) -> SimTruth:
    """Draw a full synthetic dataset under the given scenario.

    The initial state comes from state_prior except the coefficient block,
    which is driven by the PACF walk (variance W_rho, defaulting to
    phi.W_phi); pass theta0 to start from an exact state instead of a prior
    draw.  Accepts a seed or a Generator; with a seed the output is bitwise
    reproducible.
    """
    scenario = Scenario.parse(scenario)
    if _SCENARIO_KIND[scenario] is not spec.intervention:
        raise InputError(f"scenario {scenario.value} requires intervention="
                         f"{_SCENARIO_KIND[scenario].value}")
    if isinstance(rng_or_seed, np.random.Generator):
        rng, seed = rng_or_seed, -1
    else:
        seed = int(rng_or_seed)
        rng = np.random.default_rng(seed)
    lay = spec.layout
    if state_prior.dim != lay.dim:
        raise InputError("state prior does not match the model layout")
    T = spec.n_obs
    if theta0 is None:
        theta0 = state_prior.mean + np.sqrt(state_prior.var) * rng.standard_normal(lay.dim)
    else:
        theta0 = np.ascontiguousarray(theta0, dtype=float)
        if theta0.shape != (lay.dim,):
            raise InputError("theta0 does not match the model layout")
    rho = simulate_pacf_walk(phi.W_phi if W_rho is None else W_rho,
                             lay.ar_order, T, rng, rho0=rho0)
    lam = profile_for(phi, spec)
    wxt = irregular_variance_path(phi, spec)
    wbase = phi.noise_variances(lay)
    cosw, sinw = _trig(spec)
    xi_w = rng.standard_normal((T, lay.noise_dim))
    xi_v = rng.standard_normal(T)
    states, y, v = _k.simulate_loop(theta0, rho, xi_w, xi_v, lam, wxt, wbase,
                                    phi.V, lay.harmonics, lay.ar_order,
                                    lay.n_lags, lay.n_delta, lay.kind_code,
                                    phi.varphi, cosw, sinw)
    return SimTruth(y, states, rho, v, lam, spec, phi, scenario, seed)


def write_sim_dir(truth: SimTruth, outdir) -> None:
    """Persist a SimTruth as observations.csv, latents.csv and meta.txt."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    with open(outdir / "observations.csv", "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["t", "value"])
        for t, v in enumerate(truth.y, start=1):
            wr.writerow([t, repr(float(v))])
    names = truth.spec.layout.names()
    with open(outdir / "latents.csv", "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["t"] + names + ["lam", "obs_noise"]
                    + [f"pacf{p}" for p in range(1, truth.spec.layout.ar_order + 1)])
        for t in range(truth.spec.n_obs):
            row = [t + 1] + [repr(float(v)) for v in truth.states[t]]
            row += [repr(float(truth.lam[t])), repr(float(truth.obs_noise[t]))]
            row += [repr(float(v)) for v in truth.pacf[t]]
            wr.writerow(row)
    meta = {
        "scenario": truth.scenario.value,
        "seed": truth.seed,
        "harmonics": truth.spec.harmonics,
        "ar_order": truth.spec.ar_order,
        "intervention": truth.spec.intervention.value,
        "n_obs": truth.spec.n_obs,
        "period_length": repr(truth.spec.period_length),
        "phase_offset": repr(truth.spec.phase_offset),
    }
    for name in ("V", "W_mu", "W_beta", "W_psi", "W_X", "a", "b", "W_phi",
                 "alpha", "gamma", "rho", "varphi", "W_delta"):
        meta[f"phi.{name}"] = repr(float(getattr(truth.phi, name)))
    with open(outdir / "meta.txt", "w") as fh:
        for key in meta:
            fh.write(f"{key} = {meta[key]}\n")
