"""Linearised forward filtering, backward sampling and forecasting.

The filter re-linearises the dynamics at the filtered mean every step and
accumulates the log marginal likelihood from the one-step forecast
densities.  Missing observations (NaN) trigger a prediction-only step and
contribute nothing to the likelihood.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from . import _kernels as _k
from .errors import InputError, NumericalError
from .model import HyperParams, ModelSpec, StatePrior, _trig, irregular_variance_path, profile_for

# Eigenvalue floor for predicted-covariance inversion, as a fraction of
# trace/dim; the trend and coefficient variances make R nearly singular by
# design.
PINV_FLOOR = 1e-12


@dataclass(frozen=True)
class GaussianState:
    """Full-covariance Gaussian over the state; usable wherever a prior is
    expected, e.g. to restart filtering from a filtered (m_t, C_t)."""

    mean: np.ndarray
    covariance: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mean", np.asarray(self.mean, float))
        object.__setattr__(self, "covariance", np.asarray(self.covariance, float))
        if self.covariance.shape != (self.mean.size, self.mean.size):
            raise InputError("covariance shape does not match mean")

    @property
    def dim(self) -> int:
        return self.mean.size

    def cov(self) -> np.ndarray:
        return self.covariance


@dataclass(frozen=True)
class FilterResult:
    """Per-step Gaussian summaries from one forward pass.

    Arrays are indexed 0..T-1 for steps t = 1..T: predicted mean/cov (a, R),
    one-step forecast mean/variance (f, Q), filtered mean/cov (m, C),
    innovation e (NaN where y was missing), gain A, and the evolution
    Jacobian G used at each step.  log_marginal_likelihood sums the forecast
    log densities over observed steps.
    """

    predicted_mean: np.ndarray
    predicted_cov: np.ndarray
    forecast_mean: np.ndarray
    forecast_var: np.ndarray
    filtered_mean: np.ndarray
    filtered_cov: np.ndarray
    innovation: np.ndarray
    gain: np.ndarray
    evolution_jacobian: np.ndarray
    log_marginal_likelihood: float
    observed: np.ndarray

    @property
    def n_steps(self) -> int:
        return self.forecast_mean.size

    @property
    def dim(self) -> int:
        return self.filtered_mean.shape[1]


def _prepare_series(y, spec: ModelSpec):
    y = np.asarray(y, dtype=float)
    if y.ndim != 1:
        raise InputError("y must be a 1-D series")
    if y.size != spec.n_obs:
        raise InputError(f"series length {y.size} does not match spec.n_obs={spec.n_obs}")
    observed = np.isfinite(y)
    bad = np.where(np.isinf(y))[0]
    if bad.size:
        raise InputError(f"non-finite value at index {bad[0]} (use NaN for missing)")
    yk = np.where(observed, y, 0.0)
    return yk, observed


def forward_filter(y, phi: HyperParams, spec: ModelSpec, prior: StatePrior) -> FilterResult:
    """Run the linearised filter over y (NaN entries are treated as missing)."""
    yk, observed = _prepare_series(y, spec)
    lay = spec.layout
    if prior.dim != lay.dim:
        raise InputError(f"prior dimension {prior.dim} does not match state dim {lay.dim}")
    lam = profile_for(phi, spec)
    wxt = irregular_variance_path(phi, spec)
    wbase = phi.noise_variances(lay)
    cosw, sinw = _trig(spec)
    out = _k.filter_loop(yk, observed, prior.mean.copy(), prior.cov(), lam, wxt,
                         wbase, phi.V, lay.harmonics, lay.ar_order, lay.n_lags,
                         lay.n_delta, lay.kind_code, phi.varphi, cosw, sinw)
    a, R, f, Q, m, C, e, A, G, loglik, err_t = out
    if err_t >= 0:
        raise NumericalError(
            f"forecast variance became non-positive or non-finite at t={err_t + 1}",
            t=err_t + 1, phi=phi)
    return FilterResult(a, R, f, Q, m, C, e, A, G, loglik, observed)


def log_marginal_likelihood(y, phi: HyperParams, spec: ModelSpec, prior: StatePrior) -> float:
    """Log p(y | phi) from the one-step forecast decomposition."""
    return forward_filter(y, phi, spec, prior).log_marginal_likelihood


def backward_sample(fr: FilterResult, phi: HyperParams, spec: ModelSpec,
                    rng: np.random.Generator, n_samples: int = 1) -> np.ndarray:
    """Draw joint state trajectories theta_{1:T} given the filter output.

    Returns an array of shape (T, dim) for n_samples == 1, else
    (n_samples, T, dim).  Deterministic given the generator state.
    """
    if n_samples < 1:
        raise InputError("n_samples must be >= 1")
    T, n = fr.filtered_mean.shape
    B, S = _k.backward_factors(fr.filtered_mean, fr.filtered_cov,
                               fr.predicted_mean, fr.predicted_cov,
                               fr.evolution_jacobian, PINV_FLOOR)
    if not (np.all(np.isfinite(B)) and np.all(np.isfinite(S))):
        t_bad = int(np.where(~np.all(np.isfinite(B), axis=(1, 2)))[0][0]) + 1
        raise NumericalError("backward gain is non-finite", t=t_bad, phi=phi)
    out = np.empty((n_samples, T, n))
    for s in range(n_samples):
        xi = rng.standard_normal((T, n))
        _k.backward_draw(B, S, fr.filtered_mean, fr.predicted_mean, xi, out[s])
    return out[0] if n_samples == 1 else out


@dataclass(frozen=True)
class ForecastResult:
    """Sampled forecast paths: latent states, observations, and the
    per-horizon sample mean of the observations."""

    states: np.ndarray        # (n_samples, horizon, dim)
    observations: np.ndarray  # (n_samples, horizon)
    mean: np.ndarray          # (horizon,)


def forecast(m_t, C_t, phi: HyperParams, spec: ModelSpec, horizon: int,
             n_samples: int, rng: np.random.Generator,
             t_index: int | None = None) -> ForecastResult:
    """Sample the k-step-ahead predictive distribution from N(m_t, C_t).

    t_index is the (1-based) time of the filtered moments; it anchors the
    seasonal phase of the forecasted steps and defaults to the end of the
    series.
    """
    if horizon < 1:
        raise InputError("horizon must be >= 1")
    if n_samples < 1:
        raise InputError("n_samples must be >= 1")
    lay = spec.layout
    m_t = np.ascontiguousarray(m_t, dtype=float)
    C_t = np.ascontiguousarray(C_t, dtype=float)
    if m_t.shape != (lay.dim,) or C_t.shape != (lay.dim, lay.dim):
        raise InputError("m_t / C_t shapes do not match the state dimension")
    t0 = spec.n_obs if t_index is None else int(t_index)
    lam_fut = np.ascontiguousarray(profile_for(phi, spec, T=t0 + horizon)[t0:])
    wxt_fut = irregular_variance_path(phi, spec, T=horizon, start=t0 + 1)
    wbase = phi.noise_variances(lay)
    cosw, sinw = _trig(spec)
    S0 = _k._psd_sqrt(np.ascontiguousarray(0.5 * (C_t + C_t.T)))
    starts = m_t[None, :] + rng.standard_normal((n_samples, lay.dim)) @ S0.T
    xi_w = rng.standard_normal((n_samples, horizon, lay.noise_dim))
    xi_v = rng.standard_normal((n_samples, horizon))
    states, ys = _k.forecast_paths(np.ascontiguousarray(starts), xi_w, xi_v,
                                   lam_fut, wxt_fut, wbase, phi.V,
                                   lay.harmonics, lay.ar_order, lay.n_lags,
                                   lay.n_delta, lay.kind_code, phi.varphi,
                                   cosw, sinw)
    if not np.all(np.isfinite(ys)):
        raise NumericalError("forecast produced non-finite values", phi=phi)
    return ForecastResult(states, ys, ys.mean(axis=0))


def write_filter_csv(fr: FilterResult, spec: ModelSpec, path) -> None:
    """Debug dump: t, forecast mean/variance, filtered mean and variances."""
    names = spec.layout.names()
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["t", "f", "Q"] + [f"m_{n}" for n in names] + [f"C_{n}" for n in names])
        for t in range(fr.n_steps):
            row = [t + 1, repr(float(fr.forecast_mean[t])), repr(float(fr.forecast_var[t]))]
            row += [repr(float(v)) for v in fr.filtered_mean[t]]
            row += [repr(float(fr.filtered_cov[t, i, i])) for i in range(fr.dim)]
            wr.writerow(row)
