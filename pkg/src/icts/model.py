"""Model structure: specification, state layout, coupling profile, dynamics.

The observed daily series is modelled as

    Y_t = mu_t + sum_k psi_{k,t} + X_t [+ coupling term] + v_t

where mu_t is a local level with trend beta_t, the psi pairs rotate at
harmonics of the seasonal frequency, X_t is a latent autoregression whose
coefficients phi_{p,t} follow random walks, and an optional coupling effect
enters through a periodic weight lambda_t in [0, 1].  The coupling either
shifts the mean (a single effect delta_t) or perturbs the autocorrelation
structure (P effects delta_{p,t} multiplying lagged X).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import _kernels as _k
from .errors import InputError


class Intervention(enum.Enum):
    """Where the coupling effect enters the observation equation."""

    NONE = "none"
    MEAN = "mean"
    AUTOCORRELATION = "autocorrelation"

    @classmethod
    def parse(cls, value: "str | Intervention") -> "Intervention":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        aliases = {"none": cls.NONE, "mean": cls.MEAN,
                   "autocorrelation": cls.AUTOCORRELATION, "autocorr": cls.AUTOCORRELATION}
        if key not in aliases:
            raise InputError(f"unknown intervention kind: {value!r}")
        return aliases[key]


_KIND_CODE = {Intervention.NONE: _k.KIND_NONE,
              Intervention.MEAN: _k.KIND_MEAN,
              Intervention.AUTOCORRELATION: _k.KIND_AUTOCORR}


@dataclass(frozen=True)
class ModelSpec:
    """Structural configuration of the model.

    Parameters
    ----------
    harmonics : number of seasonal harmonic pairs (K >= 1).
    ar_order : order of the latent autoregression (P >= 1).
    intervention : coupling variant; see :class:`Intervention`.
    n_obs : length of the observed series (T >= P).
    period_length : days per seasonal cycle.
    phase_offset : day-of-year minus one of the first observation, used to
        align the seasonal phase of simulated or ingested data; the phase of
        index t (1-based) is (phase_offset + t - 1) mod period_length.
    """

    harmonics: int
    ar_order: int
    intervention: Intervention
    n_obs: int
    period_length: float = 365.25
    phase_offset: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "intervention", Intervention.parse(self.intervention))
        if self.harmonics < 1:
            raise InputError("harmonics must be >= 1")
        if self.ar_order < 1:
            raise InputError("ar_order must be >= 1")
        if self.n_obs < self.ar_order:
            raise InputError("n_obs must be >= ar_order")
        if not (self.period_length > 0):
            raise InputError("period_length must be positive")
        if not np.isfinite(self.phase_offset):
            raise InputError("phase_offset must be finite")

    @property
    def omega(self) -> float:
        """Seasonal angular frequency, derived from the period."""
        return 2.0 * math.pi / self.period_length

    @cached_property
    def layout(self) -> "StateLayout":
        return StateLayout(self)


class StateLayout:
    """Index map for the packed state vector of a given :class:`ModelSpec`.

    Order: mu, beta, (psi_k, psi*_k) for k = 1..K, X lags (most recent
    first), phi_1..phi_P, then the coupling effect block.  The mean variant
    appends one delta; the autocorrelation variant appends delta_1..delta_P
    and carries one extra X lag (X_{t-P}) so the observation equation can
    reach every lag it multiplies.
    """

    def __init__(self, spec: ModelSpec):
        K, P = spec.harmonics, spec.ar_order
        self.harmonics = K
        self.ar_order = P
        self.kind = spec.intervention
        self.kind_code = _KIND_CODE[spec.intervention]
        self.n_lags = P + 1 if spec.intervention is Intervention.AUTOCORRELATION else P
        self.n_delta = {Intervention.NONE: 0, Intervention.MEAN: 1,
                        Intervention.AUTOCORRELATION: P}[spec.intervention]
        self.mu = 0
        self.beta = 1
        self._lag0 = 2 + 2 * K
        self._phi0 = self._lag0 + self.n_lags
        self._delta0 = self._phi0 + P
        self.dim = self._delta0 + self.n_delta
        self.noise_dim = 2 + 2 * K + 1 + P + self.n_delta
        self.w_mu = 0
        self.w_beta = 1
        self.w_x = 2 + 2 * K

    def psi(self, k: int) -> int:
        """Index of psi_k (k = 1..K)."""
        return 2 + 2 * (k - 1)

    def psi_star(self, k: int) -> int:
        return 3 + 2 * (k - 1)

    def lag(self, i: int) -> int:
        """Index of X_{t-i} (i = 0..n_lags-1)."""
        return self._lag0 + i

    def phi(self, p: int) -> int:
        """Index of phi_p (p = 1..P)."""
        return self._phi0 + (p - 1)

    def delta(self, p: int = 1) -> int:
        """Index of the coupling effect (p = 1..P for the autocorrelation kind)."""
        if self.n_delta == 0:
            raise InputError("model has no coupling effect in the state")
        return self._delta0 + (p - 1)

    def w_psi(self, k: int) -> int:
        return 2 + 2 * (k - 1)

    def w_psi_star(self, k: int) -> int:
        return 3 + 2 * (k - 1)

    def w_phi(self, p: int) -> int:
        return self.w_x + 1 + (p - 1)

    def w_delta(self, p: int = 1) -> int:
        if self.n_delta == 0:
            raise InputError("model has no coupling effect noise")
        return self.w_x + 1 + self.ar_order + (p - 1)

    def names(self) -> list[str]:
        out = ["mu", "beta"]
        for k in range(1, self.harmonics + 1):
            out += [f"psi{k}", f"psi{k}s"]
        out += [f"x_lag{i}" for i in range(self.n_lags)]
        out += [f"phi{p}" for p in range(1, self.ar_order + 1)]
        if self.kind is Intervention.MEAN:
            out.append("delta")
        elif self.kind is Intervention.AUTOCORRELATION:
            out += [f"delta{p}" for p in range(1, self.ar_order + 1)]
        return out

    def noise_names(self) -> list[str]:
        out = ["w_mu", "w_beta"]
        for k in range(1, self.harmonics + 1):
            out += [f"w_psi{k}", f"w_psi{k}s"]
        out.append("w_x")
        out += [f"w_phi{p}" for p in range(1, self.ar_order + 1)]
        if self.kind is Intervention.MEAN:
            out.append("w_delta")
        elif self.kind is Intervention.AUTOCORRELATION:
            out += [f"w_delta{p}" for p in range(1, self.ar_order + 1)]
        return out


@dataclass(frozen=True)
class HyperParams:
    """Static parameters: variances, seasonal variance shape, coupling timing.

    W_psi defaults to W_mu (shared solar-driven scale); pass an explicit
    value to untie.  alpha/gamma/rho parametrise the coupling window and
    varphi/W_delta the effect dynamics; they are ignored when the model has
    no intervention.
    """

    V: float
    W_mu: float
    W_beta: float
    W_X: float
    a: float = 0.0
    b: float = 0.0
    W_psi: float | None = None
    W_phi: float = 0.0
    alpha: float = 0.0
    gamma: float = 0.0
    rho: float = 0.0
    varphi: float = 0.0
    W_delta: float = 0.0

    def __post_init__(self):
        if self.W_psi is None:
            object.__setattr__(self, "W_psi", self.W_mu)
        for name in ("V", "W_mu", "W_beta", "W_psi", "W_phi", "W_X", "W_delta"):
            if getattr(self, name) < 0:
                raise InputError(f"{name} must be nonnegative")
        if not 0.0 <= self.rho <= 1.0:
            raise InputError("rho must be in [0, 1]")
        if not 0.0 <= self.varphi <= 1.0:
            raise InputError("varphi must be in [0, 1]")
        if self.gamma < 0:
            raise InputError("gamma must be nonnegative")

    def noise_variances(self, layout: StateLayout) -> np.ndarray:
        """Diagonal of the evolution covariance, with the X entry set to the
        baseline W_X (the filter swaps in the seasonal value per step)."""
        q = layout.noise_dim
        out = np.empty(q)
        out[0] = self.W_mu
        out[1] = self.W_beta
        for k in range(1, layout.harmonics + 1):
            out[layout.w_psi(k)] = self.W_psi
            out[layout.w_psi_star(k)] = self.W_psi
        out[layout.w_x] = self.W_X
        for p in range(1, layout.ar_order + 1):
            out[layout.w_phi(p)] = self.W_phi
        for d in range(layout.n_delta):
            out[layout.w_x + 1 + layout.ar_order + d] = self.W_delta
        return out


@dataclass(frozen=True)
class StatePrior:
    """Gaussian prior on the initial state: mean vector and diagonal variances."""

    mean: np.ndarray
    var: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float)
        var = np.asarray(self.var, dtype=float)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "var", var)
        if mean.shape != var.shape or mean.ndim != 1:
            raise InputError("prior mean and var must be 1-D arrays of equal length")
        if not np.all(np.isfinite(mean)) or not np.all(np.isfinite(var)):
            raise InputError("prior mean and var must be finite")
        if np.any(var <= 0):
            raise InputError("prior variances must be positive")

    @property
    def dim(self) -> int:
        return self.mean.size

    def cov(self) -> np.ndarray:
        return np.diag(self.var)


# Reference priors for the NAO-style fit (K = 2, P = 5); generic fallbacks
# are used for components beyond the tabulated ones.
_NAO_PSI = [(3.6, 1.0**2), (1.0, 1.5**2), (1.3, 0.9**2), (0.7, 1.3**2)]
_NAO_PHI = [1.8, -1.3, 0.7, -0.3, 0.1]


def nao_state_prior(spec: ModelSpec) -> StatePrior:
    """Informative prior for daily pressure-index data."""
    lay = spec.layout
    mean = np.zeros(lay.dim)
    var = np.zeros(lay.dim)
    mean[lay.mu], var[lay.mu] = 6.0, 1.0
    mean[lay.beta], var[lay.beta] = 0.0, 0.002**2
    for k in range(1, lay.harmonics + 1):
        i = 2 * (k - 1)
        m1, v1 = _NAO_PSI[i] if i < len(_NAO_PSI) else (0.0, 5.0**2)
        m2, v2 = _NAO_PSI[i + 1] if i + 1 < len(_NAO_PSI) else (0.0, 5.0**2)
        mean[lay.psi(k)], var[lay.psi(k)] = m1, v1
        mean[lay.psi_star(k)], var[lay.psi_star(k)] = m2, v2
    for i in range(lay.n_lags):
        mean[lay.lag(i)], var[lay.lag(i)] = 0.0, 10.0**2
    for p in range(1, lay.ar_order + 1):
        mean[lay.phi(p)] = _NAO_PHI[p - 1] if p <= len(_NAO_PHI) else 0.0
        var[lay.phi(p)] = 0.2**2
    if lay.kind is Intervention.MEAN:
        mean[lay.delta()], var[lay.delta()] = 0.0, 5.0**2
    elif lay.kind is Intervention.AUTOCORRELATION:
        for p in range(1, lay.ar_order + 1):
            mean[lay.delta(p)], var[lay.delta(p)] = 0.0, 0.2**2
    return StatePrior(mean, var)


def sim_state_prior(spec: ModelSpec) -> StatePrior:
    """Mildly informative prior used in the simulation studies."""
    lay = spec.layout
    mean = np.zeros(lay.dim)
    var = np.ones(lay.dim)
    var[lay.mu] = 5.0**2
    var[lay.beta] = 0.002**2
    for k in range(1, lay.harmonics + 1):
        var[lay.psi(k)] = 5.0**2
        var[lay.psi_star(k)] = 5.0**2
    for i in range(lay.n_lags):
        var[lay.lag(i)] = 10.0**2
    for p in range(1, lay.ar_order + 1):
        var[lay.phi(p)] = 1.0
    if lay.kind is Intervention.MEAN:
        var[lay.delta()] = 5.0**2
    elif lay.kind is Intervention.AUTOCORRELATION:
        for p in range(1, lay.ar_order + 1):
            var[lay.delta(p)] = 0.2**2
    return StatePrior(mean, var)


def intervention_profile(alpha: float, gamma: float, rho: float,
                         period_length: float, T: int,
                         phase_offset: float = 0.0) -> np.ndarray:
    """Periodic trapezoidal coupling weight evaluated at t = 1..T.

    Per period the weight rises linearly from 0 to 1 over rho*gamma/2 days
    starting at day-of-year alpha, holds at 1, and falls back over
    rho*gamma/2 days, wrapping across period boundaries.  The continuous
    trapezoid is evaluated at the midpoint of each day.
    """
    if not 0.0 <= rho <= 1.0:
        raise InputError("rho must be in [0, 1]")
    if not 0.0 < gamma <= period_length:
        raise InputError("gamma must satisfy 0 < gamma <= period_length "
                         "(the profile would overlap itself)")
    u = (phase_offset + np.arange(T) + 0.5 - alpha) % period_length
    g1 = 0.5 * rho * gamma
    lam = np.zeros(T)
    if g1 > 0:
        rising = u < g1
        lam[rising] = u[rising] / g1
        falling = (u >= gamma - g1) & (u < gamma)
        lam[falling] = (gamma - u[falling]) / g1
        plateau = (u >= g1) & (u < gamma - g1)
        lam[plateau] = 1.0
    else:
        lam[u < gamma] = 1.0
    return lam


def profile_for(phi: HyperParams, spec: ModelSpec, T: int | None = None) -> np.ndarray:
    """Coupling weights for a model; all zero when there is no intervention."""
    n = spec.n_obs if T is None else T
    if spec.intervention is Intervention.NONE:
        return np.zeros(n)
    return intervention_profile(phi.alpha, phi.gamma, phi.rho,
                                spec.period_length, n, spec.phase_offset)


def irregular_variance(W_X: float, a: float, b: float, t, period_length: float):
    """Evolution variance of the irregular component at absolute day index t.

    W_X + sqrt(a^2 + b^2) + a sin(omega t) + b cos(omega t); the offset keeps
    the minimum at exactly W_X.
    """
    omega = 2.0 * math.pi / period_length
    t = np.asarray(t, dtype=float)
    out = W_X + math.hypot(a, b) + a * np.sin(omega * t) + b * np.cos(omega * t)
    return out if out.shape else float(out)


def irregular_variance_path(phi: HyperParams, spec: ModelSpec,
                            T: int | None = None, start: int = 1) -> np.ndarray:
    """W_{X,t} for t = start..start+T-1 in series indexing."""
    n = spec.n_obs if T is None else T
    t_abs = spec.phase_offset + np.arange(start, start + n, dtype=float)
    return irregular_variance(phi.W_X, phi.a, phi.b, t_abs, spec.period_length)


def _trig(spec: ModelSpec):
    k = np.arange(1, spec.harmonics + 1, dtype=float)
    return np.cos(k * spec.omega), np.sin(k * spec.omega)


def _check_theta(theta, spec: ModelSpec) -> np.ndarray:
    theta = np.ascontiguousarray(theta, dtype=float)
    if theta.shape != (spec.layout.dim,):
        raise InputError(f"state vector must have shape ({spec.layout.dim},), "
                         f"got {theta.shape}")
    return theta


def observation_fn(theta, v: float, lam_t: float, spec: ModelSpec) -> float:
    """Observation equation f(theta, v) with coupling weight lam_t."""
    theta = _check_theta(theta, spec)
    lay = spec.layout
    return float(_k.observe(theta, v, lam_t, lay.harmonics, lay.ar_order,
                            lay.n_lags, lay.n_delta, lay.kind_code))


def evolution_fn(theta_prev, w, spec: ModelSpec, phi: HyperParams) -> np.ndarray:
    """Evolution equation g(theta, w); deterministic given the noise vector."""
    theta_prev = _check_theta(theta_prev, spec)
    lay = spec.layout
    w = np.ascontiguousarray(w, dtype=float)
    if w.shape != (lay.noise_dim,):
        raise InputError(f"noise vector must have shape ({lay.noise_dim},), "
                         f"got {w.shape}")
    cosw, sinw = _trig(spec)
    return _k.evolve(theta_prev, w, lay.harmonics, lay.ar_order, lay.n_lags,
                     lay.n_delta, phi.varphi, cosw, sinw)


def jacobians(theta_hat, spec: ModelSpec, phi: HyperParams, lam_t: float):
    """Linearisation at (theta_hat, noise = 0).

    Returns (G, H, F, J): evolution state and noise Jacobians, the
    observation gradient, and the observation noise derivative (always 1).
    """
    theta_hat = _check_theta(theta_hat, spec)
    lay = spec.layout
    cosw, sinw = _trig(spec)
    G = np.zeros((lay.dim, lay.dim))
    H = np.zeros((lay.dim, lay.noise_dim))
    F = np.zeros(lay.dim)
    _k.evolution_jacobians(theta_hat, lay.harmonics, lay.ar_order, lay.n_lags,
                           lay.n_delta, phi.varphi, cosw, sinw, G, H)
    _k.observation_gradient(theta_hat, lam_t, lay.harmonics, lay.ar_order,
                            lay.n_lags, lay.n_delta, lay.kind_code, F)
    return G, H, F, 1.0
