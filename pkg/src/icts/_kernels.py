"""Compiled numerical cores: dynamics, linearised filtering, sampling loops.

All kernels operate on plain float64 arrays in the layout documented by
:class:`icts.model.StateLayout`:

    state  = [mu, beta, psi_1, psi*_1, ..., psi_K, psi*_K,
              X_t, X_{t-1}, ..., X_{t-n_lags+1}, phi_1..phi_P, delta...]
    noise  = [w_mu, w_beta, w_psi_1, w_psi*_1, ..., w_X, w_phi_1.., w_delta..]

The wrappers in ``model.py`` / ``filtering.py`` / ``simulate.py`` own all
validation; kernels assume consistent shapes.
"""

import numpy as np
from numba import njit

LOG_2PI = 1.8378770664093453

KIND_NONE = 0
KIND_MEAN = 1
KIND_AUTOCORR = 2


@njit(cache=True)
def evolve(theta, w, K, P, n_lags, n_delta, varphi, cosw, sinw):
    """One step of the state evolution g(theta, w)."""
    out = np.empty_like(theta)
    beta_new = theta[1] + w[1]
    out[0] = theta[0] + beta_new + w[0]
    out[1] = beta_new
    for j in range(K):
        i = 2 + 2 * j
        c = cosw[j]
        s = sinw[j]
        out[i] = theta[i] * c + theta[i + 1] * s + w[i]
        out[i + 1] = theta[i + 1] * c - theta[i] * s + w[i + 1]
    L0 = 2 + 2 * K
    F0 = L0 + n_lags
    jX = 2 + 2 * K
    # coefficients update first; the new X uses the time-t coefficients
    x_new = w[jX]
    for p in range(P):
        phi_new = theta[F0 + p] + w[jX + 1 + p]
        out[F0 + p] = phi_new
        x_new += phi_new * theta[L0 + p]
    out[L0] = x_new
    for i in range(1, n_lags):
        out[L0 + i] = theta[L0 + i - 1]
    D0 = F0 + P
    jD = jX + 1 + P
    for d in range(n_delta):
        out[D0 + d] = varphi * theta[D0 + d] + w[jD + d]
    return out


@njit(cache=True)
def observe(theta, v, lam, K, P, n_lags, n_delta, kind):
    """Observation f(theta, v) with coupling weight lam."""
    y = theta[0] + v
    for j in range(K):
        y += theta[2 + 2 * j]
    L0 = 2 + 2 * K
    y += theta[L0]
    D0 = L0 + n_lags + P
    if kind == KIND_MEAN:
        y += lam * theta[D0]
    elif kind == KIND_AUTOCORR:
        for p in range(P):
            y += lam * theta[D0 + p] * theta[L0 + 1 + p]
    return y


@njit(cache=True)
def evolution_jacobians(theta, K, P, n_lags, n_delta, varphi, cosw, sinw, G, H):
    """Fill G = dg/dtheta and H = dg/dw at (theta, w=0)."""
    G[:] = 0.0
    H[:] = 0.0
    G[0, 0] = 1.0
    G[0, 1] = 1.0
    G[1, 1] = 1.0
    H[0, 0] = 1.0
    H[0, 1] = 1.0  # w_beta feeds mu through beta_t
    H[1, 1] = 1.0
    for j in range(K):
        i = 2 + 2 * j
        c = cosw[j]
        s = sinw[j]
        G[i, i] = c
        G[i, i + 1] = s
        G[i + 1, i] = -s
        G[i + 1, i + 1] = c
        H[i, i] = 1.0
        H[i + 1, i + 1] = 1.0
    L0 = 2 + 2 * K
    F0 = L0 + n_lags
    D0 = F0 + P
    jX = 2 + 2 * K
    jD = jX + 1 + P
    H[L0, jX] = 1.0
    for p in range(P):
        G[L0, L0 + p] = theta[F0 + p]
        G[L0, F0 + p] = theta[L0 + p]
        H[L0, jX + 1 + p] = theta[L0 + p]  # w_phi enters X via the time-t coefficient
        G[F0 + p, F0 + p] = 1.0
        H[F0 + p, jX + 1 + p] = 1.0
    for i in range(1, n_lags):
        G[L0 + i, L0 + i - 1] = 1.0
    for d in range(n_delta):
        G[D0 + d, D0 + d] = varphi
        H[D0 + d, jD + d] = 1.0


@njit(cache=True)
def observation_gradient(theta, lam, K, P, n_lags, n_delta, kind, F):
    """Fill F = df/dtheta at (theta, v=0).  df/dv is always 1."""
    F[:] = 0.0
    F[0] = 1.0
    for j in range(K):
        F[2 + 2 * j] = 1.0
    L0 = 2 + 2 * K
    F[L0] = 1.0
    D0 = L0 + n_lags + P
    if kind == KIND_MEAN:
        F[D0] = lam
    elif kind == KIND_AUTOCORR:
        for p in range(P):
            F[D0 + p] = lam * theta[L0 + 1 + p]
            F[L0 + 1 + p] += lam * theta[D0 + p]


@njit(cache=True)
def _symmetrize(M):
    n = M.shape[0]
    for i in range(n):
        for j in range(i):
            v = 0.5 * (M[i, j] + M[j, i])
            M[i, j] = v
            M[j, i] = v


@njit(cache=True)
def _abat(A, B):
    """A @ B @ A.T for symmetric B, exploiting sparsity of A."""
    n = A.shape[0]
    tmp = np.zeros((n, n))
    for i in range(n):
        for k in range(n):
            aik = A[i, k]
            if aik != 0.0:
                for j in range(n):
                    tmp[i, j] += aik * B[k, j]
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            s = 0.0
            for k in range(n):
                s += tmp[i, k] * A[j, k]
            out[i, j] = s
    return out


@njit(cache=True)
def _add_hwh(R, H, wdiag):
    """R += H @ diag(wdiag) @ H.T, exploiting sparsity of H."""
    n, q = H.shape
    for j in range(q):
        wj = wdiag[j]
        if wj == 0.0:
            continue
        for i1 in range(n):
            h1 = H[i1, j]
            if h1 == 0.0:
                continue
            for i2 in range(n):
                h2 = H[i2, j]
                if h2 != 0.0:
                    R[i1, i2] += wj * h1 * h2


@njit(cache=True)
def filter_loop(y, obs, m0, C0, lam, wxt, wbase, V,
                K, P, n_lags, n_delta, kind, varphi, cosw, sinw):
    """Linearised forward filter.

    Returns (a, R, f, Q, m, C, e, A, G, loglik, err_t); err_t >= 0 flags a
    non-finite or non-positive forecast variance at that step.
    """
    T = y.size
    n = m0.size
    q = wbase.size
    a = np.zeros((T, n))
    R = np.zeros((T, n, n))
    f = np.zeros(T)
    Q = np.zeros(T)
    m = np.zeros((T, n))
    C = np.zeros((T, n, n))
    e = np.full(T, np.nan)
    A = np.zeros((T, n))
    Gs = np.zeros((T, n, n))
    G = np.zeros((n, n))
    H = np.zeros((n, q))
    Fv = np.zeros(n)
    w0 = np.zeros(q)
    wt = wbase.copy()
    jX = 2 + 2 * K
    loglik = 0.0
    mp = m0.copy()
    Cp = C0.copy()
    err_t = -1
    for t in range(T):
        evolution_jacobians(mp, K, P, n_lags, n_delta, varphi, cosw, sinw, G, H)
        at = evolve(mp, w0, K, P, n_lags, n_delta, varphi, cosw, sinw)
        wt[jX] = wxt[t]
        Rt = _abat(G, Cp)
        _add_hwh(Rt, H, wt)
        _symmetrize(Rt)
        ft = observe(at, 0.0, lam[t], K, P, n_lags, n_delta, kind)
        observation_gradient(at, lam[t], K, P, n_lags, n_delta, kind, Fv)
        RF = np.zeros(n)
        for i in range(n):
            s = 0.0
            for j in range(n):
                s += Rt[i, j] * Fv[j]
            RF[i] = s
        Qt = V
        for i in range(n):
            Qt += Fv[i] * RF[i]
        if not np.isfinite(Qt) or Qt <= 0.0:
            err_t = t
            break
        a[t] = at
        R[t] = Rt
        Gs[t] = G
        f[t] = ft
        Q[t] = Qt
        if obs[t]:
            et = y[t] - ft
            At = RF / Qt
            mt = at + At * et
            # Joseph-stabilised update: (I - A F') R (I - A F')' + V A A'
            M = np.zeros((n, n))
            for i in range(n):
                M[i, i] = 1.0
                for j in range(n):
                    M[i, j] -= At[i] * Fv[j]
            Ct = _abat(M, Rt)
            for i in range(n):
                for j in range(n):
                    Ct[i, j] += V * At[i] * At[j]
            _symmetrize(Ct)
            e[t] = et
            A[t] = At
            loglik += -0.5 * (LOG_2PI + np.log(Qt) + et * et / Qt)
        else:
            mt = at.copy()
            Ct = Rt.copy()
        m[t] = mt
        C[t] = Ct
        mp = mt
        Cp = Ct
    return a, R, f, Q, m, C, e, A, Gs, loglik, err_t


@njit(cache=True)
def _eigh_pinv(M, floor_scale):
    """Symmetric pseudo-inverse with eigenvalues floored at floor_scale*trace/n."""
    n = M.shape[0]
    vals, vecs = np.linalg.eigh(M)
    tr = 0.0
    for i in range(n):
        tr += M[i, i]
    floor = floor_scale * abs(tr) / n
    if floor <= 0.0:
        floor = 1e-300
    out = np.zeros((n, n))
    for k in range(n):
        vk = vals[k]
        if vk < floor:
            vk = floor
        inv = 1.0 / vk
        for i in range(n):
            for j in range(n):
                out[i, j] += inv * vecs[i, k] * vecs[j, k]
    return out


@njit(cache=True)
def _psd_sqrt(M):
    """Symmetric square root with negative eigenvalues clipped to zero."""
    n = M.shape[0]
    vals, vecs = np.linalg.eigh(M)
    out = np.zeros((n, n))
    for k in range(n):
        vk = vals[k]
        if vk <= 0.0:
            continue
        rk = np.sqrt(vk)
        for i in range(n):
            for j in range(n):
                out[i, j] += rk * vecs[i, k] * vecs[j, k]
    return out


@njit(cache=True)
def backward_factors(m, C, a, R, Gs, floor_scale):
    """Per-step gain B_t and noise square roots S_t for backward sampling.

    B_t = C_t G_{t+1}' pinv(R_{t+1});  S_t = sqrt(C_t - B_t R_{t+1} B_t'),
    S_{T-1} = sqrt(C_{T-1}).  The factors do not depend on the sampled path,
    so trajectories can be drawn cheaply given (B, S).
    """
    T, n = m.shape
    B = np.zeros((T, n, n))
    S = np.zeros((T, n, n))
    S[T - 1] = _psd_sqrt(C[T - 1])
    for t in range(T - 2, -1, -1):
        Rinv = _eigh_pinv(R[t + 1], floor_scale)
        # B = C_t G' Rinv
        CG = np.zeros((n, n))
        for i in range(n):
            for k in range(n):
                cik = C[t, i, k]
                if cik != 0.0:
                    for j in range(n):
                        CG[i, j] += cik * Gs[t + 1, j, k]
        Bt = CG @ Rinv
        B[t] = Bt
        # H = C - B R B'
        BR = Bt @ R[t + 1]
        Ht = C[t] - BR @ Bt.T.copy()
        _symmetrize(Ht)
        S[t] = _psd_sqrt(Ht)
    return B, S


@njit(cache=True)
def backward_draw(B, S, m, a, xi, out):
    """One backward trajectory given precomputed factors and N(0,1) draws xi."""
    T, n = m.shape
    th = m[T - 1] + S[T - 1] @ xi[T - 1]
    out[T - 1] = th
    for t in range(T - 2, -1, -1):
        h = m[t] + B[t] @ (th - a[t + 1])
        th = h + S[t] @ xi[t]
        out[t] = th
    return out


@njit(cache=True)
def forecast_paths(starts, xi_w, xi_v, lam_fut, wxt_fut, wbase, V,
                   K, P, n_lags, n_delta, kind, varphi, cosw, sinw):
    """Sample forward paths.  starts: (S,n) state draws at the forecast origin."""
    n_samples, n = starts.shape
    horizon = lam_fut.size
    q = wbase.size
    jX = 2 + 2 * K
    states = np.zeros((n_samples, horizon, n))
    ys = np.zeros((n_samples, horizon))
    sqv = np.sqrt(V)
    wsd = np.sqrt(wbase)
    for s in range(n_samples):
        th = starts[s].copy()
        for i in range(horizon):
            w = np.empty(q)
            for j in range(q):
                w[j] = wsd[j] * xi_w[s, i, j]
            w[jX] = np.sqrt(wxt_fut[i]) * xi_w[s, i, jX]
            th = evolve(th, w, K, P, n_lags, n_delta, varphi, cosw, sinw)
            states[s, i] = th
            ys[s, i] = observe(th, sqv * xi_v[s, i], lam_fut[i],
                               K, P, n_lags, n_delta, kind)
    return states, ys


@njit(cache=True)
def durbin_levinson(rho):
    """AR coefficients whose partial autocorrelations are rho (|rho_p| < 1)."""
    P = rho.size
    phi = np.zeros(P)
    prev = np.zeros(P)
    for mm in range(P):
        r = rho[mm]
        for j in range(mm):
            phi[j] = prev[j] - r * prev[mm - 1 - j]
        phi[mm] = r
        for j in range(mm + 1):
            prev[j] = phi[j]
    return phi


@njit(cache=True)
def reflect_into_unit(x):
    """Reflect x into (-1, 1): 2-x at +1, -2-x at -1, applied repeatedly."""
    while x > 1.0 or x < -1.0:
        if x > 1.0:
            x = 2.0 - x
        else:
            x = -2.0 - x
    return x


@njit(cache=True)
def pacf_walk(rho0, sd, xi):
    """Reflected Gaussian random walks on (-1, 1).  xi: (T, P) N(0,1) draws."""
    T, P = xi.shape
    out = np.empty((T, P))
    cur = rho0.copy()
    for t in range(T):
        for p in range(P):
            cur[p] = reflect_into_unit(cur[p] + sd * xi[t, p])
            out[t, p] = cur[p]
    return out


@njit(cache=True)
def simulate_loop(theta0, rho_paths, xi_w, xi_v, lam, wxt, wbase, V,
                  K, P, n_lags, n_delta, kind, varphi, cosw, sinw):
    """Forward simulation with PACF-walk TVAR coefficients.

    The coefficient entries of the state are driven by rho_paths through the
    Durbin-Levinson map (their own noise entries are ignored), keeping every
    simulated coefficient path stationary.
    """
    T = xi_v.size
    n = theta0.size
    q = wbase.size
    jX = 2 + 2 * K
    F0 = 2 + 2 * K + n_lags
    states = np.zeros((T, n))
    y = np.zeros(T)
    v = np.zeros(T)
    sqv = np.sqrt(V)
    wsd = np.sqrt(wbase)
    th = theta0.copy()
    w = np.empty(q)
    for t in range(T):
        for j in range(q):
            w[j] = wsd[j] * xi_w[t, j]
        w[jX] = np.sqrt(wxt[t]) * xi_w[t, jX]
        phi_t = durbin_levinson(rho_paths[t])
        for p in range(P):
            th[F0 + p] = phi_t[p]
            w[jX + 1 + p] = 0.0
        th = evolve(th, w, K, P, n_lags, n_delta, varphi, cosw, sinw)
        states[t] = th
        v[t] = sqv * xi_v[t]
        y[t] = observe(th, v[t], lam[t], K, P, n_lags, n_delta, kind)
    return states, y, v
