"""Latent fundamental value extraction from a price series.

The price is modelled as a noisy observation of a random-walk level (the
local-level state-space model):

    V_t = V_{t-1} + w_t,   w_t ~ N(0, q)
    P_t = V_t + v_t,       v_t ~ N(0, r)

kalman_smooth runs the forward filter and the Rauch-Tung-Striebel backward
pass and returns posterior means and variances for V. em_fit estimates
(q, r) by expectation-maximisation with the initial state fixed at
data-driven values, which keeps the likelihood non-decreasing.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateModelError, InsufficientDataError

__all__ = [
    "NoiseEstimates",
    "FundamentalSeries",
    "kalman_filter",
    "kalman_smooth",
    "em_fit",
    "em_log_likelihoods",
]

# Innovations smaller than this (relative to scale) are treated as exact
# when the innovation variance degenerates to zero.
_EXACT_TOL = 1e-9


@dataclass(frozen=True)
class NoiseEstimates:
    """State-space hyperparameters: noise variances and the initial state."""

    q: float
    r: float
    v0: float
    p0: float

    def __post_init__(self):
        if self.q < 0 or self.r < 0:
            raise ValueError("q and r must be non-negative")
        if not self.p0 > 0:
            raise ValueError("p0 must be positive")


@dataclass
class FundamentalSeries:
    """Smoothed level estimates, one per observed price."""

    values: np.ndarray
    variances: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        self.variances = np.asarray(self.variances, dtype=np.float64)
        if self.values.shape != self.variances.shape:
            raise ValueError("values and variances must have equal length")
        if (self.variances < 0).any():
            raise ValueError("variances must be non-negative")

    def __len__(self):
        return self.values.size


def _observations(prices) -> np.ndarray:
    y = np.asarray(getattr(prices, "prices", prices), dtype=np.float64)
    if y.ndim != 1 or y.size < 2:
        raise ValueError("need at least two prices")
    return y


def kalman_filter(prices, noise: NoiseEstimates):
    """Forward pass. Returns (filtered_means, filtered_vars, pred_means,
    pred_vars, log_likelihood).

    The prior N(v0, p0) applies at the first observation time and is
    updated by it.
    """
    y = _observations(prices)
    n = y.size
    fm = np.empty(n)
    fv = np.empty(n)
    pm = np.empty(n)
    pv = np.empty(n)
    loglik = 0.0
    mean, var = noise.v0, noise.p0
    scale = max(1.0, float(np.abs(y).max()))
    for t in range(n):
        if t > 0:
            var = var + noise.q
        pm[t] = mean
        pv[t] = var
        s = var + noise.r
        innov = y[t] - mean
        if s <= 0.0:
            # Deterministic model: only an exactly-predicted observation
            # is consistent with it.
            if abs(innov) <= _EXACT_TOL * scale:
                fm[t], fv[t] = mean, 0.0
                mean, var = fm[t], 0.0
                continue
            raise DegenerateModelError(
                "zero innovation variance cannot explain a changing price series"
            )
        gain = var / s
        mean = mean + gain * innov
        var = (1.0 - gain) * var
        fm[t], fv[t] = mean, var
        loglik += -0.5 * (np.log(2.0 * np.pi * s) + innov * innov / s)
    return fm, fv, pm, pv, loglik


def kalman_smooth(prices, noise: NoiseEstimates) -> FundamentalSeries:
    """Posterior means and variances of the latent level given all prices."""
    values, variances, _ = _smooth_full(prices, noise)
    return FundamentalSeries(values=values, variances=variances)


def _smooth_full(prices, noise: NoiseEstimates):
    """Smoother internals: also returns the lag-one smoothed covariances
    cov(V_t, V_{t-1} | all data) needed by the EM updates."""
    fm, fv, pm, pv, _ = kalman_filter(prices, noise)
    n = fm.size
    sm = np.empty(n)
    sv = np.empty(n)
    lag_cov = np.zeros(n)  # lag_cov[t] = cov(V_t, V_{t-1} | data), t >= 1
    sm[-1] = fm[-1]
    sv[-1] = fv[-1]
    for t in range(n - 2, -1, -1):
        denom = pv[t + 1]
        gain = fv[t] / denom if denom > 0.0 else 0.0
        sm[t] = fm[t] + gain * (sm[t + 1] - pm[t + 1])
        sv[t] = fv[t] + gain * gain * (sv[t + 1] - pv[t + 1])
        lag_cov[t + 1] = gain * sv[t + 1]
    return sm, np.maximum(sv, 0.0), lag_cov


def _default_init(y: np.ndarray) -> NoiseEstimates:
    v0 = float(y[0])
    p0 = float(np.var(y, ddof=1))
    dvar = float(np.var(np.diff(y), ddof=1)) if y.size > 2 else 0.0
    # Floors keep the first filter pass well defined on (near-)constant data;
    # any tiny positive variance does, and EM shrinks it further from there.
    if p0 <= 0.0:
        p0 = 1.0
    qr = max(dvar, 1e-8)
    return NoiseEstimates(q=qr, r=qr, v0=v0, p0=p0)


def _em_step(y: np.ndarray, est: NoiseEstimates) -> NoiseEstimates:
    """One EM update of (q, r) from the expected sufficient statistics."""
    sm, sv, lag_cov = _smooth_full(y, est)
    resid = y - sm
    r_new = float(np.mean(resid * resid + sv))
    dm = np.diff(sm)
    q_new = float(np.mean(dm * dm + sv[1:] + sv[:-1] - 2.0 * lag_cov[1:]))
    return NoiseEstimates(q=max(q_new, 0.0), r=max(r_new, 0.0), v0=est.v0, p0=est.p0)


def em_fit(prices, n_iter: int = 10, init: NoiseEstimates | None = None) -> NoiseEstimates:
    """Estimate (q, r) by EM, keeping (v0, p0) at their initial values.

    Each iteration smooths under the current estimates and re-solves the
    noise variances from the expected sufficient statistics, so the
    log-likelihood never decreases.
    """
    y = _observations(prices)
    if y.size < 3:
        raise InsufficientDataError("EM needs at least 3 observations")
    if n_iter < 1:
        raise ValueError("n_iter must be at least 1")
    est = init if init is not None else _default_init(y)
    for _ in range(n_iter):
        est = _em_step(y, est)
    return est


def em_log_likelihoods(prices, n_iter: int = 10, init: NoiseEstimates | None = None) -> np.ndarray:
    """Log-likelihood under the estimates entering each EM iteration."""
    y = _observations(prices)
    if y.size < 3:
        raise InsufficientDataError("EM needs at least 3 observations")
    est = init if init is not None else _default_init(y)
    logliks = []
    for _ in range(n_iter):
        logliks.append(kalman_filter(y, est)[4])
        est = _em_step(y, est)
    return np.asarray(logliks)
