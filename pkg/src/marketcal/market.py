"""Discrete-time market model with fundamental, momentum and noise traders.

One agent stands in for each trader population. Per step the aggregate
demand moves the price through a linear impact rule that is already folded
into the demand scales, so the update reads

    dP_t = kappa * (V_t - P_{t-1}) + beta * tanh(gamma * M_{t-1}) + sigma_n * eps_t
    M_t  = (1 - alpha) * M_{t-1} + alpha * dP_t

with V_t the exogenous fundamental value, M_t an EWMA trend signal and
eps_t standard normal. Demand is computed from the previous state, then the
price, then the momentum, which keeps each step explicit. The module also
provides geometric Brownian motion reference paths used by the scenario
generator.
"""

from dataclasses import dataclass, field

import numpy as np

from . import backend
from .errors import SimulationDivergedError

__all__ = ["ModelParams", "PricePath", "SimState", "step", "simulate", "gbm_paths"]


@dataclass(frozen=True)
class ModelParams:
    """Trader demand scales plus the fixed momentum constants.

    kappa, beta and sigma_n are the calibrated demand scales of the
    fundamental, momentum and noise trader (price units per step). alpha is
    the EWMA decay of the trend signal, gamma the saturation rate of
    momentum demand.
    """

    kappa: float
    beta: float
    sigma_n: float
    alpha: float = 0.1
    gamma: float = 10.0

    def __post_init__(self):
        if not (self.kappa >= 0 and self.beta >= 0 and self.sigma_n >= 0):
            raise ValueError("kappa, beta and sigma_n must be non-negative")
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")


@dataclass
class PricePath:
    """A minute-indexed price series.

    non_positive is a diagnostic flag: the arithmetic dynamics do not guard
    against prices crossing zero, so paths record whether they did.
    """

    prices: np.ndarray
    timestamps: list | None = None
    non_positive: bool = field(init=False)

    def __post_init__(self):
        self.prices = np.asarray(self.prices, dtype=np.float64)
        if self.prices.ndim != 1 or self.prices.size < 2:
            raise ValueError("a price path needs at least 2 prices")
        if not np.isfinite(self.prices).all():
            raise ValueError("prices must be finite")
        if self.timestamps is not None and len(self.timestamps) != self.prices.size:
            raise ValueError("timestamps and prices must have equal length")
        self.non_positive = bool(self.prices.min() <= 0.0)

    def __len__(self):
        return self.prices.size


@dataclass(frozen=True)
class SimState:
    """Price and momentum carried between steps."""

    price: float
    momentum: float

    def __post_init__(self):
        if not (np.isfinite(self.price) and np.isfinite(self.momentum)):
            raise ValueError("state must be finite")


def step(params: ModelParams, state: SimState, fundamental: float, eps: float) -> SimState:
    """Advance one step; reference implementation of the recurrence."""
    dp = (
        params.kappa * (fundamental - state.price)
        + params.beta * np.tanh(params.gamma * state.momentum)
        + params.sigma_n * eps
    )
    return SimState(
        price=state.price + dp,
        momentum=(1.0 - params.alpha) * state.momentum + params.alpha * dp,
    )


def simulate(params: ModelParams, fundamental, p0: float, m0: float = 0.0, seed=None) -> PricePath:
    """Simulate T steps against a fundamental value series of length T.

    Noise is drawn once from numpy's default generator keyed by seed, so a
    fixed seed reproduces the path bit for bit. fundamental[t-1] enters step
    t; the returned path has T+1 prices starting at p0.

    Raises SimulationDivergedError (with the failing step index) if the
    recurrence leaves the representable range.
    """
    v = np.ascontiguousarray(fundamental, dtype=np.float64)
    if v.ndim != 1 or v.size < 1:
        raise ValueError("fundamental must be a non-empty 1-d series")
    if not np.isfinite(v).all():
        raise ValueError("fundamental values must be finite")
    eps = np.random.default_rng(seed).standard_normal(v.size)
    out = np.empty(v.size + 1)
    bad = backend.kernels.simulate_steps(
        eps, v, float(p0), float(m0), params.kappa, params.beta, params.gamma,
        params.alpha, params.sigma_n, out,
    )
    if bad >= 0:
        raise SimulationDivergedError(bad)
    return PricePath(out)


def gbm_paths(s0: float, mu: float, sigma: float, n_steps: int, n_paths: int, seed=None) -> list[PricePath]:
    """Geometric Brownian motion paths, one independent stream per path.

    Each path follows S_t = S_{t-1} * exp((mu - sigma^2 / 2) + sigma * eps_t)
    per step. Path i draws from a generator keyed by (seed, i), so it does
    not depend on n_paths.
    """
    if not s0 > 0:
        raise ValueError("s0 must be positive")
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    if n_steps < 1 or n_paths < 1:
        raise ValueError("n_steps and n_paths must be at least 1")
    drift = mu - 0.5 * sigma * sigma
    paths = []
    for i in range(n_paths):
        eps = np.random.default_rng([seed, i] if seed is not None else None).standard_normal(n_steps)
        prices = np.empty(n_steps + 1)
        prices[0] = s0
        prices[1:] = s0 * np.cumprod(np.exp(drift + sigma * eps))
        paths.append(PricePath(prices))
    return paths
