"""Gaussian-process Bayesian optimization for the surrogate hyperparameters.

A zero-mean GP with squared-exponential kernel models the objective (by
default the cross-validated RMSE of the tree surrogate) over the unit cube;
expected improvement picks the next hyperparameter vector from a dense
Sobol candidate set. Kernel hyperparameters are chosen by marginal
likelihood over a small log-grid, which is robust at the handful of
observations a tuning run ever sees.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalError
from .gbt import GbtHyperParams
from .sobol import sobol_points

__all__ = [
    "HyperRange",
    "HyperSpace",
    "GpState",
    "fit_gp",
    "gp_posterior",
    "expected_improvement",
    "tune",
]


@dataclass(frozen=True)
class HyperRange:
    low: float
    high: float
    integer: bool = False

    def __post_init__(self):
        if not self.low < self.high:
            raise ValueError("low must be below high")

    def decode(self, u: float) -> float:
        value = self.low + u * (self.high - self.low)
        return float(round(value)) if self.integer else float(value)


@dataclass(frozen=True)
class HyperSpace:
    """Search box over GbtHyperParams fields."""

    ranges: dict

    @classmethod
    def default(cls) -> "HyperSpace":
        return cls(ranges={
            "n_trees": HyperRange(50, 400, integer=True),
            "max_depth": HyperRange(2, 6, integer=True),
            "learning_rate": HyperRange(0.02, 0.3),
            "l2_leaf": HyperRange(0.0, 10.0),
            "min_child_weight": HyperRange(1.0, 10.0),
            "subsample": HyperRange(0.5, 1.0),
        })

    @property
    def dim(self) -> int:
        return len(self.ranges)

    def decode(self, u: np.ndarray) -> GbtHyperParams:
        values = {name: rng.decode(float(ui)) for (name, rng), ui in zip(self.ranges.items(), u)}
        for name, rng in self.ranges.items():
            if rng.integer:
                values[name] = int(values[name])
        return GbtHyperParams(**values)


@dataclass
class GpState:
    """Observations plus kernel hyperparameters; prior mean is zero.

    chol and alpha are the cached Cholesky factor of the kernel matrix and
    the solved weights; fit_gp fills them.
    """

    x: np.ndarray
    y: np.ndarray
    length_scale: float
    signal_var: float
    noise_var: float
    chol: np.ndarray = field(default=None, repr=False)
    alpha: np.ndarray = field(default=None, repr=False)


def _kernel(a: np.ndarray, b: np.ndarray, length_scale: float, signal_var: float) -> np.ndarray:
    d2 = ((a[:, None, :] - b[None, :, :]) ** 2).sum(axis=2)
    return signal_var * np.exp(-d2 / (2.0 * length_scale ** 2))


def _cholesky_with_jitter(k: np.ndarray, scale: float):
    jitter = 1e-12 * scale
    for _ in range(6):
        try:
            return np.linalg.cholesky(k + jitter * np.eye(len(k)))
        except np.linalg.LinAlgError:
            jitter *= 100.0
    raise NumericalError("kernel matrix not positive definite even after jitter")


def _prepare(state: GpState) -> GpState:
    if state.chol is None:
        k = _kernel(state.x, state.x, state.length_scale, state.signal_var)
        k = k + state.noise_var * np.eye(len(state.x))
        state.chol = _cholesky_with_jitter(k, max(state.signal_var, 1.0))
        z = np.linalg.solve(state.chol, state.y)
        state.alpha = np.linalg.solve(state.chol.T, z)
    return state


def fit_gp(x: np.ndarray, y: np.ndarray) -> GpState:
    """Pick (length scale, signal var, noise var) by marginal likelihood
    over a small log-grid and return the ready-to-query state."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64)
    if len(x) != len(y) or len(y) < 1:
        raise ValueError("need aligned, non-empty observations")
    var = max(float(np.var(y)), 1e-12)
    best = None
    for ls in (0.05, 0.1, 0.25, 0.5, 1.0, 2.0):
        for sv in (0.5 * var, var, 2.0 * var):
            for nv in (1e-6 * sv, 1e-4 * sv, 1e-2 * sv):
                k = _kernel(x, x, ls, sv) + nv * np.eye(len(x))
                try:
                    chol = _cholesky_with_jitter(k, max(sv, 1.0))
                except NumericalError:
                    continue
                z = np.linalg.solve(chol, y)
                loglik = -0.5 * float(z @ z) - float(np.log(np.diag(chol)).sum())
                if best is None or loglik > best[0]:
                    best = (loglik, ls, sv, nv)
    if best is None:
        raise NumericalError("no admissible kernel hyperparameters")
    _, ls, sv, nv = best
    return _prepare(GpState(x=x, y=y, length_scale=ls, signal_var=sv, noise_var=nv))


def _posterior_batch(state: GpState, queries: np.ndarray):
    state = _prepare(state)
    ks = _kernel(np.atleast_2d(queries), state.x, state.length_scale, state.signal_var)
    mean = ks @ state.alpha
    w = np.linalg.solve(state.chol, ks.T)
    var = np.maximum(state.signal_var - (w * w).sum(axis=0), 0.0)
    return mean, var


def gp_posterior(state: GpState, query) -> tuple[float, float]:
    """Posterior mean and variance at one query point."""
    q = np.atleast_1d(np.asarray(query, dtype=np.float64))
    mean, var = _posterior_batch(state, q[None, :])
    return float(mean[0]), float(var[0])


def _norm_cdf(z: float) -> float:
    return 0.5 * (1.0 + math.erf(z / math.sqrt(2.0)))


def _norm_pdf(z: float) -> float:
    return math.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)


def expected_improvement(mean: float, variance: float, best: float) -> float:
    """EI for minimization; zero when certain and not better than best."""
    if variance < 0:
        raise ValueError("variance must be non-negative")
    sigma = math.sqrt(variance)
    gap = best - mean
    if sigma == 0.0:
        return max(gap, 0.0)
    z = gap / sigma
    return gap * _norm_cdf(z) + sigma * _norm_pdf(z)


def tune(objective, space: HyperSpace, budget: int, seed=None, ceiling: float = 1.0) -> GbtHyperParams:
    """Minimize the objective over the hyperparameter box.

    Evaluates ceil(budget/4) (at least 2) Sobol start points, then
    alternates GP fit / EI maximization over a dense Sobol candidate set
    until the budget is spent. Non-finite objective values score the
    ceiling. Returns the best evaluated vector, never a predicted one.
    """
    if budget < 2:
        raise ValueError("budget must be at least 2")
    dim = space.dim
    n_candidates = max(512, 4 * budget)
    candidates = sobol_points(dim, n_candidates, skip=1)
    n_init = max(2, math.ceil(budget / 4))
    rng = np.random.default_rng(seed)

    chosen: list[int] = list(range(n_init))
    values: list[float] = []

    def run(index: int) -> float:
        val = float(objective(space.decode(candidates[index])))
        return val if math.isfinite(val) else float(ceiling)

    for i in chosen:
        values.append(run(i))

    while len(chosen) < budget:
        y = np.asarray(values)
        center = y.mean()
        state = fit_gp(candidates[chosen], y - center)
        remaining = np.setdiff1d(np.arange(n_candidates), np.asarray(chosen))
        mean, var = _posterior_batch(state, candidates[remaining])
        best_centered = y.min() - center
        ei = np.array([
            expected_improvement(m, v, best_centered) for m, v in zip(mean, var)
        ])
        if ei.max() > 0.0:
            pick = remaining[int(np.argmax(ei))]
        else:
            pick = int(rng.choice(remaining))
        chosen.append(int(pick))
        values.append(run(int(pick)))

    best_at = int(np.argmin(values))
    return space.decode(candidates[chosen[best_at]])
