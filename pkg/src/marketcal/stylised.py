"""Return statistics and the composite distance between two trading days.

The distance aggregates four gaps between a simulated and a historical
day: the two-sample Kolmogorov-Smirnov statistic of the return
distributions, the absolute volatility difference, and mean absolute
autocorrelation differences of returns (nine lags: 1-3, 10-12, 20-22) and
of squared returns (lags 1..20). Returns are first differences of prices
throughout: the
dynamics are arithmetic in price and both series live at matched price
levels.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConstantSeriesError

__all__ = [
    "ACF1_LAGS",
    "ACF2_LAGS",
    "DistanceWeights",
    "DistanceBreakdown",
    "returns",
    "ks_statistic",
    "acf",
    "excess_kurtosis",
    "volatility",
    "distance",
]

ACF1_LAGS = (1, 2, 3, 10, 11, 12, 20, 21, 22)
ACF2_LAGS = tuple(range(1, 21))

# A comparison must support the largest lag: 23 returns, hence 24 prices.
MIN_PRICES = max(max(ACF1_LAGS), max(ACF2_LAGS)) + 2


@dataclass(frozen=True)
class DistanceWeights:
    """Non-negative weights of the four distance components."""

    w1: float = 1.0  # KS statistic
    w2: float = 1.0  # volatility gap
    w3: float = 1.0  # return-ACF gap
    w4: float = 1.0  # squared-return-ACF gap

    def __post_init__(self):
        ws = (self.w1, self.w2, self.w3, self.w4)
        if any(w < 0 for w in ws):
            raise ValueError("weights must be non-negative")
        if all(w == 0 for w in ws):
            raise ValueError("at least one weight must be positive")


@dataclass(frozen=True)
class DistanceBreakdown:
    """The four components and their weighted sum.

    When degenerate is set (simulated returns or squared returns were
    constant, so the ACFs are undefined), total is the sentinel ceiling
    rather than the weighted sum, and the undefined components are NaN.
    """

    ks: float
    vol_gap: float
    acf1_gap: float
    acf2_gap: float
    total: float
    degenerate: bool = False

    def to_dict(self) -> dict:
        def _clean(x):
            return None if (isinstance(x, float) and math.isnan(x)) else x

        return {
            "ks": _clean(self.ks),
            "vol_gap": _clean(self.vol_gap),
            "acf1_gap": _clean(self.acf1_gap),
            "acf2_gap": _clean(self.acf2_gap),
            "total": self.total,
            "degenerate": self.degenerate,
        }


def _as_returns(series) -> np.ndarray:
    x = np.asarray(getattr(series, "values", series), dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("expected a 1-d series")
    return x


def returns(prices) -> np.ndarray:
    """First differences of a price path."""
    p = np.asarray(getattr(prices, "prices", prices), dtype=np.float64)
    if p.ndim != 1 or p.size < 2:
        raise ValueError("need at least two prices")
    return np.diff(p)


def ks_statistic(a, b) -> float:
    """Two-sample Kolmogorov-Smirnov statistic.

    The supremum of |F_a - F_b| over the real line; it is attained at a
    sample point, so both empirical CDFs are compared at every observation
    of either sample.
    """
    xa = np.sort(_as_returns(a))
    xb = np.sort(_as_returns(b))
    if xa.size == 0 or xb.size == 0:
        raise ValueError("ks_statistic needs non-empty samples")
    grid = np.concatenate([xa, xb])
    fa = np.searchsorted(xa, grid, side="right") / xa.size
    fb = np.searchsorted(xb, grid, side="right") / xb.size
    return float(np.abs(fa - fb).max())


def acf(series, lag: int) -> float:
    """Autocorrelation at the given lag (biased estimator).

    sum_{t<=n-lag} (r_t - rbar)(r_{t+lag} - rbar) / sum_t (r_t - rbar)^2
    with rbar the full-sample mean. Lag 0 is permitted and equals 1.
    """
    x = _as_returns(series)
    if lag < 0:
        raise ValueError("lag must be non-negative")
    if x.size <= lag:
        raise ValueError("series must be longer than the lag")
    xc = x - x.mean()
    den = float(xc @ xc)
    if den == 0.0:
        raise ConstantSeriesError("autocorrelation undefined for a constant series")
    if lag == 0:
        return 1.0
    return float(xc[:-lag] @ xc[lag:]) / den


def excess_kurtosis(series) -> float:
    """Excess kurtosis m4/m2^2 - 3 from population central moments."""
    x = _as_returns(series)
    if x.size < 4:
        raise ValueError("excess kurtosis needs at least 4 observations")
    xc = x - x.mean()
    m2 = float(np.mean(xc * xc))
    if m2 == 0.0:
        raise ConstantSeriesError("kurtosis undefined for a constant series")
    m4 = float(np.mean(xc ** 4))
    return m4 / (m2 * m2) - 3.0


def volatility(series) -> float:
    """Sample standard deviation of returns (n-1 denominator)."""
    x = _as_returns(series)
    if x.size < 2:
        raise ValueError("volatility needs at least 2 returns")
    return float(np.std(x, ddof=1))


def _acf_gap(sim: np.ndarray, hist: np.ndarray, lags) -> float:
    gaps = [abs(acf(sim, lag) - acf(hist, lag)) for lag in lags]
    return float(np.mean(gaps))


def distance(sim, hist, weights: DistanceWeights = DistanceWeights(),
             ceiling: float = 1.0) -> DistanceBreakdown:
    """Composite stylised-facts distance between two days.

    Both paths need at least 24 prices so the lag-22 autocorrelation is
    computable. A constant historical series is a data error and raises; a
    simulated series whose returns or squared returns are constant scores
    the sentinel ceiling with the degenerate flag set, so a calibration
    loop can carry on.
    """
    r_sim = returns(sim)
    r_hist = returns(hist)
    if r_sim.size < MIN_PRICES - 1 or r_hist.size < MIN_PRICES - 1:
        raise ValueError(f"distance needs at least {MIN_PRICES} prices per path")

    hist_vol = volatility(r_hist)
    hist_acf1 = [acf(r_hist, lag) for lag in ACF1_LAGS]
    hist_acf2 = [acf(r_hist * r_hist, lag) for lag in ACF2_LAGS]

    ks = ks_statistic(r_sim, r_hist)
    vol_gap = abs(volatility(r_sim) - hist_vol)
    try:
        acf1_gap = float(np.mean([abs(acf(r_sim, lag) - h) for lag, h in zip(ACF1_LAGS, hist_acf1)]))
        sq = r_sim * r_sim
        acf2_gap = float(np.mean([abs(acf(sq, lag) - h) for lag, h in zip(ACF2_LAGS, hist_acf2)]))
    except ConstantSeriesError:
        return DistanceBreakdown(
            ks=ks, vol_gap=vol_gap, acf1_gap=math.nan, acf2_gap=math.nan,
            total=float(ceiling), degenerate=True,
        )
    total = weights.w1 * ks + weights.w2 * vol_gap + weights.w3 * acf1_gap + weights.w4 * acf2_gap
    return DistanceBreakdown(ks=ks, vol_gap=vol_gap, acf1_gap=acf1_gap,
                             acf2_gap=acf2_gap, total=float(total))
