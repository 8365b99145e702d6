"""End-to-end calibration of one trading day.

The loop: smooth the day to extract the fundamental series, lay a Sobol
pool over the parameter box, evaluate a random initial subset by actually
simulating, then iterate fit-surrogate / predict-pool / pick-batch /
evaluate-batch. Each batch mixes exploitation (lowest predicted distances)
with uniform exploration of the remaining pool. The answer is the argmin
over truly evaluated points; the surrogate only steers sampling.

Every simulation seed derives from (master seed, pool index, replication)
through numpy SeedSequence, so points can be evaluated in any order, or
concurrently, without changing any result.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import gbt, hyperopt
from .errors import SimulationDivergedError
from .market import ModelParams, PricePath, simulate
from .smoother import FundamentalSeries, em_fit, kalman_smooth
from .sobol import ParameterBounds, ParameterPool, scale, sobol_points
from .stylised import DistanceBreakdown, DistanceWeights, distance, returns, volatility

__all__ = [
    "CalibrationConfig",
    "IterationRecord",
    "CalibrationResult",
    "point_seed",
    "evaluate_point",
    "select_batch",
    "calibrate",
]

# Stream tags keeping the derived seed families disjoint.
_EVAL_STREAM = 0
_INIT_STREAM = 1
_BATCH_STREAM = 2
_FIT_STREAM = 3
_TUNE_STREAM = 4
_CV_STREAM = 5


@dataclass(frozen=True)
class CalibrationConfig:
    """Knobs of the calibration loop; defaults are the production scale.

    seed is the master seed every stream derives from. bounds left at None
    are derived from the day (see ParameterBounds.default_for_day).
    """

    seed: int
    pool_size: int = 16384
    init_size: int = 2000
    batch_size: int = 300
    exploit_size: int = 200
    explore_size: int = 100
    max_iterations: int = 5
    label_ceiling: float = 1.0
    replications: int = 1
    weights: DistanceWeights = field(default_factory=DistanceWeights)
    bounds: ParameterBounds | None = None
    alpha: float = 0.1
    gamma: float = 10.0
    surrogate: gbt.GbtHyperParams = field(default_factory=gbt.GbtHyperParams)
    tune_surrogate: bool = False
    tune_budget: int = 16
    smoother_iterations: int = 10

    def __post_init__(self):
        if self.exploit_size + self.explore_size != self.batch_size:
            raise ValueError("exploit_size + explore_size must equal batch_size")
        if self.init_size + self.max_iterations * self.batch_size > self.pool_size:
            raise ValueError("pool too small for init_size plus all batches")
        if self.init_size < 2 or self.pool_size < 2:
            raise ValueError("pool_size and init_size must be at least 2")
        if self.max_iterations < 0:
            raise ValueError("max_iterations must be non-negative")
        if not self.label_ceiling > 0:
            raise ValueError("label_ceiling must be positive")
        if self.replications < 1:
            raise ValueError("replications must be at least 1")


@dataclass
class IterationRecord:
    """Surrogate snapshot metrics for one loop iteration."""

    iteration: int
    model: gbt.GbtModel
    predicted_opt_index: int
    predicted_opt_params: ModelParams
    predicted: float
    actual: float | None
    rel_error: float | None
    best_total_so_far: float


@dataclass
class CalibrationResult:
    best_params: ModelParams
    best_distance: DistanceBreakdown
    best_index: int
    evaluated: list  # (pool index, ModelParams, DistanceBreakdown) in evaluation order
    iterations: list  # IterationRecord per loop pass
    bounds: ParameterBounds
    fundamental: FundamentalSeries
    config: CalibrationConfig
    surrogate_hyper: gbt.GbtHyperParams

    @property
    def final_model(self) -> gbt.GbtModel | None:
        return self.iterations[-1].model if self.iterations else None


def point_seed(master_seed: int, point_index: int, replication: int = 0) -> np.random.SeedSequence:
    """Deterministic per-point noise stream, disjoint across points."""
    return np.random.SeedSequence((master_seed, _EVAL_STREAM, point_index, replication))


def _stream_rng(master_seed: int, *tags: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((master_seed, *tags)))


def _params_from_point(point: np.ndarray, cfg: CalibrationConfig) -> ModelParams:
    return ModelParams(kappa=float(point[0]), beta=float(point[1]),
                       sigma_n=float(point[2]), alpha=cfg.alpha, gamma=cfg.gamma)


def _degenerate(cfg: CalibrationConfig) -> DistanceBreakdown:
    return DistanceBreakdown(ks=float("nan"), vol_gap=float("nan"),
                             acf1_gap=float("nan"), acf2_gap=float("nan"),
                             total=cfg.label_ceiling, degenerate=True)


def evaluate_point(theta: ModelParams, hist: PricePath, fundamental: FundamentalSeries,
                   cfg: CalibrationConfig, point_index: int) -> DistanceBreakdown:
    """Distance of one parameter vector against the historical day.

    Simulates from the first historical price with zero initial momentum,
    feeding fundamental.values[1:] so simulated and historical series have
    equal length. Totals average over replications. Divergent or
    statistically degenerate simulations score the label ceiling.
    """
    values = fundamental.values
    if len(values) != len(hist.prices):
        raise ValueError("fundamental series must align with the historical day")
    parts = []
    for rep in range(cfg.replications):
        seed = point_seed(cfg.seed, point_index, rep)
        try:
            sim = simulate(theta, values[1:], p0=float(hist.prices[0]), m0=0.0, seed=seed)
        except SimulationDivergedError:
            return _degenerate(cfg)
        d = distance(sim, hist, cfg.weights, ceiling=cfg.label_ceiling)
        if d.degenerate:
            return _degenerate(cfg)
        parts.append(d)
    if len(parts) == 1:
        return parts[0]
    return DistanceBreakdown(
        ks=float(np.mean([p.ks for p in parts])),
        vol_gap=float(np.mean([p.vol_gap for p in parts])),
        acf1_gap=float(np.mean([p.acf1_gap for p in parts])),
        acf2_gap=float(np.mean([p.acf2_gap for p in parts])),
        total=float(np.mean([p.total for p in parts])),
    )


def select_batch(predictions: np.ndarray, n_exploit: int, n_explore: int, seed=None) -> np.ndarray:
    """Pick batch positions from the unlabeled pool.

    Exploit: the n_exploit smallest predictions (ties to the lower index).
    Explore: uniform without replacement from the rest. When fewer
    positions remain than requested, both parts shrink proportionally with
    a warning. Returns positions into the predictions vector.
    """
    predictions = np.asarray(predictions, dtype=np.float64)
    n_avail = predictions.size
    total = n_exploit + n_explore
    if total > n_avail:
        warnings.warn(
            f"unlabeled pool ({n_avail}) smaller than batch ({total}); shrinking batch",
            stacklevel=2,
        )
        n_exploit = n_exploit * n_avail // total
        n_explore = n_avail - n_exploit
    order = np.argsort(predictions, kind="stable")
    exploit = order[:n_exploit]
    rest = order[n_exploit:]
    if n_explore > 0:
        rng = np.random.default_rng(seed)
        explore = rng.choice(rest, size=n_explore, replace=False)
    else:
        explore = np.empty(0, dtype=np.int64)
    return np.concatenate([exploit, explore]).astype(np.int64)


def _cv_rmse_objective(x: np.ndarray, y: np.ndarray, master_seed: int, n_folds: int = 5):
    """5-fold cross-validated RMSE of the surrogate, as tuning objective."""
    n = len(y)
    folds = _stream_rng(master_seed, _CV_STREAM).permutation(n) % n_folds

    def objective(hyper: gbt.GbtHyperParams) -> float:
        err = np.empty(n)
        for f in range(n_folds):
            test = folds == f
            model = gbt.fit(x[~test], y[~test], hyper,
                            seed=np.random.SeedSequence((master_seed, _CV_STREAM, f)))
            err[test] = gbt.predict(model, x[test]) - y[test]
        return float(np.sqrt(np.mean(err * err)))

    return objective


def calibrate(hist: PricePath, cfg: CalibrationConfig) -> CalibrationResult:
    """Run the full loop on one day and return the evaluated argmin."""
    if len(hist.prices) < 24:
        raise ValueError("calibration needs at least 24 prices")

    noise = em_fit(hist, n_iter=cfg.smoother_iterations)
    fundamental = kalman_smooth(hist, noise)

    bounds = cfg.bounds
    if bounds is None:
        bounds = ParameterBounds.default_for_day(volatility(returns(hist)))
    pool: ParameterPool = scale(sobol_points(3, cfg.pool_size, skip=1), bounds)

    records: dict[int, DistanceBreakdown] = {}
    order: list[int] = []

    def run_point(index: int):
        theta = _params_from_point(pool.points[index], cfg)
        breakdown = evaluate_point(theta, hist, fundamental, cfg, index)
        records[index] = breakdown
        order.append(index)
        pool.mark(index, breakdown.total)

    init_rng = _stream_rng(cfg.seed, _INIT_STREAM)
    init_indices = np.sort(init_rng.choice(cfg.pool_size, size=cfg.init_size, replace=False))
    for idx in init_indices:
        run_point(int(idx))

    hyper = cfg.surrogate
    iterations: list[IterationRecord] = []
    for it in range(1, cfg.max_iterations + 1):
        labeled = pool.labeled_indices()
        x_train = pool.points[labeled]
        y_train = gbt.clip_labels(pool.labels[labeled], cfg.label_ceiling)
        if it == 1 and cfg.tune_surrogate:
            hyper = hyperopt.tune(
                _cv_rmse_objective(x_train, y_train, cfg.seed),
                hyperopt.HyperSpace.default(),
                cfg.tune_budget,
                seed=np.random.SeedSequence((cfg.seed, _TUNE_STREAM)),
                ceiling=cfg.label_ceiling,
            )
        model = gbt.fit(x_train, y_train, hyper,
                        seed=np.random.SeedSequence((cfg.seed, _FIT_STREAM, it)))
        preds_all = gbt.predict(model, pool.points)
        unlabeled = pool.unlabeled_indices()

        opt_index = int(np.argmin(preds_all))
        predicted = float(preds_all[opt_index])

        batch_local = select_batch(
            preds_all[unlabeled], cfg.exploit_size, cfg.explore_size,
            seed=np.random.SeedSequence((cfg.seed, _BATCH_STREAM, it)),
        )
        for idx in unlabeled[batch_local]:
            run_point(int(idx))

        actual = records[opt_index].total if opt_index in records else None
        if actual is None:
            rel_error = None
        elif actual > 0:
            rel_error = abs(predicted - actual) / actual
        else:
            rel_error = 0.0 if predicted == actual else float("inf")
        best_so_far = float(pool.labels[pool.labeled_indices()].min())
        iterations.append(IterationRecord(
            iteration=it, model=model, predicted_opt_index=opt_index,
            predicted_opt_params=_params_from_point(pool.points[opt_index], cfg),
            predicted=predicted, actual=actual, rel_error=rel_error,
            best_total_so_far=best_so_far,
        ))

    labeled = pool.labeled_indices()
    best_pos = int(np.lexsort((labeled, pool.labels[labeled]))[0])
    best_index = int(labeled[best_pos])
    return CalibrationResult(
        best_params=_params_from_point(pool.points[best_index], cfg),
        best_distance=records[best_index],
        best_index=best_index,
        evaluated=[(i, _params_from_point(pool.points[i], cfg), records[i]) for i in order],
        iterations=iterations,
        bounds=bounds,
        fundamental=fundamental,
        config=cfg,
        surrogate_hyper=hyper,
    )
