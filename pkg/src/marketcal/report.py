"""Calibration record serialization and plot-ready CSV emission.

Charting itself is out of scope; every artefact is a CSV (or the JSON
record) that downstream tools plot. All emitted files are deterministic
given the inputs and the master seed: floats are written through repr and
every simulation seed is derived, never drawn.
"""

import json
import math
import os
from dataclasses import asdict

import numpy as np

from . import gbt
from .calibrate import (
    CalibrationConfig,
    CalibrationResult,
    IterationRecord,
    point_seed,
)
from .errors import SimulationDivergedError
from .market import ModelParams, PricePath, gbm_paths, simulate
from .smoother import FundamentalSeries
from .sobol import ParameterBounds
from .stylised import DistanceBreakdown, DistanceWeights, acf, distance, returns

__all__ = [
    "result_to_record",
    "result_from_record",
    "save_record",
    "load_record",
    "report",
    "scenario",
]

_SWEEP_STREAM = 6
_SCENARIO_STREAM = 7
_ACF_REPORT_LAGS = tuple(range(1, 31))
_SWEEP_GRID = 21


def _params_dict(p: ModelParams) -> dict:
    return {"kappa": p.kappa, "beta": p.beta, "sigma_n": p.sigma_n,
            "alpha": p.alpha, "gamma": p.gamma}


def result_to_record(result: CalibrationResult) -> dict:
    """JSON-ready calibration record; schema documented in the README."""
    cfg = result.config
    record = {
        "schema": "marketcal-calibration",
        "version": 1,
        "config": {
            "seed": cfg.seed,
            "pool_size": cfg.pool_size,
            "init_size": cfg.init_size,
            "batch_size": cfg.batch_size,
            "exploit_size": cfg.exploit_size,
            "explore_size": cfg.explore_size,
            "max_iterations": cfg.max_iterations,
            "label_ceiling": cfg.label_ceiling,
            "replications": cfg.replications,
            "weights": asdict(cfg.weights),
            "alpha": cfg.alpha,
            "gamma": cfg.gamma,
            "tune_surrogate": cfg.tune_surrogate,
            "tune_budget": cfg.tune_budget,
            "smoother_iterations": cfg.smoother_iterations,
        },
        "bounds": {"kappa": list(result.bounds.kappa), "beta": list(result.bounds.beta),
                   "sigma_n": list(result.bounds.sigma_n)},
        "surrogate_hyper": asdict(result.surrogate_hyper),
        "fundamental": {
            "values": [float(v) for v in result.fundamental.values],
            "variances": [float(v) for v in result.fundamental.variances],
        },
        "evaluated": [
            {"index": idx, "params": _params_dict(p), "distance": d.to_dict()}
            for idx, p, d in result.evaluated
        ],
        "iterations": [
            {
                "iteration": it.iteration,
                "predicted_opt_index": it.predicted_opt_index,
                "predicted_opt_params": _params_dict(it.predicted_opt_params),
                "predicted": it.predicted,
                "actual": it.actual,
                "rel_error": it.rel_error,
                "best_total_so_far": it.best_total_so_far,
            }
            for it in result.iterations
        ],
        "best": {
            "index": result.best_index,
            "params": _params_dict(result.best_params),
            "distance": result.best_distance.to_dict(),
        },
        "final_surrogate": (
            gbt.model_to_dict(result.final_model) if result.final_model is not None else None
        ),
    }
    return record


def _params_from_dict(d: dict) -> ModelParams:
    return ModelParams(kappa=d["kappa"], beta=d["beta"], sigma_n=d["sigma_n"],
                       alpha=d["alpha"], gamma=d["gamma"])


def _breakdown_from_dict(d: dict) -> DistanceBreakdown:
    def _num(x):
        return math.nan if x is None else float(x)

    return DistanceBreakdown(ks=_num(d["ks"]), vol_gap=_num(d["vol_gap"]),
                             acf1_gap=_num(d["acf1_gap"]), acf2_gap=_num(d["acf2_gap"]),
                             total=float(d["total"]), degenerate=bool(d["degenerate"]))


def result_from_record(record: dict) -> CalibrationResult:
    """Rebuild a result object from its JSON record.

    Only the final surrogate snapshot is stored, so intermediate iteration
    records come back without their models.
    """
    if record.get("schema") != "marketcal-calibration":
        raise ValueError("not a calibration record")
    c = record["config"]
    cfg = CalibrationConfig(
        seed=c["seed"], pool_size=c["pool_size"], init_size=c["init_size"],
        batch_size=c["batch_size"], exploit_size=c["exploit_size"],
        explore_size=c["explore_size"], max_iterations=c["max_iterations"],
        label_ceiling=c["label_ceiling"], replications=c["replications"],
        weights=DistanceWeights(**c["weights"]), alpha=c["alpha"], gamma=c["gamma"],
        tune_surrogate=c["tune_surrogate"], tune_budget=c["tune_budget"],
        smoother_iterations=c["smoother_iterations"],
    )
    b = record["bounds"]
    bounds = ParameterBounds(kappa=tuple(b["kappa"]), beta=tuple(b["beta"]),
                             sigma_n=tuple(b["sigma_n"]))
    final_model = (gbt.model_from_dict(record["final_surrogate"])
                   if record.get("final_surrogate") else None)
    iterations = []
    for i, it in enumerate(record["iterations"]):
        is_last = i == len(record["iterations"]) - 1
        iterations.append(IterationRecord(
            iteration=it["iteration"],
            model=final_model if is_last else None,
            predicted_opt_index=it["predicted_opt_index"],
            predicted_opt_params=_params_from_dict(it["predicted_opt_params"]),
            predicted=it["predicted"], actual=it["actual"], rel_error=it["rel_error"],
            best_total_so_far=it["best_total_so_far"],
        ))
    return CalibrationResult(
        best_params=_params_from_dict(record["best"]["params"]),
        best_distance=_breakdown_from_dict(record["best"]["distance"]),
        best_index=record["best"]["index"],
        evaluated=[
            (e["index"], _params_from_dict(e["params"]), _breakdown_from_dict(e["distance"]))
            for e in record["evaluated"]
        ],
        iterations=iterations,
        bounds=bounds,
        fundamental=FundamentalSeries(
            values=record["fundamental"]["values"],
            variances=record["fundamental"]["variances"],
        ),
        config=cfg,
        surrogate_hyper=gbt.GbtHyperParams(**record["surrogate_hyper"]),
    )


def _dump_json(payload: dict, path):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def save_record(result: CalibrationResult, path):
    _dump_json(result_to_record(result), path)


def load_record(path) -> CalibrationResult:
    with open(path) as fh:
        return result_from_record(json.load(fh))


def _write_csv_rows(path, header, rows):
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(repr(v) if isinstance(v, float) else str(v) for v in row) + "\n")


def _best_simulation(result: CalibrationResult, hist: PricePath) -> PricePath:
    cfg = result.config
    return simulate(result.best_params, result.fundamental.values[1:],
                    p0=float(hist.prices[0]), m0=0.0,
                    seed=point_seed(cfg.seed, result.best_index, 0))


def _normal_cdf(x: np.ndarray, mean: float, std: float) -> np.ndarray:
    if std == 0:
        return (x >= mean).astype(float)
    from math import erf, sqrt

    z = (x - mean) / (std * sqrt(2.0))
    return 0.5 * (1.0 + np.vectorize(erf)(z))


def report(result: CalibrationResult, hist: PricePath, out_dir) -> list:
    """Write the record plus the comparison CSVs for one calibrated day.

    Emits calibration.json, acf_comparison.csv (per-lag ACFs of returns
    and squared returns, historical vs simulated, with absolute gaps),
    cdf_comparison.csv (empirical CDFs vs a normal matched to the
    historical sample moments) and sensitivity.csv (per-parameter sweep of
    predicted vs actual distance around the optimum).
    """
    os.makedirs(out_dir, exist_ok=True)
    written = []

    record_path = os.path.join(out_dir, "calibration.json")
    save_record(result, record_path)
    written.append(record_path)

    sim = _best_simulation(result, hist)
    r_hist = returns(hist)
    r_sim = returns(sim)

    rows = []
    for lag in _ACF_REPORT_LAGS:
        h1, s1 = acf(r_hist, lag), acf(r_sim, lag)
        h2, s2 = acf(r_hist * r_hist, lag), acf(r_sim * r_sim, lag)
        rows.append([lag, h1, s1, abs(s1 - h1), h2, s2, abs(s2 - h2)])
    acf_path = os.path.join(out_dir, "acf_comparison.csv")
    _write_csv_rows(acf_path, ["lag", "hist_acf_returns", "sim_acf_returns", "gap_returns",
                               "hist_acf_squared", "sim_acf_squared", "gap_squared"], rows)
    written.append(acf_path)

    grid = np.sort(np.concatenate([r_hist, r_sim]))
    mean = float(np.mean(r_hist))
    std = float(np.std(r_hist, ddof=1))
    hist_cdf = np.searchsorted(np.sort(r_hist), grid, side="right") / r_hist.size
    sim_cdf = np.searchsorted(np.sort(r_sim), grid, side="right") / r_sim.size
    norm_cdf = _normal_cdf(grid, mean, std)
    cdf_path = os.path.join(out_dir, "cdf_comparison.csv")
    _write_csv_rows(
        cdf_path, ["value", "hist_cdf", "sim_cdf", "normal_cdf"],
        [[float(g), float(h), float(s), float(n)]
         for g, h, s, n in zip(grid, hist_cdf, sim_cdf, norm_cdf)],
    )
    written.append(cdf_path)

    sweep_path = os.path.join(out_dir, "sensitivity.csv")
    _write_csv_rows(sweep_path, ["parameter", "value", "predicted", "actual"],
                    _sensitivity_rows(result, hist))
    written.append(sweep_path)
    return written


def _sensitivity_rows(result: CalibrationResult, hist: PricePath) -> list:
    cfg = result.config
    model = result.final_model
    best = np.array([result.best_params.kappa, result.best_params.beta,
                     result.best_params.sigma_n])
    box = result.bounds.as_array()
    rows = []
    for p_idx, name in enumerate(ParameterBounds.names()):
        low, high = box[p_idx]
        grid = np.linspace(low, high, _SWEEP_GRID)
        grid = np.unique(np.concatenate([grid, [best[p_idx]]]))
        for g_idx, value in enumerate(grid):
            point = best.copy()
            point[p_idx] = value
            theta = ModelParams(kappa=float(point[0]), beta=float(point[1]),
                                sigma_n=float(point[2]), alpha=cfg.alpha, gamma=cfg.gamma)
            predicted = (float(gbt.predict(model, point[None, :])[0])
                         if model is not None else math.nan)
            seed = np.random.SeedSequence((cfg.seed, _SWEEP_STREAM, p_idx, g_idx))
            try:
                sim = simulate(theta, result.fundamental.values[1:],
                               p0=float(hist.prices[0]), m0=0.0, seed=seed)
                d = distance(sim, hist, cfg.weights, ceiling=cfg.label_ceiling)
                actual = d.total
            except SimulationDivergedError:
                actual = cfg.label_ceiling
            rows.append([name, float(value), predicted, float(actual)])
    return rows


def scenario(calibrated: ModelParams, s0: float, mu: float, sigma: float,
             n_steps: int, n_paths: int, seed, out_dir) -> list:
    """Generate reference GBM paths, re-simulate the market model on top of
    them (each GBM path is the fundamental series), and emit the price
    panels plus average squared-return ACF curves."""
    os.makedirs(out_dir, exist_ok=True)
    gbm = gbm_paths(s0, mu, sigma, n_steps, n_paths, seed=seed)
    model_paths = []
    for i, g in enumerate(gbm):
        model_paths.append(simulate(
            calibrated, g.prices[1:], p0=float(g.prices[0]), m0=0.0,
            seed=np.random.SeedSequence((seed, _SCENARIO_STREAM, i)),
        ))

    paths_file = os.path.join(out_dir, "scenario_paths.csv")
    rows = []
    for i, (g, m) in enumerate(zip(gbm, model_paths)):
        for t in range(len(g.prices)):
            rows.append([i, t, float(g.prices[t]), float(g.prices[t]), float(m.prices[t])])
    _write_csv_rows(paths_file, ["path", "step", "gbm_price", "fundamental", "model_price"], rows)

    acf_file = os.path.join(out_dir, "scenario_acf.csv")
    rows = []
    for lag in range(1, 21):
        gbm_acfs = [acf(returns(g) ** 2, lag) for g in gbm]
        mod_acfs = [acf(returns(m) ** 2, lag) for m in model_paths]
        rows.append([lag, float(np.mean(gbm_acfs)), float(np.mean(mod_acfs))])
    _write_csv_rows(acf_file, ["lag", "gbm_mean_acf_squared", "model_mean_acf_squared"], rows)
    return [paths_file, acf_file]
