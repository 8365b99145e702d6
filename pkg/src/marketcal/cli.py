"""Command-line front end.

Subcommands: ingest, smooth, calibrate, simulate, evaluate, scenario,
report. Exit codes: 0 success, 1 input error (including bad arguments),
2 numerical failure. A key = value config file can pre-set any calibrate
flag; explicit flags win.
"""

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .calibrate import CalibrationConfig, calibrate, evaluate_point
from .errors import InputError, MarketCalError, NumericalError
from .io import DayData, ingest_csv, write_csv
from .market import ModelParams, simulate
from .report import load_record, report, save_record, scenario
from .smoother import em_fit, kalman_smooth
from .sobol import ParameterBounds
from .stylised import DistanceWeights

__all__ = ["RunConfig", "main"]


@dataclass
class RunConfig:
    """A resolved invocation: command mode, paths and calibration knobs."""

    mode: str
    input_path: str | None = None
    out_dir: str | None = None
    symbol: str | None = None
    date: str | None = None
    calibration: CalibrationConfig | None = None
    jobs: int = 1


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise InputError(message)


def _add_params_flags(p, required=True):
    p.add_argument("--kappa", type=float, required=required)
    p.add_argument("--beta", type=float, required=required)
    p.add_argument("--sigma-n", type=float, required=required)
    p.add_argument("--alpha", type=float, default=0.1)
    p.add_argument("--gamma", type=float, default=10.0)


def _params_from_args(args) -> ModelParams:
    return ModelParams(kappa=args.kappa, beta=args.beta, sigma_n=args.sigma_n,
                       alpha=args.alpha, gamma=args.gamma)


def build_parser() -> _Parser:
    parser = _Parser(prog="marketcal", description=__doc__)
    sub = parser.add_subparsers(dest="mode", required=True)

    p = sub.add_parser("ingest", help="validate a price CSV and write normalized per-day files")
    p.add_argument("--input", required=True)
    p.add_argument("--out-dir", required=True)

    p = sub.add_parser("smooth", help="extract the fundamental value series per day")
    p.add_argument("--input", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--symbol")
    p.add_argument("--date")
    p.add_argument("--em-iterations", type=int, default=10)

    p = sub.add_parser("calibrate", help="calibrate (kappa, beta, sigma_n) per trading day")
    p.add_argument("--input", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int, required=True, help="master seed (mandatory)")
    p.add_argument("--symbol")
    p.add_argument("--date")
    p.add_argument("--config", help="key = value file pre-setting any flag below")
    p.add_argument("--pool-size", type=int)
    p.add_argument("--init-size", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--exploit-size", type=int)
    p.add_argument("--explore-size", type=int)
    p.add_argument("--iterations", type=int)
    p.add_argument("--label-ceiling", type=float)
    p.add_argument("--replications", type=int)
    p.add_argument("--weights", help="w1,w2,w3,w4")
    p.add_argument("--bounds", help="kappa_lo,kappa_hi,beta_lo,beta_hi,sigma_lo,sigma_hi")
    p.add_argument("--alpha", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--tune", action="store_true", help="tune surrogate hyperparameters first")
    p.add_argument("--tune-budget", type=int)
    p.add_argument("--jobs", type=int, default=1, help="concurrent per-day calibrations")
    p.add_argument("--report", action="store_true", help="also emit the comparison CSVs")

    p = sub.add_parser("simulate", help="simulate one path against a fundamental series")
    _add_params_flags(p)
    p.add_argument("--fundamental", required=True,
                   help="CSV with a 'fundamental' column, or one value per line")
    p.add_argument("--p0", type=float, required=True)
    p.add_argument("--m0", type=float, default=0.0)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("evaluate", help="stylised-facts distance of one parameter vector")
    _add_params_flags(p)
    p.add_argument("--input", required=True)
    p.add_argument("--symbol")
    p.add_argument("--date")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--weights", help="w1,w2,w3,w4")
    p.add_argument("--em-iterations", type=int, default=10)

    p = sub.add_parser("scenario", help="GBM scenarios re-simulated through the market model")
    _add_params_flags(p)
    p.add_argument("--s0", type=float, required=True)
    p.add_argument("--mu", type=float, default=0.0)
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--paths", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out-dir", required=True)

    p = sub.add_parser("report", help="emit comparison CSVs from a calibration record")
    p.add_argument("--record", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--symbol")
    p.add_argument("--date")
    p.add_argument("--out-dir", required=True)

    return parser


def load_config_file(path) -> dict:
    """Parse the key = value config format ('#' starts a comment)."""
    out = {}
    if not os.path.exists(path):
        raise InputError(f"config file not found: {path}")
    with open(path) as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise InputError(f"{path}:{line_no}: expected 'key = value'")
            key, value = (part.strip() for part in line.split("=", 1))
            out[key.replace("-", "_")] = value
    return out


def _parse_weights(text: str) -> DistanceWeights:
    parts = [float(v) for v in text.split(",")]
    if len(parts) != 4:
        raise InputError("--weights needs 4 comma-separated values")
    return DistanceWeights(*parts)


def _parse_bounds(text: str) -> ParameterBounds:
    parts = [float(v) for v in text.split(",")]
    if len(parts) != 6:
        raise InputError("--bounds needs 6 comma-separated values")
    return ParameterBounds(kappa=(parts[0], parts[1]), beta=(parts[2], parts[3]),
                           sigma_n=(parts[4], parts[5]))


def _calibration_config(args) -> CalibrationConfig:
    base = {
        "pool_size": 16384, "init_size": 2000, "batch_size": 300,
        "exploit_size": 200, "explore_size": 100, "max_iterations": 5,
        "label_ceiling": 1.0, "replications": 1, "alpha": 0.1, "gamma": 10.0,
        "tune_surrogate": False, "tune_budget": 16,
    }
    weights, bounds = None, None
    if args.config:
        raw = load_config_file(args.config)
        for key, value in raw.items():
            if key == "weights":
                weights = _parse_weights(value)
            elif key == "bounds":
                bounds = _parse_bounds(value)
            elif key in ("iterations", "max_iterations"):
                base["max_iterations"] = int(value)
            elif key in ("tune", "tune_surrogate"):
                base["tune_surrogate"] = value.lower() in ("1", "true", "yes")
            elif key in base:
                caster = type(base[key])
                base[key] = caster(value)
            else:
                raise InputError(f"unknown config key: {key}")
    flag_map = {
        "pool_size": args.pool_size, "init_size": args.init_size,
        "batch_size": args.batch_size, "exploit_size": args.exploit_size,
        "explore_size": args.explore_size, "max_iterations": args.iterations,
        "label_ceiling": args.label_ceiling, "replications": args.replications,
        "alpha": args.alpha, "gamma": args.gamma, "tune_budget": args.tune_budget,
    }
    for key, value in flag_map.items():
        if value is not None:
            base[key] = value
    if args.tune:
        base["tune_surrogate"] = True
    if args.weights:
        weights = _parse_weights(args.weights)
    if args.bounds:
        bounds = _parse_bounds(args.bounds)
    try:
        return CalibrationConfig(
            seed=args.seed,
            weights=weights or DistanceWeights(),
            bounds=bounds,
            **base,
        )
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def _load_days(path, symbol=None, date=None) -> list[DayData]:
    if not os.path.exists(path):
        raise InputError(f"input file not found: {path}")
    days = ingest_csv(path)
    if symbol:
        days = [d for d in days if d.symbol == symbol]
    if date:
        days = [d for d in days if d.day.isoformat() == date]
    if not days:
        raise InputError("no trading days match the given input/symbol/date")
    return days


def _single_day(path, symbol, date) -> DayData:
    days = _load_days(path, symbol, date)
    if len(days) > 1:
        raise InputError("input holds several days; select one with --symbol/--date")
    return days[0]


def _day_tag(day: DayData) -> str:
    return f"{day.symbol}_{day.day.isoformat()}"


def _cmd_ingest(args) -> int:
    days = _load_days(args.input)
    os.makedirs(args.out_dir, exist_ok=True)
    for day in days:
        out = os.path.join(args.out_dir, f"{_day_tag(day)}.csv")
        write_csv([day], out)
        print(f"{day.symbol} {day.day.isoformat()} bars={len(day.path)} "
              f"filled={len(day.filled)} -> {out}")
    return 0


def _cmd_smooth(args) -> int:
    days = _load_days(args.input, args.symbol, args.date)
    os.makedirs(args.out_dir, exist_ok=True)
    for day in days:
        noise = em_fit(day.path, n_iter=args.em_iterations)
        fund = kalman_smooth(day.path, noise)
        out = os.path.join(args.out_dir, f"{_day_tag(day)}_fundamental.csv")
        with open(out, "w") as fh:
            fh.write("timestamp,price,fundamental,variance\n")
            for ts, px, v, s in zip(day.path.timestamps, day.path.prices,
                                    fund.values, fund.variances):
                fh.write(f"{ts.isoformat()},{px!r},{v!r},{s!r}\n")
        print(f"{day.symbol} {day.day.isoformat()} q={noise.q!r} r={noise.r!r} -> {out}")
    return 0


def _calibrate_one(day: DayData, cfg: CalibrationConfig, out_dir: str, with_report: bool):
    result = calibrate(day.path, cfg)
    tag = _day_tag(day)
    record_path = os.path.join(out_dir, f"{tag}_calibration.json")
    save_record(result, record_path)
    if with_report:
        report(result, day.path, os.path.join(out_dir, tag))
    return day, result, record_path


def _cmd_calibrate(args) -> int:
    run = RunConfig(mode="calibrate", input_path=args.input, out_dir=args.out_dir,
                    symbol=args.symbol, date=args.date,
                    calibration=_calibration_config(args), jobs=args.jobs)
    days = _load_days(run.input_path, run.symbol, run.date)
    cfg = run.calibration
    os.makedirs(run.out_dir, exist_ok=True)
    if run.jobs > 1 and len(days) > 1:
        with ProcessPoolExecutor(max_workers=run.jobs) as pool:
            futures = [pool.submit(_calibrate_one, day, cfg, run.out_dir, args.report)
                       for day in days]
            outcomes = [f.result() for f in futures]
    else:
        outcomes = [_calibrate_one(day, cfg, run.out_dir, args.report) for day in days]
    for day, result, record_path in outcomes:
        b = result.best_params
        print(f"{day.symbol} {day.day.isoformat()} best_total={result.best_distance.total!r} "
              f"kappa={b.kappa!r} beta={b.beta!r} sigma_n={b.sigma_n!r} -> {record_path}")
    return 0


def _read_fundamental(path) -> np.ndarray:
    if not os.path.exists(path):
        raise InputError(f"fundamental file not found: {path}")
    with open(path) as fh:
        first = fh.readline()
        values = []
        if "fundamental" in first:
            cols = [c.strip() for c in first.strip().split(",")]
            col = cols.index("fundamental")
            for line_no, line in enumerate(fh, start=2):
                if not line.strip():
                    continue
                try:
                    values.append(float(line.split(",")[col]))
                except (ValueError, IndexError):
                    raise InputError(f"{path}:{line_no}: bad fundamental row") from None
        else:
            for line_no, line in enumerate([first] + fh.readlines(), start=1):
                if not line.strip():
                    continue
                try:
                    values.append(float(line.strip().split(",")[-1]))
                except ValueError:
                    raise InputError(f"{path}:{line_no}: bad value") from None
    if not values:
        raise InputError(f"{path}: no fundamental values")
    return np.asarray(values)


def _cmd_simulate(args) -> int:
    params = _params_from_args(args)
    fundamental = _read_fundamental(args.fundamental)
    path = simulate(params, fundamental, p0=args.p0, m0=args.m0, seed=args.seed)
    with open(args.out, "w") as fh:
        fh.write("step,price\n")
        for t, px in enumerate(path.prices):
            fh.write(f"{t},{px!r}\n")
    print(f"wrote {len(path.prices)} prices -> {args.out}")
    return 0


def _cmd_evaluate(args) -> int:
    params = _params_from_args(args)
    day = _single_day(args.input, args.symbol, args.date)
    cfg = CalibrationConfig(
        seed=args.seed,
        weights=_parse_weights(args.weights) if args.weights else DistanceWeights(),
        alpha=args.alpha, gamma=args.gamma,
        smoother_iterations=args.em_iterations,
    )
    noise = em_fit(day.path, n_iter=cfg.smoother_iterations)
    fund = kalman_smooth(day.path, noise)
    breakdown = evaluate_point(params, day.path, fund, cfg, point_index=0)
    print(json.dumps(breakdown.to_dict(), indent=2, sort_keys=True))
    return 0


def _cmd_scenario(args) -> int:
    params = _params_from_args(args)
    written = scenario(params, s0=args.s0, mu=args.mu, sigma=args.sigma,
                       n_steps=args.steps, n_paths=args.paths, seed=args.seed,
                       out_dir=args.out_dir)
    for path in written:
        print(f"wrote {path}")
    return 0


def _cmd_report(args) -> int:
    if not os.path.exists(args.record):
        raise InputError(f"record file not found: {args.record}")
    result = load_record(args.record)
    day = _single_day(args.input, args.symbol, args.date)
    for path in report(result, day.path, args.out_dir):
        print(f"wrote {path}")
    return 0


_COMMANDS = {
    "ingest": _cmd_ingest,
    "smooth": _cmd_smooth,
    "calibrate": _cmd_calibrate,
    "simulate": _cmd_simulate,
    "evaluate": _cmd_evaluate,
    "scenario": _cmd_scenario,
    "report": _cmd_report,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.mode](args)
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except MarketCalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
