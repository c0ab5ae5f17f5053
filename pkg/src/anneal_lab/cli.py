"""``anneal-lab`` command line: run one experiment kind from a JSON config."""
from __future__ import annotations

import argparse
import json
import math
import statistics
import sys
from dataclasses import dataclass, field
from functools import partial
from pathlib import Path
from typing import Any, Optional

from scipy.stats import spearmanr

from . import analytic, calibrate, chain, metropolis, schedule
from .config import KINDS, ConfigError, ExperimentConfig, geometry_from_block, parse_config
from .landscape import (
    ChainParamsSingle,
    ChainParamsTwo,
    SingleBasinGeometry,
    TwoBasinGeometry,
    discretize_single,
    discretize_two,
)
from .rng import derive_seed
from .tables import SCHEMAS, SCHEMA_VERSION, write_table

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CONFIG = 2
EXIT_SATURATION = 3
EXIT_TIMEOUT = 4


@dataclass
class ExperimentResult:
    schema: str
    rows: list
    summary: dict = field(default_factory=dict)


def _chain_params(cfg: ExperimentConfig):
    if "chain" in cfg.params:
        c = cfg.params["chain"]
        if c["model"] == "single":
            return ChainParamsSingle(N=c["N"], p=float(c["p"]))
        return ChainParamsTwo(M=c["M"], N=c["N"], p=float(c["p"]), q=float(c["q"]))
    g = geometry_from_block(cfg.params["geometry"])
    return discretize_single(g) if isinstance(g, SingleBasinGeometry) else discretize_two(g)


def _check_start(start: int, N: int) -> None:
    if start > N:
        raise ConfigError(f"'start' = {start} outside [0, {N}]")


def _table_rows(table: analytic.HittingTimeTable) -> list:
    return [(int(s), float(t), table.method) for s, t in zip(table.states, table.times)]


def _predict(cfg: ExperimentConfig) -> ExperimentResult:
    params = _chain_params(cfg)
    start = cfg.params["start"]
    _check_start(start, params.N)
    if isinstance(params, ChainParamsSingle):
        table = analytic.exit_times_single(params)
    else:
        table = analytic.hit_times_two(params)
    summary = {"value": table.at(start), "start": start, "method": table.method,
               "params": _params_dict(params)}
    if cfg.params.get("printed_form_check"):
        d = analytic.printed_form_discrepancy(start, params.N, params.p)
        summary["printed_form"] = {"value": d.printed, "deviation": d.deviation,
                                   "relative_deviation": d.relative_deviation,
                                   "deviates": d.deviates}
    return ExperimentResult("hitting-times", _table_rows(table), summary)


def _params_dict(params) -> dict:
    if isinstance(params, ChainParamsSingle):
        return {"N": params.N, "p": params.p, "alpha": params.alpha}
    return {"M": params.M, "N": params.N, "R": params.R, "p": params.p, "q": params.q}


def _solve_exact(cfg: ExperimentConfig) -> ExperimentResult:
    params = _chain_params(cfg)
    start = cfg.params["start"]
    _check_start(start, params.N)
    spec = chain.build_single(params) if isinstance(params, ChainParamsSingle) else chain.build_two(params)
    table = chain.exact_hitting_times(spec)
    return ExperimentResult("hitting-times", _table_rows(table),
                            {"value": table.at(start), "start": start, "method": table.method,
                             "params": _params_dict(params)})


def _batch_summary(batch: metropolis.TrialBatch) -> dict:
    return {"mean": batch.mean, "stderr": batch.stderr, "trials": batch.n_trials,
            "timeouts": batch.timeouts, "trials_digest": batch.digest()}


def _trial_rows(batch: metropolis.TrialBatch) -> list:
    return [(i, int(s), bool(a)) for i, (s, a) in enumerate(zip(batch.steps, batch.absorbed))]


def _sim_discrete(cfg: ExperimentConfig) -> ExperimentResult:
    params = _chain_params(cfg)
    start = cfg.params["start"]
    _check_start(start, params.N)
    spec = chain.build_single(params) if isinstance(params, ChainParamsSingle) else chain.build_two(params)
    max_steps = cfg.max_steps or chain.DEFAULT_DISCRETE_MAX_STEPS

    def runner(seed, trial):
        return chain.simulate_discrete(spec, start, seed, max_steps, trial)

    batch = metropolis.mc_mean(runner, cfg.trials, cfg.seed, config_digest=cfg.digest)
    summary = _batch_summary(batch)
    summary["exact"] = chain.exact_hitting_times(spec).at(start)
    return ExperimentResult("trials", _trial_rows(batch), summary)


def _sim_continuous(cfg: ExperimentConfig) -> ExperimentResult:
    g = geometry_from_block(cfg.params["geometry"])
    sched = cfg.params.get("schedule")
    sched = None if sched is None else metropolis.TemperatureSchedule(tuple(map(tuple, sched)))
    runner = metropolis.continuous_runner(g, sched, x0=cfg.params["x0"],
                                          max_steps=cfg.max_steps or metropolis.DEFAULT_MAX_STEPS)
    batch = metropolis.mc_mean(runner, cfg.trials, cfg.seed, config_digest=cfg.digest)
    return ExperimentResult("trials", _trial_rows(batch), _batch_summary(batch))


def _point_row(pt: calibrate.CalibrationPoint) -> tuple:
    return (pt.ratio, pt.t_discrete, pt.t_continuous, pt.rel_error, pt.k_opt,
            pt.trials, pt.timeouts, pt.stderr)


def _points_summary(points) -> dict:
    return {
        "k_opt": [p.k_opt for p in points],
        "scaled_error": [p.scaled_error for p in points],
        "max_rel_error": max(p.rel_error for p in points),
        "min_rel_error": min(p.rel_error for p in points),
        "max_scaled_error": max(p.scaled_error for p in points),
        "median_scaled_error": statistics.median(p.scaled_error for p in points),
    }


def _calibrate_k(cfg: ExperimentConfig) -> ExperimentResult:
    g = geometry_from_block(cfg.params["geometry"])
    k_range = tuple(cfg.params["k_range"])
    target = cfg.params.get("target")
    if target is None:
        batch = metropolis.continuous_mean(g, cfg.trials, cfg.seed,
                                           max_steps=cfg.max_steps or metropolis.DEFAULT_MAX_STEPS)
        pt = calibrate.CalibrationPoint.from_measurement(
            g, batch.mean, trials=batch.n_trials, timeouts=batch.timeouts,
            stderr=batch.stderr, k_range=k_range)
    else:
        pt = calibrate.CalibrationPoint.from_measurement(g, target, k_range=k_range)
    return ExperimentResult("ratio-sweep", [_point_row(pt)], _points_summary([pt]))


def _sweep_ratio(cfg: ExperimentConfig) -> ExperimentResult:
    base = geometry_from_block(cfg.params["geometry"])
    if "depths" in cfg.params:
        depths = cfg.params["depths"]
    else:
        w = base.width if isinstance(base, SingleBasinGeometry) else base.w1
        depths = [calibrate.depth_for_ratio(w, base.temperature, base.radius, r)
                  for r in cfg.params["ratios"]]
    sweep = calibrate.sweep_ratio_single if isinstance(base, SingleBasinGeometry) else calibrate.sweep_ratio_two
    points = sweep(base, depths, cfg.trials, cfg.seed,
                   max_steps=cfg.max_steps or metropolis.DEFAULT_MAX_STEPS,
                   k_range=tuple(cfg.params["k_range"]))
    return ExperimentResult("ratio-sweep", [_point_row(p) for p in points], _points_summary(points))


def _sweep_temperature(cfg: ExperimentConfig) -> ExperimentResult:
    p = cfg.params
    rows = schedule.temperature_sweep(p["w1"], p["w2"], p["wd_ratios"], p["temperatures"], p["radius"])
    monotone = {}
    for wd in p["wd_ratios"]:
        t0 = [r.t0 for r in rows if r.w_over_d == wd]
        temps = [r.temperature for r in rows if r.w_over_d == wd]
        order = sorted(range(len(temps)), key=temps.__getitem__)
        monotone[str(wd)] = all(t0[a] > t0[b] for a, b in zip(order, order[1:]))
    return ExperimentResult("temperature-sweep",
                            [(r.temperature, r.w_over_d, r.t0) for r in rows],
                            {"strictly_decreasing": monotone})


def _switch_records(cfg: ExperimentConfig) -> list:
    p = cfg.params
    records = []
    for i, c in enumerate(p["configurations"]):
        g = TwoBasinGeometry(float(c["w1"]), float(c["d1"]), float(c["w2"]), float(c["d2"]),
                             p["radius"], p["t_high"])
        records.append(schedule.sweep_switch(
            g, p["t_high"], p["t_low"], p["multipliers"], cfg.trials,
            derive_seed(cfg.seed, i), config_id=c["id"],
            max_steps=cfg.max_steps or metropolis.DEFAULT_MAX_STEPS))
    return records


def _switch_sweep(cfg: ExperimentConfig) -> ExperimentResult:
    rows, per_config = [], []
    for rec in _switch_records(cfg):
        for j, (c, tau, m, se) in enumerate(zip(rec.multipliers, rec.taus, rec.measured, rec.stderrs)):
            rows.append((rec.config_id, rec.t_hat, c, tau, m, se, rec.baseline, j == rec.opt_index))
        per_config.append({"config_id": rec.config_id, "t_hat": rec.t_hat, "tau_opt": rec.tau_opt,
                           "c_opt": rec.c_opt, "best_mean": rec.best_mean,
                           "baseline": rec.baseline, "improvement_z": rec.improvement_z,
                           "interior": rec.interior})
    return ExperimentResult("switch-sweep", rows, {"configurations": per_config})


def _switch_fit(cfg: ExperimentConfig) -> ExperimentResult:
    if "points" in cfg.params:
        pts = [(f"pt{i:02d}", float(a), float(b)) for i, (a, b) in enumerate(cfg.params["points"])]
    else:
        pts = [(r.config_id, r.t_hat, float(r.tau_opt)) for r in _switch_records(cfg)]
    fit = schedule.quadratic_fit([p[1] for p in pts], [p[2] for p in pts])
    rho = spearmanr([p[1] for p in pts], [p[2] for p in pts]).statistic
    summary = {"a0": fit.a0, "a1": fit.a1, "a2": fit.a2, "r_squared": fit.r_squared,
               "spearman": float(rho), "reference": dict(schedule.REFERENCE_FIT)}
    return ExperimentResult("switch-fit", pts, summary)


DISPATCH = {
    "predict-single": _predict,
    "predict-two": _predict,
    "solve-exact": _solve_exact,
    "sim-discrete": _sim_discrete,
    "sim-continuous": _sim_continuous,
    "calibrate-k": _calibrate_k,
    "sweep-ratio": _sweep_ratio,
    "sweep-temperature": _sweep_temperature,
    "switch-sweep": _switch_sweep,
    "switch-fit": _switch_fit,
}


def default_output(cfg: ExperimentConfig) -> Path:
    return Path(cfg.output or f"{cfg.experiment}.{cfg.format}")


def run_experiment(cfg: ExperimentConfig) -> dict:
    """Run, write the table plus its emitted config, and return the summary."""
    result = DISPATCH[cfg.experiment](cfg)
    out = default_output(cfg)
    write_table(result.rows, result.schema, cfg.format, out, config_digest=cfg.digest, seed=cfg.seed)
    emitted = out.with_name(out.name + ".config.json")
    emitted.write_text(cfg.canonical_json(), encoding="utf-8")
    return {
        "experiment": cfg.experiment,
        "config_digest": cfg.digest,
        "seed": cfg.seed,
        "output": str(out),
        "config": str(emitted),
        "schema": result.schema,
        "schema_version": SCHEMA_VERSION,
        "columns": list(SCHEMAS[result.schema]),
        "rows": len(result.rows),
        "summary": result.summary,
    }


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if hasattr(obj, "item"):
        return _jsonable(obj.item())
    return obj


def _human(report: dict, indent: str = "") -> str:
    lines = []
    for k, v in report.items():
        if isinstance(v, dict):
            lines.append(f"{indent}{k}:")
            lines.append(_human(v, indent + "  "))
        else:
            lines.append(f"{indent}{k}: {v}")
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="anneal-lab",
        description="Hitting-time predictions and Metropolis experiments on basin landscapes.")
    ap.add_argument("experiment", choices=KINDS)
    ap.add_argument("--config", type=Path, help="JSON experiment config")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--trials", type=int)
    ap.add_argument("--out", help="output table path")
    ap.add_argument("--format", choices=("csv", "json"))
    ap.add_argument("--human", action="store_true", help="readable summary instead of JSON")
    return ap


def main(argv: Optional[list] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = parse_config(args.config, args.experiment, seed=args.seed, trials=args.trials,
                           output=args.out, format=args.format)
        report = _jsonable(run_experiment(cfg))
    except ConfigError as exc:
        return _fail(EXIT_CONFIG, "config", exc, args.experiment)
    except metropolis.AllTimeoutError as exc:
        return _fail(EXIT_TIMEOUT, "all-timeout", exc, args.experiment)
    except (analytic.SaturationError, calibrate.DegenerateFitError) as exc:
        return _fail(EXIT_SATURATION, "saturation", exc, args.experiment)
    except (ValueError, OSError) as exc:
        return _fail(EXIT_ERROR, type(exc).__name__, exc, args.experiment)
    if args.human:
        print(_human(report))
    else:
        print(json.dumps(report, sort_keys=True))
    return EXIT_OK


def _fail(code: int, kind: str, exc: Exception, experiment: str) -> int:
    print(json.dumps({"error": kind, "experiment": experiment, "message": str(exc),
                      "exit_code": code}), file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
