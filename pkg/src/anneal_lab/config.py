"""Experiment configuration: JSON parsing, validation, defaults and digests."""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional, Union

from .landscape import GeometryError, SingleBasinGeometry, TwoBasinGeometry

KINDS = (
    "predict-single", "predict-two", "solve-exact", "sim-discrete", "sim-continuous",
    "calibrate-k", "sweep-ratio", "sweep-temperature", "switch-sweep", "switch-fit",
)
FORMATS = ("csv", "json")

COMMON_KEYS = ("experiment", "seed", "trials", "max_steps", "output", "format")
KIND_KEYS = {
    "predict-single": ("geometry", "chain", "start", "printed_form_check"),
    "predict-two": ("geometry", "chain", "start"),
    "solve-exact": ("geometry", "chain", "start"),
    "sim-discrete": ("geometry", "chain", "start"),
    "sim-continuous": ("geometry", "x0", "schedule"),
    "calibrate-k": ("geometry", "target", "k_range"),
    "sweep-ratio": ("geometry", "depths", "ratios", "k_range"),
    "sweep-temperature": ("w1", "w2", "radius", "wd_ratios", "temperatures"),
    "switch-sweep": ("configurations", "radius", "t_high", "t_low", "multipliers"),
    "switch-fit": ("configurations", "radius", "t_high", "t_low", "multipliers", "points"),
}
DEFAULT_TRIALS = 2000

SINGLE_KEYS = ("width", "depth", "radius", "temperature")
TWO_KEYS = ("w1", "d1", "w2", "d2", "radius", "temperature")


class ConfigError(ValueError):
    """Invalid experiment configuration; the message names the offending key."""


def _number(value: Any, key: str, *, positive: bool = False, nonneg: bool = False) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ConfigError(f"{key!r} must be a finite number, got {value!r}")
    if positive and value <= 0:
        raise ConfigError(f"{key!r} must be positive, got {value!r}")
    if nonneg and value < 0:
        raise ConfigError(f"{key!r} must be non-negative, got {value!r}")
    return value


def _integer(value: Any, key: str, *, minimum: Optional[int] = None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{key!r} must be an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ConfigError(f"{key!r} must be >= {minimum}, got {value!r}")
    return value


def _number_list(value: Any, key: str, *, positive: bool = True, min_len: int = 1) -> list:
    if not isinstance(value, list) or len(value) < min_len:
        raise ConfigError(f"{key!r} must be a list of at least {min_len} number(s)")
    return [_number(v, f"{key}[{i}]", positive=positive) for i, v in enumerate(value)]


def _mapping(value: Any, key: str) -> dict:
    if not isinstance(value, dict):
        raise ConfigError(f"{key!r} must be an object")
    return value


def _check_keys(block: dict, allowed, where: str) -> None:
    for k in block:
        if k not in allowed:
            raise ConfigError(f"unknown key {where}{k!r}; allowed: {', '.join(allowed)}")


def _geometry_block(raw: Any, key: str = "geometry", model: Optional[str] = None) -> dict:
    block = dict(_mapping(raw, key))
    inferred = "two" if "w1" in block else "single"
    block.setdefault("model", model or inferred)
    if block["model"] not in ("single", "two"):
        raise ConfigError(f"'{key}.model' must be 'single' or 'two', got {block['model']!r}")
    if model is not None and block["model"] != model:
        raise ConfigError(f"'{key}.model' must be {model!r} for this experiment")
    names = SINGLE_KEYS if block["model"] == "single" else TWO_KEYS
    _check_keys(block, ("model",) + names, f"in {key}: ")
    block.setdefault("radius", 1.0)
    for name in names:
        if name not in block:
            raise ConfigError(f"missing required key '{key}.{name}' ({name})")
        _number(block[name], f"{key}.{name}")
    try:
        geometry_from_block(block)
    except GeometryError as exc:
        raise ConfigError(f"invalid '{key}': {exc}") from None
    return block


def geometry_from_block(block: dict) -> Union[SingleBasinGeometry, TwoBasinGeometry]:
    if block["model"] == "single":
        return SingleBasinGeometry(*(float(block[k]) for k in SINGLE_KEYS))
    return TwoBasinGeometry(*(float(block[k]) for k in TWO_KEYS))


def _chain_block(raw: Any, model: Optional[str]) -> dict:
    block = dict(_mapping(raw, "chain"))
    block.setdefault("model", model or ("two" if "M" in block else "single"))
    if model is not None and block["model"] != model:
        raise ConfigError(f"'chain.model' must be {model!r} for this experiment")
    if block["model"] == "single":
        _check_keys(block, ("model", "N", "p"), "in chain: ")
        for k in ("N", "p"):
            if k not in block:
                raise ConfigError(f"missing required key 'chain.{k}' ({k})")
        _integer(block["N"], "chain.N", minimum=1)
        p = _number(block["p"], "chain.p", positive=True)
        if p > 0.5:
            raise ConfigError(f"'chain.p' must lie in (0, 0.5], got {p}")
        return block
    if block["model"] != "two":
        raise ConfigError(f"'chain.model' must be 'single' or 'two', got {block['model']!r}")
    _check_keys(block, ("model", "M", "N", "R", "p", "q"), "in chain: ")
    for k in ("M", "p", "q"):
        if k not in block:
            raise ConfigError(f"missing required key 'chain.{k}' ({k})")
    M = _integer(block["M"], "chain.M", minimum=1)
    if "R" in block:
        R = _integer(block.pop("R"), "chain.R", minimum=1)
        if "N" in block and block["N"] != M + R:
            raise ConfigError("'chain.N' must equal M + R")
        block["N"] = M + R
    if "N" not in block:
        raise ConfigError("missing required key 'chain.N' (N, or R = N - M)")
    _integer(block["N"], "chain.N", minimum=M + 1)
    for k in ("p", "q"):
        v = _number(block[k], f"chain.{k}", nonneg=(k == "q"), positive=(k == "p"))
        if v > 0.5:
            raise ConfigError(f"'chain.{k}' must lie in [0, 0.5], got {v}")
    return block


def _configurations(raw: Any) -> list:
    if not isinstance(raw, list) or not raw:
        raise ConfigError("'configurations' must be a non-empty list")
    out, seen = [], set()
    for i, item in enumerate(raw):
        item = dict(_mapping(item, f"configurations[{i}]"))
        _check_keys(item, ("id", "w1", "d1", "w2", "d2"), f"in configurations[{i}]: ")
        item.setdefault("id", f"cfg{i:02d}")
        if not isinstance(item["id"], str) or item["id"] in seen:
            raise ConfigError(f"'configurations[{i}].id' must be a unique string")
        seen.add(item["id"])
        for k in ("w1", "d1", "w2", "d2"):
            if k not in item:
                raise ConfigError(f"missing required key 'configurations[{i}].{k}' ({k})")
            _number(item[k], f"configurations[{i}].{k}", positive=k.startswith("w"), nonneg=True)
        out.append(item)
    return out


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    seed: int = 0
    trials: int = DEFAULT_TRIALS
    max_steps: Optional[int] = None
    output: Optional[str] = None
    format: str = "csv"
    params: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in COMMON_KEYS}
        d.update(self.params)
        return d

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1) + "\n"

    @property
    def digest(self) -> str:
        """SHA-256 over the canonical content, excluding the output path."""
        d = self.to_dict()
        d.pop("output")
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def with_overrides(self, **overrides) -> "ExperimentConfig":
        d = self.to_dict()
        d.update({k: v for k, v in overrides.items() if v is not None})
        return validate(d)


def _validate_params(kind: str, raw: dict) -> dict:
    p = {}
    if kind in ("predict-single", "predict-two", "solve-exact", "sim-discrete"):
        model = {"predict-single": "single", "predict-two": "two"}.get(kind)
        if ("geometry" in raw) == ("chain" in raw):
            raise ConfigError("exactly one of 'geometry' or 'chain' is required")
        if "geometry" in raw:
            p["geometry"] = _geometry_block(raw["geometry"], model=model)
        else:
            p["chain"] = _chain_block(raw["chain"], model)
        p["start"] = _integer(raw.get("start", 0), "start", minimum=0)
        if kind == "predict-single":
            flag = raw.get("printed_form_check", False)
            if not isinstance(flag, bool):
                raise ConfigError("'printed_form_check' must be true or false")
            p["printed_form_check"] = flag
    elif kind == "sim-continuous":
        if "geometry" not in raw:
            raise ConfigError("missing required key 'geometry'")
        p["geometry"] = _geometry_block(raw["geometry"])
        p["x0"] = _number(raw.get("x0", 0.0), "x0")
        sched = raw.get("schedule")
        if sched is not None:
            if not isinstance(sched, list) or not sched:
                raise ConfigError("'schedule' must be a list of [duration|null, temperature] pairs")
            for i, seg in enumerate(sched):
                if not (isinstance(seg, list) and len(seg) == 2):
                    raise ConfigError(f"'schedule[{i}]' must be [duration|null, temperature]")
                if seg[0] is not None:
                    _integer(seg[0], f"schedule[{i}][0]", minimum=0)
                _number(seg[1], f"schedule[{i}][1]", positive=True)
            if sched[-1][0] is not None or any(s[0] is None for s in sched[:-1]):
                raise ConfigError("'schedule' needs exactly one null duration, in the last segment")
        p["schedule"] = sched
    elif kind == "calibrate-k":
        if "geometry" not in raw:
            raise ConfigError("missing required key 'geometry'")
        p["geometry"] = _geometry_block(raw["geometry"])
        target = raw.get("target")
        p["target"] = None if target is None else _number(target, "target", positive=True)
        p["k_range"] = _k_range(raw.get("k_range", [1.0, 3.0]))
    elif kind == "sweep-ratio":
        if "geometry" not in raw:
            raise ConfigError("missing required key 'geometry'")
        p["geometry"] = _geometry_block(raw["geometry"])
        if ("depths" in raw) == ("ratios" in raw):
            raise ConfigError("exactly one of 'depths' or 'ratios' is required")
        if "depths" in raw:
            p["depths"] = _number_list(raw["depths"], "depths")
        else:
            p["ratios"] = _number_list(raw["ratios"], "ratios")
        p["k_range"] = _k_range(raw.get("k_range", [1.0, 3.0]))
    elif kind == "sweep-temperature":
        for k in ("w1", "wd_ratios", "temperatures"):
            if k not in raw:
                raise ConfigError(f"missing required key {k!r}")
        p["w1"] = _number(raw["w1"], "w1", positive=True)
        p["w2"] = _number(raw.get("w2", raw["w1"]), "w2", positive=True)
        p["radius"] = _number(raw.get("radius", 1.0), "radius", positive=True)
        p["wd_ratios"] = _number_list(raw["wd_ratios"], "wd_ratios")
        p["temperatures"] = _number_list(raw["temperatures"], "temperatures")
        for w in ("w1", "w2"):
            if p[w] / (2 * p["radius"]) < 1:
                raise ConfigError(f"{w!r} is too narrow for the radius (w/(2r) < 1)")
    else:  # switch-sweep, switch-fit
        p["radius"] = _number(raw.get("radius", 1.0), "radius", positive=True)
        p["t_high"] = _number(raw.get("t_high", 10.0), "t_high", positive=True)
        p["t_low"] = _number(raw.get("t_low", 3.0), "t_low", positive=True)
        from .schedule import DEFAULT_MULTIPLIERS
        p["multipliers"] = _number_list(raw.get("multipliers", list(DEFAULT_MULTIPLIERS)),
                                        "multipliers")
        if kind == "switch-fit" and "points" in raw:
            pts = raw["points"]
            if not isinstance(pts, list) or len(pts) < 3:
                raise ConfigError("'points' must be a list of at least 3 [t_hat, tau] pairs")
            for i, pt in enumerate(pts):
                if not (isinstance(pt, list) and len(pt) == 2):
                    raise ConfigError(f"'points[{i}]' must be a [t_hat, tau] pair")
                _number(pt[0], f"points[{i}][0]")
                _number(pt[1], f"points[{i}][1]")
            p["points"] = pts
            if "configurations" in raw:
                raise ConfigError("give either 'points' or 'configurations', not both")
        else:
            if "configurations" not in raw:
                raise ConfigError("missing required key 'configurations'")
            p["configurations"] = _configurations(raw["configurations"])
            for c in p["configurations"]:
                for w in ("w1", "w2"):
                    if c[w] / (2 * p["radius"]) < 1:
                        raise ConfigError(f"configuration {c['id']!r}: {w!r} too narrow for the radius")
    return p


def _k_range(raw: Any) -> list:
    rng = _number_list(raw, "k_range", min_len=2)
    if len(rng) != 2 or rng[0] > rng[1]:
        raise ConfigError("'k_range' must be [low, high] with low <= high")
    return rng


def validate(raw: Any, kind: Optional[str] = None) -> ExperimentConfig:
    """Validate a decoded JSON object and fill defaults."""
    raw = dict(_mapping(raw, "config"))
    exp = raw.get("experiment", kind)
    if exp is None:
        raise ConfigError(f"missing 'experiment'; valid kinds: {', '.join(KINDS)}")
    if exp not in KINDS:
        raise ConfigError(f"unknown experiment kind {exp!r}; valid kinds: {', '.join(KINDS)}")
    if kind is not None and exp != kind:
        raise ConfigError(f"config is for {exp!r} but {kind!r} was requested")
    _check_keys(raw, COMMON_KEYS + KIND_KEYS[exp], "")
    seed = _integer(raw.get("seed", 0), "seed", minimum=0)
    if seed >= 2**64:
        raise ConfigError("'seed' must fit in 64 bits")
    trials = _integer(raw.get("trials", DEFAULT_TRIALS), "trials", minimum=1)
    max_steps = raw.get("max_steps")
    if max_steps is not None:
        max_steps = _integer(max_steps, "max_steps", minimum=1)
    fmt = raw.get("format", "csv")
    if fmt not in FORMATS:
        raise ConfigError(f"'format' must be one of {FORMATS}, got {fmt!r}")
    output = raw.get("output")
    if output is not None and not isinstance(output, str):
        raise ConfigError("'output' must be a path string")
    params = _validate_params(exp, {k: v for k, v in raw.items() if k not in COMMON_KEYS})
    return ExperimentConfig(exp, seed, trials, max_steps, output, fmt, params)


def parse_config(path: Union[str, Path, None] = None, kind: Optional[str] = None,
                 **overrides) -> ExperimentConfig:
    """Load a JSON config file (or start empty) and apply command-line overrides."""
    raw: dict = {}
    if path is not None:
        try:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
        raw = _mapping(raw, "config")
    raw = dict(raw)
    raw.update({k: v for k, v in overrides.items() if v is not None})
    return validate(raw, kind)
