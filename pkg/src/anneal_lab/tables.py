"""Fixed-schema CSV/JSON writers for experiment outputs."""
from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence, Union

SCHEMA_VERSION = 1

SCHEMAS: dict[str, tuple[str, ...]] = {
    "hitting-times": ("state", "expected_steps", "method"),
    "trials": ("trial", "steps", "absorbed"),
    "ratio-sweep": ("ratio", "t_discrete", "t_continuous", "rel_error", "k_opt",
                    "trials", "timeouts", "stderr"),
    "temperature-sweep": ("temperature", "w_over_d", "t0"),
    "switch-sweep": ("config_id", "t_hat", "c", "tau", "mean_T0", "stderr", "baseline", "is_opt"),
    "switch-fit": ("config_id", "t_hat", "tau_opt"),
}

Row = Union[Mapping[str, Any], Sequence[Any]]


def _cell(v: Any) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, ".17g")
    return str(v)


def _json_value(v: Any) -> Any:
    if isinstance(v, float) and not math.isfinite(v):
        return None
    if hasattr(v, "item"):  # numpy scalar
        return _json_value(v.item())
    return v


def _as_mapping(row: Row, columns: Sequence[str]) -> dict:
    if isinstance(row, Mapping):
        missing = [c for c in columns if c not in row]
        extra = [k for k in row if k not in columns]
        if missing or extra:
            raise ValueError(f"row does not match schema: missing={missing}, extra={extra}")
        return {c: row[c] for c in columns}
    if len(row) != len(columns):
        raise ValueError(f"row has {len(row)} fields, schema has {len(columns)}")
    return dict(zip(columns, row))


def render_table(rows: Iterable[Row], schema: str, fmt: str = "csv", *,
                 config_digest: str = "", seed: Any = None) -> str:
    """Serialise rows; CSV carries a ``#`` metadata line above the header."""
    if schema not in SCHEMAS:
        raise KeyError(f"unknown schema {schema!r}")
    columns = SCHEMAS[schema]
    records = [_as_mapping(r, columns) for r in rows]
    if fmt == "csv":
        buf = io.StringIO(newline="")
        buf.write(f"# schema={schema} schema_version={SCHEMA_VERSION} "
                  f"config_digest={config_digest} seed={seed}\r\n")
        writer = csv.writer(buf, lineterminator="\r\n")
        writer.writerow(columns)
        for rec in records:
            writer.writerow([_cell(rec[c]) for c in columns])
        return buf.getvalue()
    if fmt == "json":
        doc = {
            "schema": {"name": schema, "version": SCHEMA_VERSION, "columns": list(columns)},
            "config_digest": config_digest,
            "seed": seed,
            "rows": [{c: _json_value(rec[c]) for c in columns} for rec in records],
        }
        return json.dumps(doc, indent=1, allow_nan=False) + "\n"
    raise ValueError(f"unknown format {fmt!r} (expected 'csv' or 'json')")


def write_table(rows: Iterable[Row], schema: str, fmt: str, path: Union[str, Path], *,
                config_digest: str = "", seed: Any = None) -> Path:
    path = Path(path)
    text = render_table(rows, schema, fmt, config_digest=config_digest, seed=seed)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(text)
    return path


def read_csv_table(path: Union[str, Path]) -> tuple[dict, list[dict]]:
    """Metadata and rows (as strings) of a CSV written by :func:`write_table`."""
    with open(path, newline="", encoding="utf-8") as fh:
        first = fh.readline().lstrip("#").split()
        meta = dict(item.split("=", 1) for item in first)
        rows = list(csv.DictReader(fh))
    return meta, rows
