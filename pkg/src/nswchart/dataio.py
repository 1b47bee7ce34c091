"""CSV ingestion and emission, chart-point records, and scenario grids.

Numeric output uses 17 significant digits so a write-then-read round trip of
any float64 matrix is lossless and outputs are byte-identical across runs.
"""

from __future__ import annotations

import csv
import json

import numpy as np

from .monitor import SignalReport
from .simulate import ScenarioSpec
from .stats import ChartPoint

FLOAT_FMT = "%.17g"

CHART_RECORD_HEADER = "time,value,limit,signal,change_point,variables"

METRICS_COLUMNS = ("scheme", "model", "p", "W", "tau", "delta", "v", "DR", "CED", "CPE", "DRV", "FAP", "R", "seed")


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return FLOAT_FMT % value
    return str(value)


def read_matrix_csv(path: str, delimiter: str = ",") -> np.ndarray:
    """Read a numeric matrix; optional header row; empty fields or NaN are missing."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh, delimiter=delimiter))
    rows = [r for r in rows if r]
    if not rows:
        raise ValueError(f"{path}: empty file")
    start = 0
    try:
        _parse_row(rows[0])
    except ValueError:
        start = 1
        if len(rows) == 1:
            raise ValueError(f"{path}: header only, no data rows")
    width = len(rows[start])
    data = np.empty((len(rows) - start, width))
    for i, row in enumerate(rows[start:]):
        if len(row) != width:
            raise ValueError(f"{path}: row {start + i + 1} has {len(row)} fields, expected {width}")
        data[i] = _parse_row(row)
    return data


def _parse_row(row: list) -> list:
    out = []
    for field in row:
        field = field.strip()
        if field == "" or field.lower() == "nan":
            out.append(np.nan)
        else:
            out.append(float(field))
    return out


def write_matrix_csv(path: str, matrix: np.ndarray, header: list | None = None) -> None:
    matrix = np.asarray(matrix, dtype=float)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        if header is not None:
            fh.write(",".join(header) + "\n")
        for row in np.atleast_2d(matrix):
            fh.write(",".join("" if np.isnan(v) else FLOAT_FMT % v for v in row) + "\n")


def format_chart_record(cp: ChartPoint, h: float, report: SignalReport | None = None) -> str:
    """One line per chart point: time, value, limit, signal flag, diagnosis."""
    signal = report is not None
    change_point = str(report.change_point_estimate) if signal else ""
    variables = ";".join(str(v) for v in report.suspicious_variables) if signal else ""
    return ",".join(
        (str(cp.time_index_n), FLOAT_FMT % cp.value, FLOAT_FMT % h, str(int(signal)), change_point, variables)
    )


def parse_chart_record(line: str) -> dict:
    parts = line.rstrip("\n").split(",")
    if len(parts) != 6:
        raise ValueError(f"malformed chart record: {line!r}")
    return {
        "time": int(parts[0]),
        "value": float(parts[1]),
        "limit": float(parts[2]),
        "signal": bool(int(parts[3])),
        "change_point": int(parts[4]) if parts[4] else None,
        "variables": tuple(int(v) for v in parts[5].split(";")) if parts[5] else (),
    }


def write_metrics_csv(path: str, rows: list[dict]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(",".join(METRICS_COLUMNS) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(row.get(col)) for col in METRICS_COLUMNS) + "\n")


def read_metrics_csv(path: str) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


# -- scenario grids ----------------------------------------------------------
#
# A grid file is JSON: either {"scenarios": [{...}, ...]} with explicit
# scenario objects, or a single object of lists that is expanded as a full
# cross product, e.g. {"model": ["I"], "p": [20, 100], "W": [40], ...}.
# Scalar fields apply to every scenario. Optional calibration settings ride
# along under "limit": {"alpha": ..., "B": ..., "seed": ..., "pool": ...}.

_SCENARIO_FIELDS = ("model", "p", "W", "tau", "delta", "v", "horizon_n", "replications_R", "seed")
_SCENARIO_DEFAULTS = {"horizon_n": 100, "replications_R": 1000, "seed": 0}


def _scenario_from_dict(d: dict) -> ScenarioSpec:
    unknown = set(d) - set(_SCENARIO_FIELDS)
    if unknown:
        raise ValueError(f"unknown scenario fields: {sorted(unknown)}")
    merged = {**_SCENARIO_DEFAULTS, **d}
    missing = [f for f in ("model", "p", "W", "tau", "delta", "v") if f not in merged]
    if missing:
        raise ValueError(f"scenario is missing fields: {missing}")
    return ScenarioSpec(
        model=str(merged["model"]),
        p=int(merged["p"]),
        W=int(merged["W"]),
        tau=int(merged["tau"]),
        delta=float(merged["delta"]),
        sparsity_v=float(merged["v"]),
        horizon_n=int(merged["horizon_n"]),
        replications_R=int(merged["replications_R"]),
        seed=int(merged["seed"]),
    )


def load_scenario_grid(path: str) -> tuple[list[ScenarioSpec], dict]:
    """Parse a grid file; returns (scenarios, calibration settings)."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict):
        raise ValueError(f"{path}: grid file must hold a JSON object")
    limit_settings = {"limit": doc.pop("limit", {}), "dfewma": doc.pop("dfewma", {})}
    if "scenarios" in doc:
        specs = [_scenario_from_dict(entry) for entry in doc["scenarios"]]
    else:
        lists = {k: v if isinstance(v, list) else [v] for k, v in doc.items()}
        specs = []
        keys = list(lists)
        counts = [len(lists[k]) for k in keys]
        total = int(np.prod(counts)) if keys else 0
        for flat in range(total):
            entry = {}
            rem = flat
            for k, c in zip(reversed(keys), reversed(counts)):
                entry[k] = lists[k][rem % c]
                rem //= c
            specs.append(_scenario_from_dict(entry))
    if not specs:
        raise ValueError(f"{path}: grid contains no scenarios")
    return specs, limit_settings
