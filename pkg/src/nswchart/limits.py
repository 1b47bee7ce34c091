"""Bootstrap calibration of the chart control limit for a target false-alarm probability.

The limit for a window of size W monitored over a horizon of n observations at
step s is the (1 - alpha)^Q empirical quantile of B bootstrap charting
statistics, Q = 1 / (floor((n - W) / s) + 1), so that the per-window exceedance
probability compounds to roughly alpha over the horizon. Bootstrap windows are
drawn with replacement from a reference sample of in-control observations.
"""

from __future__ import annotations

import hashlib
import math
import os
import warnings
from dataclasses import dataclass

import numpy as np

from .stats import MIN_SAMPLE, check_observations, window_chart_values_batch

DEFAULT_POOL_SIZE = 1000
CACHE_DIR_ENV = "NSWCHART_CACHE_DIR"
CACHE_FILENAME = "limits.txt"


@dataclass(frozen=True)
class LimitConfig:
    """Calibration parameters: target FAP, bootstrap size, and monitoring layout."""

    fap_alpha: float
    bootstrap_B: int
    horizon_n: int
    window_W: int
    step_s: int
    seed: int

    def __post_init__(self):
        if not 0.0 < self.fap_alpha < 1.0:
            raise ValueError(f"fap_alpha must be in (0, 1), got {self.fap_alpha}")
        if self.bootstrap_B < 1:
            raise ValueError(f"bootstrap_B must be >= 1, got {self.bootstrap_B}")
        if not MIN_SAMPLE <= self.window_W <= self.horizon_n:
            raise ValueError(
                f"window_W must satisfy {MIN_SAMPLE} <= W <= horizon_n, got W={self.window_W}, n={self.horizon_n}"
            )
        if self.step_s < 1:
            raise ValueError(f"step_s must be >= 1, got {self.step_s}")
        if self.seed < 0:
            raise ValueError(f"seed must be nonnegative, got {self.seed}")


@dataclass(frozen=True)
class ControlLimit:
    """Calibrated limit together with everything needed to reproduce it."""

    h: float
    config: LimitConfig
    quantile_level: float
    source_fingerprint: str


def quantile_exponent(n: int, w: int, s: int) -> float:
    """Exponent Q = 1 / (floor((n - W) / s) + 1) applied to 1 - alpha."""
    if w > n:
        raise ValueError(f"window W={w} exceeds horizon n={n}")
    if s < 1:
        raise ValueError(f"step s must be >= 1, got {s}")
    return 1.0 / (math.floor((n - w) / s) + 1)


def empirical_quantile(values: np.ndarray, level: float) -> float:
    """Lowest order statistic whose empirical CDF reaches ``level``.

    Sorts ascending and returns the 1-based index ceil(level * B); this exact
    rule is part of the calibration contract, so cached limits reproduce
    bit-for-bit.
    """
    if not 0.0 < level < 1.0:
        raise ValueError(f"quantile level must be in (0, 1), got {level}")
    values = np.asarray(values, dtype=float)
    if values.ndim != 1 or values.size == 0:
        raise ValueError("values must be a non-empty 1-D array")
    b = values.size
    order = min(b, max(1, math.ceil(level * b)))
    return float(np.sort(values)[order - 1])


def reference_fingerprint(reference: np.ndarray) -> str:
    """Short digest of a reference sample, keyed on shape and raw float64 bytes."""
    arr = np.ascontiguousarray(reference, dtype=float)
    digest = hashlib.sha256()
    digest.update(str(arr.shape).encode())
    digest.update(arr.tobytes())
    return digest.hexdigest()[:16]


def standard_normal_reference(p: int, size: int = DEFAULT_POOL_SIZE, seed: int = 0) -> np.ndarray:
    """Default in-control reference pool for simulation studies."""
    return np.random.default_rng(seed).standard_normal((size, p))


def _bootstrap_indices(cfg: LimitConfig, n_ref: int) -> np.ndarray:
    """Window row indices for every replicate, one RNG substream per replicate.

    Substreams are keyed by (seed, replicate), so replicates may be evaluated
    in any order (or concurrently) with a result identical to sequential
    execution.
    """
    idx = np.empty((cfg.bootstrap_B, cfg.window_W), dtype=np.int64)
    for b in range(cfg.bootstrap_B):
        rng = np.random.default_rng(np.random.SeedSequence(entropy=cfg.seed, spawn_key=(b,)))
        idx[b] = rng.integers(0, n_ref, size=cfg.window_W)
    return idx


def bootstrap_statistics(reference: np.ndarray, cfg: LimitConfig, chunk: int = 1000) -> np.ndarray:
    """Charting statistic of each bootstrap window drawn from ``reference``."""
    reference = check_observations(reference)
    idx = _bootstrap_indices(cfg, reference.shape[0])
    stats = np.empty(cfg.bootstrap_B)
    for lo in range(0, cfg.bootstrap_B, chunk):
        hi = min(lo + chunk, cfg.bootstrap_B)
        stats[lo:hi] = window_chart_values_batch(reference[idx[lo:hi]])
    return stats


def bootstrap_control_limit(reference: np.ndarray, cfg: LimitConfig) -> ControlLimit:
    """Calibrate the control limit from a reference sample per the bootstrap recipe.

    Deterministic given (reference, cfg). An all-constant reference yields
    h = 0 and a warning: such a chart signals on any variation at all.
    """
    stats = bootstrap_statistics(reference, cfg)
    level = (1.0 - cfg.fap_alpha) ** quantile_exponent(cfg.horizon_n, cfg.window_W, cfg.step_s)
    h = empirical_quantile(stats, level)
    if h == 0.0:
        warnings.warn("degenerate reference sample: control limit is 0, the chart will always signal")
    return ControlLimit(
        h=h,
        config=cfg,
        quantile_level=level,
        source_fingerprint=reference_fingerprint(reference),
    )


# -- plain-text cache -------------------------------------------------------
#
# One record per line, space-separated key=value pairs. Floats are stored via
# repr() so a cache round-trip is bit-exact.

_CACHE_FIELDS = ("p", "W", "s", "n", "alpha", "B", "seed", "fingerprint", "level", "h")


def default_cache_path() -> str:
    return os.path.join(os.environ.get(CACHE_DIR_ENV, "."), CACHE_FILENAME)


def _record_line(p: int, limit: ControlLimit) -> str:
    cfg = limit.config
    fields = {
        "p": p,
        "W": cfg.window_W,
        "s": cfg.step_s,
        "n": cfg.horizon_n,
        "alpha": repr(cfg.fap_alpha),
        "B": cfg.bootstrap_B,
        "seed": cfg.seed,
        "fingerprint": limit.source_fingerprint,
        "level": repr(limit.quantile_level),
        "h": repr(limit.h),
    }
    return " ".join(f"{k}={fields[k]}" for k in _CACHE_FIELDS)


def _parse_record(line: str) -> dict | None:
    parts = line.split()
    if not parts:
        return None
    rec = {}
    for part in parts:
        key, _, value = part.partition("=")
        if not _ or key not in _CACHE_FIELDS:
            return None
        rec[key] = value
    if set(rec) != set(_CACHE_FIELDS):
        return None
    return rec


def append_limit(path: str, p: int, limit: ControlLimit) -> None:
    """Append one calibrated limit record to the cache file."""
    with open(path, "a", encoding="ascii") as fh:
        fh.write(_record_line(p, limit) + "\n")


def _record_to_limit(rec: dict) -> ControlLimit:
    cfg = LimitConfig(
        fap_alpha=float(rec["alpha"]),
        bootstrap_B=int(rec["B"]),
        horizon_n=int(rec["n"]),
        window_W=int(rec["W"]),
        step_s=int(rec["s"]),
        seed=int(rec["seed"]),
    )
    return ControlLimit(
        h=float(rec["h"]),
        config=cfg,
        quantile_level=float(rec["level"]),
        source_fingerprint=rec["fingerprint"],
    )


def find_limit(path: str, p: int, w: int, s: int, **exact) -> ControlLimit | None:
    """Latest cached limit matching (p, W, s) plus any extra exact key matches.

    ``exact`` may pin any of alpha, n, B, seed, fingerprint (values compared
    after parsing, so alpha=0.01 matches a repr()-stored 0.01).
    """
    if not os.path.exists(path):
        return None
    match = None
    with open(path, encoding="ascii") as fh:
        for line in fh:
            rec = _parse_record(line.strip())
            if rec is None:
                continue
            if int(rec["p"]) != p or int(rec["W"]) != w or int(rec["s"]) != s:
                continue
            ok = True
            for key, want in exact.items():
                have = rec[key]
                if key in ("alpha",):
                    ok = float(have) == float(want)
                elif key in ("n", "B", "seed"):
                    ok = int(have) == int(want)
                else:
                    ok = have == str(want)
                if not ok:
                    break
            if ok:
                match = rec
    return _record_to_limit(match) if match is not None else None


def get_or_compute_limit(cache_path: str | None, reference: np.ndarray, cfg: LimitConfig) -> ControlLimit:
    """Look the limit up in the cache, calibrating and appending on a miss."""
    p = reference.shape[1]
    fingerprint = reference_fingerprint(reference)
    if cache_path:
        cached = find_limit(
            cache_path,
            p,
            cfg.window_W,
            cfg.step_s,
            alpha=cfg.fap_alpha,
            n=cfg.horizon_n,
            B=cfg.bootstrap_B,
            seed=cfg.seed,
            fingerprint=fingerprint,
        )
        if cached is not None:
            return cached
    limit = bootstrap_control_limit(reference, cfg)
    if cache_path:
        append_limit(cache_path, p, limit)
    return limit
