"""Figure rendering for CLI report paths; everything is written to files."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def save_chart_figure(times, values, h: float, path: str, signal_time: int | None = None, title: str = "") -> str:
    """Control-chart view: statistic series, limit line, optional alarm marker."""
    times = np.asarray(times)
    values = np.asarray(values)
    fig, ax = plt.subplots(figsize=(8, 4))
    ax.plot(times, values, marker="o", ms=3, lw=1, color="tab:blue", label="charting statistic")
    ax.axhline(h, color="tab:red", ls="--", lw=1, label=f"control limit h = {h:.3g}")
    if signal_time is not None:
        ax.axvline(signal_time, color="tab:orange", ls=":", lw=1.5, label=f"signal at n = {signal_time}")
    ax.set_xlabel("time index n")
    ax.set_ylabel("window statistic")
    if title:
        ax.set_title(title)
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_acf_figure(acf_values, path: str, n_points: int, title: str = "") -> str:
    """Stem plot of autocorrelations with the white-noise +-3/sqrt(m) band."""
    acf_values = np.asarray(acf_values)
    lags = np.arange(1, acf_values.size + 1)
    band = 3.0 / np.sqrt(n_points)
    fig, ax = plt.subplots(figsize=(6, 4))
    markerline, stemlines, _ = ax.stem(lags, acf_values)
    plt.setp(markerline, markersize=4)
    plt.setp(stemlines, linewidth=1)
    ax.axhline(0, color="black", lw=0.8)
    ax.axhline(band, color="gray", ls="--", lw=0.8)
    ax.axhline(-band, color="gray", ls="--", lw=0.8)
    ax.set_xlabel("lag")
    ax.set_ylabel("autocorrelation")
    ax.set_xticks(lags)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_metrics_figure(rows: list[dict], path: str) -> str:
    """DR and CED against shift size, one line per (scheme, model, p, W, tau, v) group."""
    groups: dict[tuple, list[dict]] = {}
    for row in rows:
        key = (row.get("scheme"), row.get("model"), row.get("p"), row.get("W"), row.get("tau"), row.get("v"))
        groups.setdefault(key, []).append(row)
    fig, (ax_dr, ax_ced) = plt.subplots(1, 2, figsize=(10, 4))
    for key, entries in sorted(groups.items(), key=str):
        entries = sorted(entries, key=lambda r: float(r["delta"]))
        deltas = [float(r["delta"]) for r in entries]
        label = f"{key[0]} {key[1]} p={key[2]} W={key[3]}"
        ax_dr.plot(deltas, [float(r["DR"]) for r in entries], marker="o", ms=4, label=label)
        ced_pts = [(d, float(r["CED"])) for d, r in zip(deltas, entries) if r.get("CED") not in (None, "")]
        if ced_pts:
            ax_ced.plot(*zip(*ced_pts), marker="s", ms=4, label=label)
    ax_dr.set_xlabel("shift size")
    ax_dr.set_ylabel("detection rate")
    ax_dr.set_ylim(-0.02, 1.02)
    ax_ced.set_xlabel("shift size")
    ax_ced.set_ylabel("detection delay (CED)")
    ax_dr.legend(fontsize=7, loc="best")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
