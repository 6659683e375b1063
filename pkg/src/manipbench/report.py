"""Result aggregation: summary CSVs, plot-data tables, and rendered figures.

Reads every results_*.csv under a results directory, keeps the best net per
cell over hidden-layer configurations, joins against the ideal baselines, and
writes per-(method, info) summaries with the net/ideal profitability ratio
(the ratio gets a sentinel when the ideal mean is effectively zero). Bar
charts of profitability and of the ratio, plus size-sweep curves when several
hidden configurations are present, are rendered alongside the CSVs.
"""

from __future__ import annotations

import csv
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

RATIO_SENTINEL = "NA"
IDEAL_FLOOR = 1e-6

SUMMARY_COLUMNS = [
    "model",
    "method",
    "info",
    "labeling",
    "mean_profitability",
    "best_hidden",
    "ideal_profitability",
    "ratio",
]


def read_result_rows(results_dir: str | Path) -> list[dict]:
    rows: list[dict] = []
    paths = sorted(Path(results_dir).glob("results_*.csv"))
    if not paths:
        raise FileNotFoundError(f"no results_*.csv files under {results_dir}")
    for path in paths:
        with open(path, newline="") as fh:
            for row in csv.DictReader(fh):
                row["mean_profitability"] = float(row["mean_profitability"])
                row["sem"] = float(row["sem"])
                row["n"] = int(row["n"])
                row["m"] = int(row["m"])
                rows.append(row)
    return rows


def best_net_cells(rows: list[dict]) -> dict[tuple, dict]:
    """Best net row per (model, method, n, m, info, labeling) over sizes."""
    best: dict[tuple, dict] = {}
    for row in rows:
        if row["policy"] != "net":
            continue
        key = (row["model"], row["method"], row["n"], row["m"], row["info"], row["labeling"])
        if key not in best or row["mean_profitability"] > best[key]["mean_profitability"]:
            best[key] = row
    return best


def ideal_cells(rows: list[dict]) -> dict[tuple, dict]:
    return {
        (row["model"], row["method"], row["n"], row["m"]): row
        for row in rows
        if row["policy"] == "ideal"
    }


def summarize(rows: list[dict]) -> list[dict]:
    """Per-(model, method, info, labeling) averages of the best-over-sizes net
    profitability and the matching ideal baseline, with their ratio."""
    best = best_net_cells(rows)
    ideal = ideal_cells(rows)
    grouped: dict[tuple, list[tuple[dict, dict | None]]] = defaultdict(list)
    for key, row in best.items():
        model, method, n, m, info, labeling = key
        grouped[(model, method, info, labeling)].append((row, ideal.get((model, method, n, m))))
    summary = []
    for (model, method, info, labeling), pairs in sorted(grouped.items()):
        net_mean = float(np.mean([p[0]["mean_profitability"] for p in pairs]))
        ideal_rows = [p[1] for p in pairs if p[1] is not None]
        hidden = sorted({p[0]["hidden_config"] for p in pairs})
        entry = {
            "model": model,
            "method": method,
            "info": info,
            "labeling": labeling,
            "mean_profitability": net_mean,
            "best_hidden": "|".join(hidden),
            "ideal_profitability": "",
            "ratio": RATIO_SENTINEL,
        }
        if ideal_rows:
            ideal_mean = float(np.mean([r["mean_profitability"] for r in ideal_rows]))
            entry["ideal_profitability"] = ideal_mean
            if ideal_mean >= IDEAL_FLOOR:
                entry["ratio"] = net_mean / ideal_mean
        summary.append(entry)
    return summary


def _write_csv(path: Path, columns: list[str], rows: list[dict]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns)
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


def _bar_figure(summary: list[dict], ideal_by_method: dict, value_key: str, title: str, path: Path) -> None:
    methods = sorted({s["method"] for s in summary})
    infos = sorted({s["info"] for s in summary})
    width = 0.8 / max(len(infos) + 1, 1)
    fig, ax = plt.subplots(figsize=(max(7, 1.4 * len(methods)), 4.2))
    x = np.arange(len(methods))
    for j, info in enumerate(infos):
        vals = []
        for meth in methods:
            match = [
                s for s in summary if s["method"] == meth and s["info"] == info
            ]
            v = match[0][value_key] if match else None
            vals.append(v if isinstance(v, (int, float)) else np.nan)
        ax.bar(x + j * width, vals, width, label=info)
    if value_key == "mean_profitability" and ideal_by_method:
        vals = [ideal_by_method.get(meth, np.nan) for meth in methods]
        ax.bar(x + len(infos) * width, vals, width, color="black", label="ideal")
    ax.set_xticks(x + 0.4)
    ax.set_xticklabels(methods, rotation=30, ha="right", fontsize=8)
    ax.set_ylabel(title)
    ax.axhline(0.0, color="gray", lw=0.6)
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def _size_sweep_figure(rows: list[dict], path: Path) -> None:
    nets = [r for r in rows if r["policy"] == "net" and r["hidden_config"]]
    if not nets:
        return
    sizes = sorted({r["hidden_config"] for r in nets}, key=lambda h: (h.count("x"), int(h.split("x")[0])))
    if len(sizes) < 2:
        return
    fig, ax = plt.subplots(figsize=(max(7, 0.5 * len(sizes)), 4.2))
    series: dict[tuple, dict[str, list[float]]] = defaultdict(lambda: defaultdict(list))
    for r in nets:
        series[(r["method"], r["info"])][r["hidden_config"]].append(r["mean_profitability"])
    xs = np.arange(len(sizes))
    for (method, info), by_size in sorted(series.items()):
        ys = [np.mean(by_size[s]) if s in by_size else np.nan for s in sizes]
        ax.plot(xs, ys, marker="o", ms=3, lw=1, label=f"{method}/{info}")
    ax.set_xticks(xs)
    ax.set_xticklabels(sizes, rotation=90, fontsize=7)
    ax.set_ylabel("mean profitability")
    ax.set_xlabel("hidden layers")
    ax.axhline(0.0, color="gray", lw=0.6)
    ax.legend(fontsize=6)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def report(results_dir: str | Path, out_dir: str | Path | None = None) -> Path:
    """Aggregate results and render figures; returns the summary CSV path."""
    results_dir = Path(results_dir)
    out = Path(out_dir) if out_dir is not None else results_dir / "report"
    out.mkdir(parents=True, exist_ok=True)
    rows = read_result_rows(results_dir)
    summary = summarize(rows)
    summary_path = out / "summary.csv"
    _write_csv(summary_path, SUMMARY_COLUMNS, summary)

    cell_cols = [
        "policy", "method", "model", "n", "m", "info", "labeling",
        "hidden_config", "seed", "mean_profitability", "sem", "samples", "flag",
    ]
    _write_csv(out / "cells.csv", cell_cols, [{k: r.get(k, "") for k in cell_cols} for r in rows])

    models = sorted({s["model"] for s in summary}) or sorted({r["model"] for r in rows})
    for model in models:
        msum = [s for s in summary if s["model"] == model]
        ideal_rows = [r for r in rows if r["policy"] == "ideal" and r["model"] == model]
        ideal_by_method: dict[str, float] = {}
        for meth in {r["method"] for r in ideal_rows}:
            vals = [r["mean_profitability"] for r in ideal_rows if r["method"] == meth]
            ideal_by_method[meth] = float(np.mean(vals))
        tag = model.replace(":", "")
        if msum or ideal_by_method:
            _bar_figure(
                msum, ideal_by_method, "mean_profitability",
                f"mean profitability ({model})", out / f"profitability_{tag}.png",
            )
        ratio_rows = [s for s in msum if s["ratio"] != RATIO_SENTINEL]
        if ratio_rows:
            _bar_figure(
                ratio_rows, {}, "ratio",
                f"net/ideal profitability ratio ({model})", out / f"ratio_{tag}.png",
            )
        _size_sweep_figure(
            [r for r in rows if r["model"] == model], out / f"size_sweep_{tag}.png"
        )
    return summary_path
