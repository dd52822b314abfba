"""Static report figures (SVG) with a companion CSV behind every plot."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = ["plot_variograms", "plot_predictions", "plot_cluster_map"]

# deterministic SVG output: fixed hash salt, no embedded timestamp
matplotlib.rcParams["svg.hashsalt"] = "spafda"
_SVG_META = {"Date": None}


def _write_csv(path: Path, header: str, rows) -> None:
    lines = [header] + [",".join(str(c) for c in row) for row in rows]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def plot_variograms(panels, out_prefix) -> tuple[Path, Path]:
    """One subplot per panel: empirical bins as points, fitted model as a curve."""
    out_prefix = Path(out_prefix)
    fig, axes = plt.subplots(1, len(panels), figsize=(4 * len(panels), 3.2), squeeze=False)
    rows = []
    for ax, panel in zip(axes[0], panels):
        emp, model = panel.empirical, panel.model
        ax.plot(emp.lags, emp.semivariances, "o", color="tab:blue", label="empirical")
        hs = np.linspace(0.0, float(emp.lags.max()) * 1.05, 200)
        ax.plot(hs, model.evaluate(hs), "-", color="tab:red", label="fitted")
        ax.set_title(f"{panel.name} (r2={model.r2:.2f})")
        ax.set_xlabel("lag")
        ax.set_ylabel("semivariance")
        ax.legend(fontsize=8)
        for lag, semi, cnt in zip(emp.lags, emp.semivariances, emp.pair_counts):
            rows.append((panel.name, repr(float(lag)), repr(float(semi)), cnt,
                         repr(float(model.evaluate(lag)))))
    fig.tight_layout()
    svg = out_prefix.with_suffix(".svg")
    csv = out_prefix.with_suffix(".csv")
    fig.savefig(svg, metadata=_SVG_META)
    plt.close(fig)
    _write_csv(csv, "panel,lag,empirical_semivariance,pair_count,fitted_semivariance", rows)
    return svg, csv


def plot_predictions(grid, entries, out_prefix) -> tuple[Path, Path]:
    """Per target site: truth (if known), amplitude-phase and ordinary predictions.

    ``entries`` is a sequence of (label, truth-or-None, apk_values, ok_values).
    """
    out_prefix = Path(out_prefix)
    n = len(entries)
    fig, axes = plt.subplots(1, n, figsize=(4 * n, 3.2), squeeze=False)
    t = grid.points
    rows = []
    for ax, (label, truth, apk, ok) in zip(axes[0], entries):
        if truth is not None:
            ax.plot(t, truth, "k-", label="truth")
        ax.plot(t, apk, "-", color="tab:blue", label="amplitude-phase")
        ax.plot(t, ok, "-", color="tab:red", label="ordinary")
        ax.set_title(str(label))
        ax.set_xlabel("t")
        ax.legend(fontsize=8)
        for k, tk in enumerate(t):
            rows.append(
                (label, repr(float(tk)),
                 "" if truth is None else repr(float(truth[k])),
                 repr(float(apk[k])), repr(float(ok[k])))
            )
    fig.tight_layout()
    svg = out_prefix.with_suffix(".svg")
    csv = out_prefix.with_suffix(".csv")
    fig.savefig(svg, metadata=_SVG_META)
    plt.close(fig)
    _write_csv(csv, "target,t,truth,apk_prediction,ok_prediction", rows)
    return svg, csv


def plot_cluster_map(sites, labels, site_ids, out_prefix, title="clusters") -> tuple[Path, Path]:
    """Site map colored by cluster label."""
    out_prefix = Path(out_prefix)
    sites = np.asarray(sites, dtype=float)
    labels = np.asarray(labels, dtype=int)
    fig, ax = plt.subplots(figsize=(4.5, 4))
    sc = ax.scatter(sites[:, 0], sites[:, 1], c=labels, cmap="tab10", s=45)
    for (x, y), sid in zip(sites, site_ids):
        ax.annotate(str(sid), (x, y), fontsize=6, xytext=(2, 2), textcoords="offset points")
    ax.set_title(title)
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    fig.colorbar(sc, ax=ax, label="cluster")
    fig.tight_layout()
    svg = out_prefix.with_suffix(".svg")
    csv = out_prefix.with_suffix(".csv")
    fig.savefig(svg, metadata=_SVG_META)
    plt.close(fig)
    rows = [
        (sid, repr(float(x)), repr(float(y)), int(lab))
        for (x, y), sid, lab in zip(sites, site_ids, labels)
    ]
    _write_csv(csv, "site_id,x,y,cluster", rows)
    return svg, csv
