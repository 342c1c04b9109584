"""Figure builders for the experiment CSV schemas.

Every rendered value comes from a CSV cell (trajectory and success-curve
bands are the mean and normal-approximation CI of the per-replication cells,
as those schemas carry raw replications); nothing is smoothed or re-simulated.
Styles are pinned and output metadata is stripped of timestamps so the same
CSV and spec produce identical image bytes.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import matplotlib
import numpy as np
import pandas as pd

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

matplotlib.rcParams.update({
    "figure.figsize": (6.4, 4.2),
    "figure.dpi": 110,
    "savefig.dpi": 110,
    "svg.hashsalt": "wdrcm-plots",
    "axes.grid": True,
    "grid.alpha": 0.3,
})

KINDS = ("theta_curves", "phase_diagram", "trajectory", "success_curve")

REQUIRED_COLUMNS = {
    "theta_curves": ["p", "L", "reach_freq", "ci_low", "ci_high"],
    "phase_diagram": ["gamma", "delta", "reach_freq"],
    "trajectory": ["gamma", "t", "seed", "largest_fraction"],
    "success_curve": ["gamma", "s0", "success_freq", "ci_low", "ci_high"],
}

_COLORS = plt.rcParams["axes.prop_cycle"].by_key()["color"]


class SchemaError(ValueError):
    """Input CSV does not conform to the registered schema for the kind."""


@dataclass(frozen=True)
class FigureSpec:
    input_csv: str
    kind: str
    output_image: str

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SchemaError(f"unknown figure kind {self.kind!r}; "
                              f"expected one of {KINDS}")


def load_table(path, kind: str) -> pd.DataFrame:
    if kind not in KINDS:
        raise SchemaError(f"unknown figure kind {kind!r}")
    try:
        df = pd.read_csv(path)
    except pd.errors.EmptyDataError:
        raise SchemaError(f"empty CSV: {path}") from None
    if df.empty:
        raise SchemaError(f"no data rows in CSV: {path}")
    missing = [c for c in REQUIRED_COLUMNS[kind] if c not in df.columns]
    if missing:
        raise SchemaError(f"CSV {path} is missing required columns {missing} "
                          f"for kind {kind!r}")
    return df


def build_theta_curves(df: pd.DataFrame, ax) -> dict:
    """One reach-frequency-vs-p curve per window size L, with CI bands.

    Curve y-values are the CSV cells verbatim.
    """
    levels = sorted(df["L"].unique())
    for i, L in enumerate(levels):
        sub = df[df["L"] == L].sort_values("p")
        color = _COLORS[i % len(_COLORS)]
        ax.plot(sub["p"], sub["reach_freq"], marker="o", color=color,
                label=f"L = {L:g}")
        ax.fill_between(sub["p"], sub["ci_low"], sub["ci_high"],
                        color=color, alpha=0.2)
    ax.set_xlabel("retention probability p")
    ax.set_ylabel("origin reach frequency")
    ax.legend()
    return {"elements": len(levels), "groups": levels}


def build_phase_diagram(df: pd.DataFrame, ax) -> dict:
    """Reach-frequency heatmap over the (gamma, delta) grid with the analytic
    boundary gamma = delta/(delta+1) overlaid."""
    gammas = np.sort(df["gamma"].unique())
    deltas = np.sort(df["delta"].unique())
    grid = np.full((len(gammas), len(deltas)), np.nan)
    for _, row in df.iterrows():
        gi = np.searchsorted(gammas, row["gamma"])
        di = np.searchsorted(deltas, row["delta"])
        grid[gi, di] = row["reach_freq"]
    mesh = ax.pcolormesh(deltas, gammas, grid, shading="nearest",
                         cmap="viridis", vmin=0.0, vmax=max(1e-9, np.nanmax(grid)))
    plt.colorbar(mesh, ax=ax, label="reach frequency")
    overlay_d = np.unique(np.concatenate(
        [np.linspace(deltas.min(), deltas.max(), 200), deltas]))
    overlay_g = overlay_d / (overlay_d + 1.0)
    ax.plot(overlay_d, overlay_g, color="white", lw=2.0,
            label="gamma = delta/(delta+1)")
    ax.set_xlabel("delta")
    ax.set_ylabel("gamma")
    ax.legend(loc="lower right")
    return {"elements": int(np.isfinite(grid).sum()),
            "groups": [(g, d) for g in gammas for d in deltas],
            "overlay": (overlay_d, overlay_g)}


def build_trajectory(df: pd.DataFrame, ax) -> dict:
    """Per-gamma mean largest-fraction trajectory with a CI band over the
    replication cells; the t axis goes log when it spans two decades."""
    groups = sorted(df["gamma"].unique())
    for i, gamma in enumerate(groups):
        sub = df[df["gamma"] == gamma]
        stats = []
        for t, block in sub.groupby("t"):
            vals = block["largest_fraction"].to_numpy()
            mean = vals.mean()
            half = 1.959963984540054 * vals.std(ddof=0) / np.sqrt(len(vals))
            stats.append((t, mean, mean - half, mean + half))
        stats.sort()
        ts, means, los, his = map(np.asarray, zip(*stats))
        color = _COLORS[i % len(_COLORS)]
        ax.plot(ts, means, marker="o", color=color, label=f"gamma = {gamma:g}")
        ax.fill_between(ts, los, his, color=color, alpha=0.2)
    ts_all = df["t"].to_numpy(dtype=float)
    log_axis = ts_all.max() / max(ts_all.min(), 1e-300) >= 100.0
    if log_axis:
        ax.set_xscale("log")
    ax.set_xlabel("time t")
    ax.set_ylabel("largest component fraction")
    ax.legend()
    return {"elements": len(groups), "groups": groups, "log_axis": log_axis}


def build_success_curve(df: pd.DataFrame, ax) -> dict:
    """Greedy-chain completion frequency against the start mark, per gamma."""
    groups = sorted(df["gamma"].unique())
    for i, gamma in enumerate(groups):
        sub = df[df["gamma"] == gamma].sort_values("s0", ascending=False)
        color = _COLORS[i % len(_COLORS)]
        ax.plot(sub["s0"], sub["success_freq"], marker="o", color=color,
                label=f"gamma = {gamma:g}")
        ax.fill_between(sub["s0"], sub["ci_low"], sub["ci_high"],
                        color=color, alpha=0.2)
    ax.set_xscale("log")
    ax.invert_xaxis()
    ax.set_xlabel("start mark s0")
    ax.set_ylabel("chain completion frequency")
    ax.legend()
    return {"elements": len(groups), "groups": groups}


_BUILDERS = {
    "theta_curves": build_theta_curves,
    "phase_diagram": build_phase_diagram,
    "trajectory": build_trajectory,
    "success_curve": build_success_curve,
}

# per-format metadata overrides that would otherwise embed timestamps
_METADATA = {
    ".svg": {"Date": None},
    ".pdf": {"CreationDate": None},
    ".png": None,
}


def render(spec: FigureSpec) -> dict:
    """Build the figure for the spec and write it to the output path."""
    df = load_table(spec.input_csv, spec.kind)
    fig, ax = plt.subplots()
    try:
        info = _BUILDERS[spec.kind](df, ax)
        ext = Path(spec.output_image).suffix.lower()
        if ext not in _METADATA:
            raise SchemaError(f"unsupported image format {ext!r}; "
                              f"use one of {sorted(_METADATA)}")
        fig.savefig(spec.output_image, metadata=_METADATA[ext])
    finally:
        plt.close(fig)
    return info
