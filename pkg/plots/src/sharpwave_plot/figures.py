"""Figure renderers over the run-directory CSV/JSON schemas.

Figure kinds:

profile      wave profiles V(x, t) over one period (profile.csv)
trajectory   front position b(t) with the Darcy-slope speed overlaid on
             the finite-difference speed of b (trajectory.csv)
convergence  gap sequence s_n with its T asymptote and the window-norm
             history (summary.json)
heatmap      space-time field V with the boundary curve B(t) on top
             (profile.csv + boundary.csv)
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
import pandas as pd

KINDS = ("profile", "trajectory", "convergence", "heatmap")


class MissingArtifact(RuntimeError):
    """A required artifact file or column is absent."""


@dataclass(frozen=True)
class FigureSpec:
    run_dir: Path
    kind: str
    out: Path
    style: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unsupported figure kind {self.kind!r}; choose from {KINDS}")


def _read_csv(run_dir: Path, name: str, columns: set[str]) -> pd.DataFrame:
    path = run_dir / name
    if not path.exists():
        raise MissingArtifact(f"{name} not found in {run_dir}")
    df = pd.read_csv(path)
    missing = columns - set(df.columns)
    if missing:
        raise MissingArtifact(f"{name} lacks columns {sorted(missing)}")
    return df


def _read_summary(run_dir: Path) -> dict:
    path = run_dir / "summary.json"
    if not path.exists():
        raise MissingArtifact(f"summary.json not found in {run_dir}")
    return json.loads(path.read_text())


def render(spec: FigureSpec) -> Path:
    """Render one figure and write it to spec.out; returns the path."""
    fig = plt.figure(figsize=spec.style.get("figsize", (7.0, 4.2)), dpi=spec.style.get("dpi", 130))
    try:
        ax = fig.add_subplot(111)
        _RENDERERS[spec.kind](spec, ax, fig)
        fig.tight_layout()
        spec.out.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(spec.out)
    finally:
        plt.close(fig)
    return spec.out


def _render_profile(spec: FigureSpec, ax, fig):
    df = _read_csv(spec.run_dir, "profile.csv", {"x", "t", "V"})
    times = np.unique(df["t"].to_numpy())
    n_curves = int(spec.style.get("curves", 5))
    picks = times[np.linspace(0, times.size - 1, min(n_curves, times.size)).astype(int)]
    for t in picks:
        sub = df[df["t"] == t]
        ax.plot(sub["x"], sub["V"], lw=1.4, label=f"t = {t:.3f}")
    ax.set_xlabel("x")
    ax.set_ylabel("V")
    ax.set_title("wave profiles over one period")
    ax.legend(loc="best", fontsize=8)
    ax.axhline(0.0, color="0.7", lw=0.6)


def _render_trajectory(spec: FigureSpec, ax, fig):
    df = _read_csv(spec.run_dir, "trajectory.csv", {"t", "b", "slope"})
    t = df["t"].to_numpy()
    b = df["b"].to_numpy()
    slope = df["slope"].to_numpy()
    ax.plot(t, b, color="0.3", lw=1.0, label="front b(t)")
    ax.set_xlabel("t")
    ax.set_ylabel("b(t)")
    ax2 = ax.twinx()
    # finite-difference speed of the recorded positions vs the Darcy slope
    fd = np.gradient(b, t)
    ax2.plot(t, fd, color="tab:orange", lw=1.0, label="db/dt (finite differences)")
    ax2.plot(t, slope, color="tab:blue", lw=1.0, ls="--", label="Darcy slope -v_x(b-0)")
    ax2.set_ylabel("speed")
    lines, labels = ax.get_legend_handles_labels()
    l2, lab2 = ax2.get_legend_handles_labels()
    ax.legend(lines + l2, labels + lab2, loc="lower right", fontsize=8)
    ax.set_title("front trajectory and speeds")


def _render_convergence(spec: FigureSpec, ax, fig):
    summary = _read_summary(spec.run_dir)
    if "s_n" not in summary or "T" not in summary:
        raise MissingArtifact("summary.json lacks s_n / T entries")
    s_n = np.asarray(summary["s_n"], dtype=float)
    ax.plot(np.arange(s_n.size), s_n, "o-", ms=3.5, lw=1.0, label="gaps s_n")
    ax.axhline(summary["T"], color="tab:red", lw=1.0, ls=":", label=f"T = {summary['T']:.4f}")
    ax.set_xlabel("n")
    ax.set_ylabel("s_n")
    hist = summary.get("convergence_history", {})
    if hist:
        ns = sorted(int(k) for k in hist)
        vals = [hist[str(n)] for n in ns]
        ax2 = ax.twinx()
        ax2.semilogy(ns, vals, "s-", ms=3, lw=0.9, color="0.5", label="window norm")
        ax2.set_ylabel("||v_{n+1} - v_n||")
        l1, lab1 = ax.get_legend_handles_labels()
        l2, lab2 = ax2.get_legend_handles_labels()
        ax.legend(l1 + l2, lab1 + lab2, loc="center right", fontsize=8)
    else:
        ax.legend(loc="center right", fontsize=8)
    ax.set_title("renormalization convergence")


def _render_heatmap(spec: FigureSpec, ax, fig):
    df = _read_csv(spec.run_dir, "profile.csv", {"x", "t", "V"})
    bdry = _read_csv(spec.run_dir, "boundary.csv", {"t", "B"})
    pivot = df.pivot_table(index="t", columns="x", values="V")
    x = pivot.columns.to_numpy()
    t = pivot.index.to_numpy()
    mesh = ax.pcolormesh(x, t, pivot.to_numpy(), shading="nearest", cmap=spec.style.get("cmap", "viridis"))
    fig.colorbar(mesh, ax=ax, label="V")
    ax.plot(bdry["B"], bdry["t"], color="w", lw=1.6, label="boundary B(t)")
    ax.set_xlabel("x")
    ax.set_ylabel("t")
    ax.legend(loc="upper left", fontsize=8)
    ax.set_title("space-time pressure with free boundary")


_RENDERERS = {
    "profile": _render_profile,
    "trajectory": _render_trajectory,
    "convergence": _render_convergence,
    "heatmap": _render_heatmap,
}
