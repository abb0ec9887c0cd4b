"""Figure rendering for the report path of the command-line interface.

Each helper takes computed results and writes a single PNG next to the
delimited output.  Everything uses the non-interactive Agg backend so the
renderers work in headless batch runs.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .diagnostics import LyapunovMap, SectionSet  # noqa: E402
from .sindy import EQUATION_NAMES, ModelDiff, monomial_label  # noqa: E402
from .symmetry import PeriodicIC, SymmetryLine  # noqa: E402
from .system import Trajectory  # noqa: E402


def _save(fig, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return path


def plot_trajectory(path: str | Path, trajectory: Trajectory) -> Path:
    """Coordinate time series next to the configuration-space path."""
    t = trajectory.times
    x, y = trajectory.data[:, 0], trajectory.data[:, 1]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    ax1.plot(t, x, lw=0.6, label="x")
    ax1.plot(t, y, lw=0.6, label="y")
    ax1.set_xlabel("t")
    ax1.legend(loc="upper right")
    ax2.plot(x, y, lw=0.4)
    ax2.set_xlabel("x")
    ax2.set_ylabel("y")
    ax2.set_aspect("equal", adjustable="datalim")
    fig.suptitle(
        f"N={trajectory.params.n}  E={trajectory.energy:.6g}  dt={trajectory.dt:g}"
    )
    return _save(fig, path)


def plot_section(path: str | Path, sections: SectionSet) -> Path:
    """Scatter of the oriented surface-of-section points, one color per orbit."""
    fig, ax = plt.subplots(figsize=(6, 6))
    for orbit in sections.orbits:
        if not orbit:
            continue
        ys = [p.y for p in orbit]
        pys = [p.py for p in orbit]
        ax.plot(ys, pys, ".", ms=1.5)
    ax.set_xlabel("y")
    ax.set_ylabel("py")
    ax.set_title(f"N={sections.params.n}  E={sections.energy:.6g}")
    return _save(fig, path)


def plot_lyapunov_map(path: str | Path, lmap: LyapunovMap) -> Path:
    """Heatmap of the largest Lyapunov exponent over the section plane."""
    fig, ax = plt.subplots(figsize=(6.5, 5.5))
    vals = np.where(lmap.status.T == 0, lmap.values.T, np.nan)
    mesh = ax.pcolormesh(lmap.ys, lmap.pys, vals, shading="nearest")
    fig.colorbar(mesh, ax=ax, label="largest Lyapunov exponent")
    ax.set_xlabel("y")
    ax.set_ylabel("py")
    ax.set_title(f"E={lmap.energy:.6g}")
    return _save(fig, path)


def plot_symmetry(
    path: str | Path,
    lines: list[SymmetryLine],
    periodic: list[PeriodicIC] | None = None,
) -> Path:
    """Symmetry-line polylines with periodic-orbit intersections marked."""
    fig, ax = plt.subplots(figsize=(6, 6))
    for line in lines:
        ax.plot(
            line.points[:, 0], line.points[:, 1], lw=0.8,
            label=f"line {line.index}",
        )
    if periodic:
        ax.plot(
            [p.y for p in periodic], [p.py for p in periodic], "k*", ms=10,
            label="periodic",
        )
    ax.set_xlabel("y")
    ax.set_ylabel("py")
    ax.legend(loc="best", fontsize=8)
    return _save(fig, path)


def plot_delta_c_sweep(
    path: str | Path, sweep: list[tuple[float, ModelDiff]]
) -> Path:
    """Per-coefficient relative error against sampling step, log-log."""
    series: dict[tuple[int, tuple], tuple[list, list]] = {}
    for dt, diff in sweep:
        for e in diff.entries:
            if e.delta_c is None:
                continue
            key = (e.equation, e.monomial)
            series.setdefault(key, ([], []))
            series[key][0].append(dt)
            series[key][1].append(abs(e.delta_c))
    fig, ax = plt.subplots(figsize=(6.5, 5))
    for (eq, mono), (dts, dcs) in sorted(series.items()):
        ax.loglog(
            dts, dcs, "o-", ms=3, lw=0.8,
            label=f"{EQUATION_NAMES[eq]}: {monomial_label(mono)}",
        )
    ax.set_xlabel("dt")
    ax.set_ylabel("|ΔC|")
    ax.legend(loc="best", fontsize=7)
    return _save(fig, path)
