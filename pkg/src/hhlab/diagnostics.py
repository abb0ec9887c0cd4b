"""Orbit diagnostics: oriented sections, Lyapunov exponents, spectral class."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import signal

from . import _kernels as K
from .errors import NoCrossings, NonFinite, TooShort, Unbounded
from .system import (
    DEFAULT_ESCAPE_RADIUS,
    State,
    SystemParams,
    Trajectory,
    total_energy,
)


@dataclass(frozen=True)
class SectionPoint:
    """One oriented crossing of the x=0 plane with px > 0."""

    y: float
    py: float
    t: float
    px: float


@dataclass
class SectionSet:
    """Crossings grouped per initial condition, at a common energy."""

    params: SystemParams
    energy: float
    orbits: list[list[SectionPoint]]
    failures: list[tuple[int, str]] = field(default_factory=list)

    @property
    def points(self) -> list[SectionPoint]:
        return [p for orbit in self.orbits for p in orbit]


@dataclass
class LyapunovResult:
    lam: float
    history_t: np.ndarray
    history_lam: np.ndarray
    t_total: float


@dataclass
class LyapunovMap:
    energy: float
    ys: np.ndarray
    pys: np.ndarray
    values: np.ndarray   # shape (len(ys), len(pys)); NaN where not computed
    status: np.ndarray   # 0 ok, 1 escaped, 2 non-finite, 3 off-shell

    @property
    def on_shell(self) -> np.ndarray:
        return self.status != 3


def poincare_section(
    params: SystemParams,
    initial_states: list[State],
    t_max: float,
    dt: float = 1e-2,
    escape_radius: float = DEFAULT_ESCAPE_RADIUS,
) -> SectionSet:
    """Oriented section x=0, px>0 for a batch of initial conditions.

    Crossings are refined to |x| < 1e-10 by bisection on a local RK4 sub-step.
    Per-orbit failures (escape, no crossings) are recorded, not fatal.
    """
    if not initial_states:
        raise ValueError("need at least one initial state")
    energy = total_energy(params, initial_states[0])
    nsteps = int(math.floor(t_max / dt + 1e-9))
    maxcross = int(t_max) + 64
    orbits: list[list[SectionPoint]] = []
    failures: list[tuple[int, str]] = []
    for idx, s in enumerate(initial_states):
        rows, status = K.poincare_crossings(
            params.n, params.m, params.omega,
            s.x, s.y, s.px, s.py, nsteps, dt, escape_radius, maxcross,
        )
        if status == 1:
            failures.append((idx, "Unbounded"))
        elif status == 2:
            failures.append((idx, "NonFinite"))
        pts = [
            SectionPoint(y=r[2], py=r[3], t=s.t + r[0], px=r[4]) for r in rows
        ]
        if not pts and status == 0:
            failures.append((idx, "NoCrossings"))
        orbits.append(pts)
    return SectionSet(params=params, energy=energy, orbits=orbits, failures=failures)


def largest_lyapunov(
    params: SystemParams,
    state0: State,
    t_total: float,
    renorm_interval: float = 1.0,
    dt: float = 1e-3,
    tangent0: np.ndarray | None = None,
    escape_radius: float = DEFAULT_ESCAPE_RADIUS,
) -> LyapunovResult:
    """Largest Lyapunov exponent by tangent-vector renormalization.

    The tangent evolves under the variational flow; its log growth is
    accumulated at every renormalization and divided by elapsed time.
    """
    if tangent0 is None:
        v = np.array([1.0, 1.0, 1.0, 1.0])
    else:
        v = np.asarray(tangent0, dtype=float)
        if v.shape != (4,) or not np.linalg.norm(v) > 0:
            raise ValueError("tangent0 must be a nonzero 4-vector")
    nsteps = int(math.floor(t_total / dt + 1e-9))
    renorm_every = max(1, int(round(renorm_interval / dt)))
    lam, hist_t, hist_l, status = K.lyapunov(
        params.n, params.m, params.omega,
        state0.x, state0.y, state0.px, state0.py,
        v[0], v[1], v[2], v[3],
        nsteps, dt, renorm_every, escape_radius,
    )
    if status == 1:
        raise Unbounded("orbit escaped during Lyapunov integration")
    if status == 2:
        raise NonFinite("overflow during Lyapunov integration")
    return LyapunovResult(lam=lam, history_t=hist_t, history_lam=hist_l, t_total=t_total)


def lyapunov_map(
    params: SystemParams,
    energy: float,
    ys: np.ndarray,
    pys: np.ndarray,
    t_total: float = 1000.0,
    dt: float = 1e-2,
    renorm_interval: float = 1.0,
    escape_radius: float = DEFAULT_ESCAPE_RADIUS,
) -> LyapunovMap:
    """Lyapunov exponent over a (y, py) grid at fixed energy.

    Each cell is lifted on-shell at x=0 with px > 0; off-shell cells are
    marked (status 3) and left NaN.  Cells run data-parallel.
    """
    ys = np.ascontiguousarray(ys, dtype=float)
    pys = np.ascontiguousarray(pys, dtype=float)
    nsteps = int(math.floor(t_total / dt + 1e-9))
    renorm_every = max(1, int(round(renorm_interval / dt)))
    values, status = K.lyapunov_grid(
        params.n, params.m, params.omega, energy, ys, pys,
        nsteps, dt, renorm_every, escape_radius,
    )
    return LyapunovMap(energy=energy, ys=ys, pys=pys, values=values, status=status)


def classify_spectrum(trajectory: Trajectory, rel_threshold: float = 1e-3) -> str:
    """Heuristic spectral class of y(t): periodic, quasi-periodic, or broadband.

    Hann-windowed FFT on a power-of-two truncation; spectral lines above the
    relative threshold are clustered, then checked for commensurability with
    the dominant line.  Advisory only.
    """
    y = trajectory.data[:, 1]
    if len(y) < 1024:
        raise TooShort(f"need >= 1024 samples, got {len(y)}")
    nfft = 1 << int(math.log2(len(y)))
    y = y[:nfft]
    w = np.hanning(nfft)
    mag = np.abs(np.fft.rfft((y - y.mean()) * w))
    freqs = np.fft.rfftfreq(nfft, trajectory.dt)
    peak = mag.max()
    if peak <= 0:
        return "periodic"  # constant signal
    above = mag > rel_threshold * peak
    above[0] = False
    # a line spectrum concentrates above-threshold power into a few narrow
    # lobes; a continuum spreads it over a large fraction of the bins
    if above.mean() > 0.05:
        return "broadband"
    # separated spectral peaks: local maxima that clear the threshold, with a
    # guard band so window-leakage sidelobes of a strong line are not counted
    idx, _ = signal.find_peaks(
        mag, height=rel_threshold * peak, prominence=rel_threshold * peak
    )
    if len(idx) == 0:
        return "periodic"
    # drop sidelobe peaks hugging a stronger neighbor (within 6 bins)
    order = idx[np.argsort(mag[idx])[::-1]]
    kept: list[int] = []
    for k in order:
        if all(abs(k - k2) > 6 for k2 in kept):
            kept.append(int(k))
    lines = np.sort(freqs[kept])
    if len(lines) > 30:
        return "broadband"
    # commensurate with the lowest-line frequency family?
    base = lines.min()
    ratios = lines / base
    mult = np.round(ratios)
    if np.all(np.abs(ratios - mult) < 0.08) and np.all(mult <= 64):
        return "periodic"
    return "quasi-periodic"
