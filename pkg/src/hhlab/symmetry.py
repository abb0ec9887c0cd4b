"""Reversibility involutions, symmetry lines, and periodic-orbit search.

The flow is reversible: momentum/time inversion holds for every n, and
coordinate/time inversion additionally holds for even n.  Fixed lines of the
base involution on the oriented section (x=0, px>0) are:

  odd n:  (x,y,px,py,t) -> (x,y,-px,-py,-t),   Gamma_0 = {py = 0}
  even n: (x,y,px,py,t) -> (-x,-y,px,py,-t),   Gamma_0 = {y = 0}

Images T^i Gamma_0 give the even-index lines Gamma_{2i}; intersections of
Gamma_0 with Gamma_2 seed orbits whose period divides 2 return-map steps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .errors import EmptyLine, NoIntersections, NoReturn, NotClosed, OffShell
from .system import (
    DEFAULT_ESCAPE_RADIUS,
    State,
    SystemParams,
    integrate,
    potential,
    solve_momentum_on_shell,
    total_energy,
)

_RETURN_DT = 1e-3
_RETURN_TMAX = 400.0


@dataclass(frozen=True)
class Involution:
    """Phase-space reflection conjugating the flow to its time reverse."""

    kind: str  # "momentum-time" or "coordinate-time"

    def apply(self, state: State) -> State:
        if self.kind == "momentum-time":
            return State(-state.t, state.x, state.y, -state.px, -state.py)
        return State(-state.t, -state.x, -state.y, state.px, state.py)

    def on_fixed_line(self, y: float, py: float, tol: float = 0.0) -> bool:
        if self.kind == "momentum-time":
            return abs(py) <= tol
        return abs(y) <= tol


def base_involution(params: SystemParams) -> Involution:
    """The involution whose section fixed line is used for this n (by parity)."""
    if params.n % 2 == 0:
        return Involution(kind="coordinate-time")
    return Involution(kind="momentum-time")


@dataclass
class SymmetryLine:
    index: int
    points: np.ndarray  # (k, 2) columns (y, py)
    dropped: int = 0


def _on_shell_y_interval(params: SystemParams, energy: float) -> tuple[float, float]:
    """Contiguous y-interval around 0 with V(0, y) <= energy."""
    from scipy.optimize import brentq

    def f(y):
        return potential(params, 0.0, y) - energy

    if f(0.0) > 0:
        raise EmptyLine(f"origin itself is above energy {energy}")
    span = np.linspace(0.0, 4.0, 2001)
    hi = 4.0
    for y in span[1:]:
        if f(y) > 0:
            hi = brentq(f, y - span[1], y)
            break
    lo = -4.0
    for y in -span[1:]:
        if f(y) > 0:
            lo = brentq(f, y, y + span[1])
            break
    return lo, hi


def gamma0(params: SystemParams, energy: float, samples: int = 2000) -> SymmetryLine:
    """Fixed line of the base involution, sampled over its on-shell extent."""
    if energy < 0:
        raise EmptyLine("negative energy has no accessible region")
    inv = base_involution(params)
    if inv.kind == "momentum-time":
        lo, hi = _on_shell_y_interval(params, energy)
        if hi - lo <= 0:
            raise EmptyLine("no on-shell segment")
        # stay strictly inside so the lift px > 0 exists
        ys = np.linspace(lo, hi, samples + 2)[1:-1]
        pts = np.column_stack([ys, np.zeros_like(ys)])
    else:
        pmax = math.sqrt(2.0 * params.m * energy)
        if pmax <= 0:
            pts = np.zeros((1, 2))
        else:
            pys = np.linspace(-pmax, pmax, samples + 2)[1:-1]
            pts = np.column_stack([np.zeros_like(pys), pys])
    return SymmetryLine(index=0, points=pts)


def return_map(
    params: SystemParams,
    energy: float,
    y: float,
    py: float,
    steps: int = 1,
    dt: float = _RETURN_DT,
    t_max: float = _RETURN_TMAX,
    escape_radius: float = DEFAULT_ESCAPE_RADIUS,
) -> tuple[float, float]:
    """Apply the oriented Poincare return map T^steps to a section point."""
    px = solve_momentum_on_shell(params, energy, 0.0, y, py, sign=1)
    x, py_ = 0.0, py
    nsteps = int(t_max / dt)
    for _ in range(steps):
        found, t, yc, pyc, pxc, status = K.next_crossing(
            params.n, params.m, params.omega, x, y, px, py_,
            nsteps, dt, escape_radius,
        )
        if not found:
            reason = {0: "no crossing within t_max", 1: "escaped", 2: "non-finite"}[status]
            raise NoReturn(f"point (y={y}, py={py_}) did not return: {reason}")
        x, y, px, py_ = 0.0, yc, pxc, pyc
    return y, py_


def advance_line(
    params: SystemParams,
    energy: float,
    line: SymmetryLine,
    steps: int = 1,
    dt: float = _RETURN_DT,
    t_max: float = _RETURN_TMAX,
) -> SymmetryLine:
    """Map a symmetry line by T^steps: Gamma_j -> Gamma_{2*steps + j}.

    Points that escape or fail to return are dropped (counted in ``dropped``).
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    out = []
    dropped = 0
    for y, py in line.points:
        try:
            out.append(return_map(params, energy, y, py, steps=steps, dt=dt, t_max=t_max))
        except (NoReturn, OffShell):
            dropped += 1
    return SymmetryLine(index=2 * steps + line.index, points=np.array(out), dropped=dropped)


@dataclass
class PeriodicIC:
    """Section-level periodic initial condition with its lifted momentum."""

    y: float
    py: float
    px: float
    energy: float
    period_divisor: int


def periodic_ics(
    params: SystemParams,
    energy: float,
    samples: int = 400,
    dt: float = _RETURN_DT,
) -> list[PeriodicIC]:
    """Intersections of Gamma_0 with Gamma_2 = T Gamma_0.

    Scans Gamma_0 for sign changes of the fixed-line coordinate of the mapped
    point, then refines each bracket by bisection.  Every hit carries period
    divisor |0-2| = 2.
    """
    inv = base_involution(params)
    line0 = gamma0(params, energy, samples=samples)

    if inv.kind == "momentum-time":
        def param_point(s):
            return s, 0.0
        svals = line0.points[:, 0]
    else:
        def param_point(s):
            return 0.0, s
        svals = line0.points[:, 1]

    def g(s):
        y, py = param_point(s)
        yi, pyi = return_map(params, energy, y, py, dt=dt)
        return pyi if inv.kind == "momentum-time" else yi

    vals = np.full(len(svals), np.nan)
    for i, s in enumerate(svals):
        try:
            vals[i] = g(s)
        except (NoReturn, OffShell):
            pass

    hits: list[PeriodicIC] = []
    for i in range(len(svals) - 1):
        a, b = vals[i], vals[i + 1]
        if not (np.isfinite(a) and np.isfinite(b)) or a * b > 0:
            continue
        lo, hi = svals[i], svals[i + 1]
        flo = a
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            try:
                fm = g(mid)
            except (NoReturn, OffShell):
                break
            if abs(fm) < 1e-10:
                lo = hi = mid
                break
            if flo * fm < 0:
                hi = mid
            else:
                lo, flo = mid, fm
        s_star = 0.5 * (lo + hi)
        y, py = param_point(s_star)
        try:
            px = solve_momentum_on_shell(params, energy, 0.0, y, py, sign=1)
        except OffShell:
            continue
        hits.append(PeriodicIC(y=y, py=py, px=px, energy=energy, period_divisor=2))

    # dedup near-identical refinements
    uniq: list[PeriodicIC] = []
    for h in hits:
        if all(abs(h.y - u.y) + abs(h.py - u.py) > 1e-6 for u in uniq):
            uniq.append(h)
    if not uniq:
        raise NoIntersections(f"no Gamma_0 x Gamma_2 intersections at E={energy}")
    return uniq


def verify_periodic(
    params: SystemParams,
    ic: State,
    max_period: float,
    dt: float = 1e-3,
    t_min: float = 0.5,
    closure_tol: float = 1e-3,
) -> tuple[float, float]:
    """Locate the first time the full orbit returns to ``ic``.

    Returns (period, closure distance); raises NotClosed above ``closure_tol``.
    The coarse sample-wise minimum is refined by golden-section search on the
    distance along a locally re-integrated segment.
    """
    traj = integrate(params, ic, max_period, dt)
    ref = ic.as_array()
    d = np.linalg.norm(traj.data - ref, axis=1)
    k_min_allowed = int(t_min / dt)
    if len(d) <= k_min_allowed + 2:
        raise ValueError("max_period too small")
    k = k_min_allowed + int(np.argmin(d[k_min_allowed:]))
    k = min(max(k, 1), len(d) - 2)

    base = State.from_array(0.0, traj.data[k - 1])
    lo, hi = 0.0, 2.0 * dt

    def dist(h):
        if h <= 0:
            s = base.as_array()
        else:
            x, y, px, py = base.x, base.y, base.px, base.py
            x, y, px, py = K.rk4_step(params.n, params.m, params.omega, x, y, px, py, h)
            s = np.array([x, y, px, py])
        return float(np.linalg.norm(s - ref))

    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c1 = b - invphi * (b - a)
    c2 = a + invphi * (b - a)
    f1, f2 = dist(c1), dist(c2)
    for _ in range(80):
        if f1 < f2:
            b, c2, f2 = c2, c1, f1
            c1 = b - invphi * (b - a)
            f1 = dist(c1)
        else:
            a, c1, f1 = c1, c2, f2
            c2 = a + invphi * (b - a)
            f2 = dist(c2)
    h_star = 0.5 * (a + b)
    best = dist(h_star)
    period = (k - 1) * dt + h_star
    if best > closure_tol:
        raise NotClosed(period, best)
    return period, best
