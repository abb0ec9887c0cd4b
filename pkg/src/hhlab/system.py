"""Hamiltonian family definition, energy bookkeeping, and trajectory integration.

The model is a 2D isotropic oscillator plus the harmonic polynomial
Im((x+iy)^N)/N, i.e. V_N = (m w^2 / 2)(x^2+y^2) + r^N sin(N theta)/N in polar
form.  All routines work in Cartesian variables (x, y, px, py).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import _kernels as K
from .errors import NonFinite, OffShell, TooShort, Unbounded

DEFAULT_ESCAPE_RADIUS = 10.0


@dataclass(frozen=True)
class SystemParams:
    """Family member: mass m, oscillator frequency omega, polynomial order n."""

    m: float = 1.0
    omega: float = 1.0
    n: int = 3

    def __post_init__(self):
        if self.m <= 0:
            raise ValueError(f"mass must be positive, got {self.m}")
        if self.omega <= 0:
            raise ValueError(f"omega must be positive, got {self.omega}")
        if not isinstance(self.n, (int, np.integer)) or self.n < 1:
            raise ValueError(f"n must be an integer >= 1, got {self.n!r}")


@dataclass(frozen=True)
class State:
    """Phase-space point with a time stamp."""

    t: float
    x: float
    y: float
    px: float
    py: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.px, self.py])

    @staticmethod
    def from_array(t: float, a) -> "State":
        return State(t, float(a[0]), float(a[1]), float(a[2]), float(a[3]))


@dataclass
class Trajectory:
    """Uniformly sampled orbit.  ``data`` has one row (x, y, px, py) per sample."""

    dt: float
    t0: float
    data: np.ndarray
    params: SystemParams
    energy: float

    def __post_init__(self):
        if len(self.data) < 2:
            raise ValueError("trajectory needs at least 2 samples")

    def __len__(self) -> int:
        return len(self.data)

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(len(self.data))

    def state(self, k: int) -> State:
        return State.from_array(self.t0 + k * self.dt, self.data[k])

    @property
    def initial_state(self) -> State:
        return self.state(0)

    @property
    def final_state(self) -> State:
        return self.state(len(self.data) - 1)


@dataclass
class TangentFrame:
    """State plus the 4x4 fundamental matrix of the linearized flow."""

    state: State
    phi: np.ndarray


def potential(params: SystemParams, x: float, y: float) -> float:
    """V_N(x, y); the anharmonic part is evaluated by a real power recurrence."""
    return K.potential(params.n, params.m, params.omega, float(x), float(y))


def grad_potential(params: SystemParams, x: float, y: float) -> tuple[float, float]:
    """(dV/dx, dV/dy).  Equations of motion use the negated gradient."""
    return K.grad_potential(params.n, params.m, params.omega, float(x), float(y))


def hessian_potential(params: SystemParams, x: float, y: float) -> np.ndarray:
    """Symmetric 2x2 second-derivative matrix of V_N."""
    vxx, vxy, vyy = K.hessian_potential(params.n, params.m, params.omega, float(x), float(y))
    return np.array([[vxx, vxy], [vxy, vyy]])


def total_energy(params: SystemParams, state: State) -> float:
    return K.energy(params.n, params.m, params.omega, state.x, state.y, state.px, state.py)


def critical_energy(params: SystemParams) -> float:
    """Escape energy (n-2)/(2n); the level set is unbounded above it."""
    return float(Fraction(params.n - 2, 2 * params.n))


def solve_momentum_on_shell(
    params: SystemParams, e: float, x: float, y: float, py: float, sign: int = 1
) -> float:
    """px placing (x, y, ?, py) on the energy shell H = e."""
    rad = 2.0 * params.m * (e - potential(params, x, y)) - py * py
    if rad < 0.0:
        raise OffShell(
            f"(x={x}, y={y}, py={py}) outside the accessible region at E={e} "
            f"(radicand {rad:.3e})"
        )
    return math.copysign(math.sqrt(rad), sign)


def rhs(params: SystemParams, state: State) -> np.ndarray:
    """Time derivative (xdot, ydot, pxdot, pydot)."""
    gx, gy = grad_potential(params, state.x, state.y)
    return np.array([state.px / params.m, state.py / params.m, -gx, -gy])


def _check_status(status: int, where: str):
    if status == 1:
        raise Unbounded(f"orbit escaped during {where}")
    if status == 2:
        raise NonFinite(f"integration overflowed during {where}")


def integrate(
    params: SystemParams,
    state0: State,
    t_end: float,
    dt: float,
    escape_radius: float = DEFAULT_ESCAPE_RADIUS,
) -> Trajectory:
    """Classical fixed-step RK4 from state0 to t0 + t_end.

    The fixed step keeps sample spacing exactly equal to the regression step
    used downstream.  Raises Unbounded/NonFinite on escape or overflow.
    """
    if dt <= 0 or t_end <= 0:
        raise ValueError("dt and t_end must be positive")
    nsteps = int(math.floor(t_end / dt + 1e-9))
    data, status, done = K.integrate(
        params.n, params.m, params.omega,
        state0.x, state0.y, state0.px, state0.py,
        nsteps, dt, escape_radius,
    )
    _check_status(status, "integrate")
    e0 = total_energy(params, state0)
    return Trajectory(dt=dt, t0=state0.t, data=data, params=params, energy=e0)


def max_energy_drift(
    params: SystemParams,
    state0: State,
    t_end: float,
    dt: float,
    escape_radius: float = DEFAULT_ESCAPE_RADIUS,
) -> float:
    """max |E(t) - E(0)| over the orbit, computed without storing samples."""
    nsteps = int(math.floor(t_end / dt + 1e-9))
    drift, status = K.max_energy_drift(
        params.n, params.m, params.omega,
        state0.x, state0.y, state0.px, state0.py,
        nsteps, dt, escape_radius,
    )
    _check_status(status, "max_energy_drift")
    return drift


def flow_endpoint(
    params: SystemParams,
    state0: State,
    t_end: float,
    dt: float,
    escape_radius: float = DEFAULT_ESCAPE_RADIUS,
) -> State:
    """Final state after t_end, without storing the path."""
    nsteps = int(math.floor(t_end / dt + 1e-9))
    x, y, px, py, status = K.endpoint(
        params.n, params.m, params.omega,
        state0.x, state0.y, state0.px, state0.py,
        nsteps, dt, escape_radius,
    )
    _check_status(status, "flow_endpoint")
    return State(state0.t + nsteps * dt, x, y, px, py)


def integrate_variational(
    params: SystemParams,
    state0: State,
    t_end: float,
    dt: float,
    escape_radius: float = DEFAULT_ESCAPE_RADIUS,
) -> list[TangentFrame]:
    """Joint RK4 on Hamilton's equations and Phi' = J Phi, Phi(t0) = I."""
    s0 = np.empty(20)
    s0[:4] = state0.as_array()
    s0[4:] = np.eye(4).ravel()
    nsteps = int(math.floor(t_end / dt + 1e-9)) if t_end > 0 else 0
    if nsteps == 0:
        return [TangentFrame(state=state0, phi=np.eye(4))]
    out, status, done = K.integrate_variational(
        params.n, params.m, params.omega, s0, nsteps, dt, escape_radius
    )
    _check_status(status, "integrate_variational")
    frames = []
    for k in range(done + 1):
        st = State.from_array(state0.t + k * dt, out[k, :4])
        frames.append(TangentFrame(state=st, phi=out[k, 4:].reshape(4, 4).copy()))
    return frames


def rescale(
    params: SystemParams, trajectory: Trajectory, alpha: float
) -> tuple[SystemParams, Trajectory]:
    """Scale-invariance transform r -> alpha r.

    Parameters map as m -> m/alpha^(n+2), omega -> alpha^n omega, E -> alpha^n E.
    The induced conjugate transformations (derived from Hamilton's equations)
    are p -> p/alpha and t -> t/alpha^n, so dt shrinks by alpha^n as well.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    n = params.n
    new_params = SystemParams(
        m=params.m / alpha ** (n + 2), omega=params.omega * alpha**n, n=n
    )
    data = trajectory.data.copy()
    data[:, :2] *= alpha
    data[:, 2:] /= alpha
    return new_params, Trajectory(
        dt=trajectory.dt / alpha**n,
        t0=trajectory.t0 / alpha**n,
        data=data,
        params=new_params,
        energy=trajectory.energy * alpha**n,
    )
