"""Numba-compiled numerical kernels.

Everything here works on plain floats/arrays; the public wrappers in
``system``/``diagnostics`` own validation and the dataclass types.

Status codes returned by the integrating kernels:
  0 = ok, 1 = escaped (|x| or |y| beyond the escape radius), 2 = non-finite.
"""

import numpy as np
from numba import njit, prange


@njit(cache=True)
def _zpow(x, y, k):
    """(Re, Im) of (x + i y)**k by a real multiply recurrence."""
    re = 1.0
    im = 0.0
    for _ in range(k):
        re, im = re * x - im * y, re * y + im * x
    return re, im


@njit(cache=True)
def potential(n, m, omega, x, y):
    re, im = _zpow(x, y, n)
    return 0.5 * m * omega * omega * (x * x + y * y) + im / n


@njit(cache=True)
def grad_potential(n, m, omega, x, y):
    # d/dx Im(z^n)/n = Im z^{n-1},  d/dy Im(z^n)/n = Re z^{n-1}
    re, im = _zpow(x, y, n - 1)
    return m * omega * omega * x + im, m * omega * omega * y + re


@njit(cache=True)
def hessian_potential(n, m, omega, x, y):
    """(Vxx, Vxy, Vyy).  Anharmonic block vanishes for n < 2."""
    if n >= 2:
        re, im = _zpow(x, y, n - 2)
        a = (n - 1) * im
        b = (n - 1) * re
    else:
        a = 0.0
        b = 0.0
    c = m * omega * omega
    return c + a, b, c - a


@njit(cache=True)
def energy(n, m, omega, x, y, px, py):
    return 0.5 * (px * px + py * py) / m + potential(n, m, omega, x, y)


@njit(cache=True)
def rk4_step(n, m, omega, x, y, px, py, dt):
    gx, gy = grad_potential(n, m, omega, x, y)
    k1x, k1y, k1u, k1v = px / m, py / m, -gx, -gy

    gx, gy = grad_potential(n, m, omega, x + 0.5 * dt * k1x, y + 0.5 * dt * k1y)
    k2x = (px + 0.5 * dt * k1u) / m
    k2y = (py + 0.5 * dt * k1v) / m
    k2u, k2v = -gx, -gy

    gx, gy = grad_potential(n, m, omega, x + 0.5 * dt * k2x, y + 0.5 * dt * k2y)
    k3x = (px + 0.5 * dt * k2u) / m
    k3y = (py + 0.5 * dt * k2v) / m
    k3u, k3v = -gx, -gy

    gx, gy = grad_potential(n, m, omega, x + dt * k3x, y + dt * k3y)
    k4x = (px + dt * k3u) / m
    k4y = (py + dt * k3v) / m
    k4u, k4v = -gx, -gy

    c = dt / 6.0
    return (
        x + c * (k1x + 2.0 * k2x + 2.0 * k3x + k4x),
        y + c * (k1y + 2.0 * k2y + 2.0 * k3y + k4y),
        px + c * (k1u + 2.0 * k2u + 2.0 * k3u + k4u),
        py + c * (k1v + 2.0 * k2v + 2.0 * k3v + k4v),
    )


@njit(cache=True)
def integrate(n, m, omega, x, y, px, py, nsteps, dt, escape):
    """Fixed-step RK4; returns (samples (k+1,4), status, k)."""
    out = np.empty((nsteps + 1, 4))
    out[0, 0] = x
    out[0, 1] = y
    out[0, 2] = px
    out[0, 3] = py
    status = 0
    done = 0
    for i in range(nsteps):
        x, y, px, py = rk4_step(n, m, omega, x, y, px, py, dt)
        if not (np.isfinite(x) and np.isfinite(y) and np.isfinite(px) and np.isfinite(py)):
            status = 2
            break
        if abs(x) > escape or abs(y) > escape:
            status = 1
            break
        out[i + 1, 0] = x
        out[i + 1, 1] = y
        out[i + 1, 2] = px
        out[i + 1, 3] = py
        done = i + 1
    return out, status, done


@njit(cache=True)
def max_energy_drift(n, m, omega, x, y, px, py, nsteps, dt, escape):
    """Largest |E(t) - E(0)| along the orbit, without storing samples."""
    e0 = energy(n, m, omega, x, y, px, py)
    drift = 0.0
    status = 0
    for _ in range(nsteps):
        x, y, px, py = rk4_step(n, m, omega, x, y, px, py, dt)
        if not (np.isfinite(x) and np.isfinite(y)):
            status = 2
            break
        if abs(x) > escape or abs(y) > escape:
            status = 1
            break
        d = abs(energy(n, m, omega, x, y, px, py) - e0)
        if d > drift:
            drift = d
    return drift, status


@njit(cache=True)
def endpoint(n, m, omega, x, y, px, py, nsteps, dt, escape):
    """Final state only (for round-trip/reversibility checks)."""
    status = 0
    for _ in range(nsteps):
        x, y, px, py = rk4_step(n, m, omega, x, y, px, py, dt)
        if not (np.isfinite(x) and np.isfinite(y)):
            status = 2
            break
        if abs(x) > escape or abs(y) > escape:
            status = 1
            break
    return x, y, px, py, status


# ---------------------------------------------------------------------------
# Variational flow: the 4x4 fundamental matrix evolves as Phi' = J Phi with
# J = [[0, 0, 1/m, 0], [0, 0, 0, 1/m], [-Vxx, -Vxy, 0, 0], [-Vxy, -Vyy, 0, 0]].
# Combined 20-dim vector layout: (x, y, px, py, Phi rows flattened).
# ---------------------------------------------------------------------------


@njit(cache=True)
def _vderiv(n, m, omega, s, out):
    x, y, px, py = s[0], s[1], s[2], s[3]
    gx, gy = grad_potential(n, m, omega, x, y)
    out[0] = px / m
    out[1] = py / m
    out[2] = -gx
    out[3] = -gy
    vxx, vxy, vyy = hessian_potential(n, m, omega, x, y)
    for j in range(4):
        p1 = s[4 + j]
        p2 = s[8 + j]
        p3 = s[12 + j]
        p4 = s[16 + j]
        out[4 + j] = p3 / m
        out[8 + j] = p4 / m
        out[12 + j] = -vxx * p1 - vxy * p2
        out[16 + j] = -vxy * p1 - vyy * p2


@njit(cache=True)
def integrate_variational(n, m, omega, s0, nsteps, dt, escape):
    """RK4 on the joint state + fundamental-matrix system."""
    out = np.empty((nsteps + 1, 20))
    out[0] = s0
    s = s0.copy()
    k1 = np.empty(20)
    k2 = np.empty(20)
    k3 = np.empty(20)
    k4 = np.empty(20)
    tmp = np.empty(20)
    status = 0
    done = 0
    for i in range(nsteps):
        _vderiv(n, m, omega, s, k1)
        for j in range(20):
            tmp[j] = s[j] + 0.5 * dt * k1[j]
        _vderiv(n, m, omega, tmp, k2)
        for j in range(20):
            tmp[j] = s[j] + 0.5 * dt * k2[j]
        _vderiv(n, m, omega, tmp, k3)
        for j in range(20):
            tmp[j] = s[j] + dt * k3[j]
        _vderiv(n, m, omega, tmp, k4)
        for j in range(20):
            s[j] += dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j])
        if not (np.isfinite(s[0]) and np.isfinite(s[1])):
            status = 2
            break
        if abs(s[0]) > escape or abs(s[1]) > escape:
            status = 1
            break
        out[i + 1] = s
        done = i + 1
    return out, status, done


# ---------------------------------------------------------------------------
# Largest Lyapunov exponent: joint 8-dim flow (state + one tangent vector),
# renormalizing the tangent at fixed intervals and accumulating log growth.
# ---------------------------------------------------------------------------


@njit(cache=True)
def _deriv8(n, m, omega, x, y, px, py, vx, vy, vu, vv):
    gx, gy = grad_potential(n, m, omega, x, y)
    vxx, vxy, vyy = hessian_potential(n, m, omega, x, y)
    return (
        px / m,
        py / m,
        -gx,
        -gy,
        vu / m,
        vv / m,
        -vxx * vx - vxy * vy,
        -vxy * vx - vyy * vy,
    )


@njit(cache=True)
def _rk4_step8(n, m, omega, x, y, px, py, vx, vy, vu, vv, dt):
    a1, b1, c1, d1, e1, f1, g1, h1 = _deriv8(n, m, omega, x, y, px, py, vx, vy, vu, vv)
    a2, b2, c2, d2, e2, f2, g2, h2 = _deriv8(
        n, m, omega,
        x + 0.5 * dt * a1, y + 0.5 * dt * b1, px + 0.5 * dt * c1, py + 0.5 * dt * d1,
        vx + 0.5 * dt * e1, vy + 0.5 * dt * f1, vu + 0.5 * dt * g1, vv + 0.5 * dt * h1,
    )
    a3, b3, c3, d3, e3, f3, g3, h3 = _deriv8(
        n, m, omega,
        x + 0.5 * dt * a2, y + 0.5 * dt * b2, px + 0.5 * dt * c2, py + 0.5 * dt * d2,
        vx + 0.5 * dt * e2, vy + 0.5 * dt * f2, vu + 0.5 * dt * g2, vv + 0.5 * dt * h2,
    )
    a4, b4, c4, d4, e4, f4, g4, h4 = _deriv8(
        n, m, omega,
        x + dt * a3, y + dt * b3, px + dt * c3, py + dt * d3,
        vx + dt * e3, vy + dt * f3, vu + dt * g3, vv + dt * h3,
    )
    c = dt / 6.0
    return (
        x + c * (a1 + 2 * a2 + 2 * a3 + a4),
        y + c * (b1 + 2 * b2 + 2 * b3 + b4),
        px + c * (c1 + 2 * c2 + 2 * c3 + c4),
        py + c * (d1 + 2 * d2 + 2 * d3 + d4),
        vx + c * (e1 + 2 * e2 + 2 * e3 + e4),
        vy + c * (f1 + 2 * f2 + 2 * f3 + f4),
        vu + c * (g1 + 2 * g2 + 2 * g3 + g4),
        vv + c * (h1 + 2 * h2 + 2 * h3 + h4),
    )


@njit(cache=True)
def lyapunov(n, m, omega, x, y, px, py, vx, vy, vu, vv, nsteps, dt, renorm_every, escape):
    """Benettin-style tangent renormalization.

    Returns (lambda, hist_t, hist_lambda, status) where the history holds the
    running estimate at each renormalization.
    """
    nrm = np.sqrt(vx * vx + vy * vy + vu * vu + vv * vv)
    vx, vy, vu, vv = vx / nrm, vy / nrm, vu / nrm, vv / nrm
    acc = 0.0
    nh = nsteps // renorm_every
    hist_t = np.empty(nh)
    hist_l = np.empty(nh)
    hk = 0
    status = 0
    for i in range(1, nsteps + 1):
        x, y, px, py, vx, vy, vu, vv = _rk4_step8(
            n, m, omega, x, y, px, py, vx, vy, vu, vv, dt
        )
        if not (np.isfinite(x) and np.isfinite(y) and np.isfinite(vx)):
            status = 2
            break
        if abs(x) > escape or abs(y) > escape:
            status = 1
            break
        if i % renorm_every == 0:
            nrm = np.sqrt(vx * vx + vy * vy + vu * vu + vv * vv)
            acc += np.log(nrm)
            vx, vy, vu, vv = vx / nrm, vy / nrm, vu / nrm, vv / nrm
            t = i * dt
            hist_t[hk] = t
            hist_l[hk] = acc / t
            hk += 1
    if hk > 0:
        lam = hist_l[hk - 1]
    else:
        lam = np.nan
    return lam, hist_t[:hk], hist_l[:hk], status


@njit(cache=True)
def _lyapunov_scalar(n, m, omega, x, y, px, py, nsteps, dt, renorm_every, escape):
    vx, vy, vu, vv = 0.5, 0.5, 0.5, 0.5
    acc = 0.0
    status = 0
    t = 0.0
    for i in range(1, nsteps + 1):
        x, y, px, py, vx, vy, vu, vv = _rk4_step8(
            n, m, omega, x, y, px, py, vx, vy, vu, vv, dt
        )
        if not (np.isfinite(x) and np.isfinite(y) and np.isfinite(vx)):
            status = 2
            break
        if abs(x) > escape or abs(y) > escape:
            status = 1
            break
        if i % renorm_every == 0:
            nrm = np.sqrt(vx * vx + vy * vy + vu * vu + vv * vv)
            acc += np.log(nrm)
            vx, vy, vu, vv = vx / nrm, vy / nrm, vu / nrm, vv / nrm
            t = i * dt
    if t > 0.0 and status == 0:
        return acc / t, status
    return np.nan, status


@njit(cache=True, parallel=True)
def lyapunov_grid(n, m, omega, e_total, ys, pys, nsteps, dt, renorm_every, escape):
    """Largest Lyapunov exponent per (y, py) cell, ICs lifted on-shell at x=0.

    Status per cell: 0 ok, 1 escaped, 2 non-finite, 3 off-shell.
    """
    ny = ys.shape[0]
    npy = pys.shape[0]
    lam = np.full((ny, npy), np.nan)
    status = np.zeros((ny, npy), dtype=np.int64)
    for idx in prange(ny * npy):
        i = idx // npy
        j = idx % npy
        y = ys[i]
        py = pys[j]
        rad = 2.0 * m * (e_total - potential(n, m, omega, 0.0, y)) - py * py
        if rad < 0.0:
            status[i, j] = 3
            continue
        px = np.sqrt(rad)
        val, st = _lyapunov_scalar(
            n, m, omega, 0.0, y, px, py, nsteps, dt, renorm_every, escape
        )
        lam[i, j] = val
        status[i, j] = st
    return lam, status


# ---------------------------------------------------------------------------
# Oriented section crossings (x = 0, px > 0).  A sign change of x between RK4
# samples is refined by bisection on the sub-step length, re-integrating a
# single RK4 step from the pre-crossing state.
# ---------------------------------------------------------------------------


@njit(cache=True)
def _refine_crossing(n, m, omega, x, y, px, py, dt):
    """Bisect h in (0, dt] so that the state one RK4(h) step ahead has |x| < 1e-12."""
    lo = 0.0
    hi = dt
    xm, ym, pxm, pym = x, y, px, py
    h = dt
    for _ in range(90):
        h = 0.5 * (lo + hi)
        xm, ym, pxm, pym = rk4_step(n, m, omega, x, y, px, py, h)
        if abs(xm) < 1e-13:
            break
        if xm < 0.0:
            lo = h
        else:
            hi = h
    return h, xm, ym, pxm, pym


@njit(cache=True)
def poincare_crossings(n, m, omega, x, y, px, py, nsteps, dt, escape, maxcross):
    """All oriented crossings along one orbit; rows are (t, x_res, y, py, px)."""
    out = np.empty((maxcross, 5))
    cnt = 0
    status = 0
    t = 0.0
    for _ in range(nsteps):
        xn, yn, pxn, pyn = rk4_step(n, m, omega, x, y, px, py, dt)
        if not (np.isfinite(xn) and np.isfinite(yn)):
            status = 2
            break
        if abs(xn) > escape or abs(yn) > escape:
            status = 1
            break
        if x < 0.0 and xn >= 0.0:
            h, xc, yc, pxc, pyc = _refine_crossing(n, m, omega, x, y, px, py, dt)
            if pxc > 0.0 and cnt < maxcross:
                out[cnt, 0] = t + h
                out[cnt, 1] = xc
                out[cnt, 2] = yc
                out[cnt, 3] = pyc
                out[cnt, 4] = pxc
                cnt += 1
        x, y, px, py = xn, yn, pxn, pyn
        t += dt
    return out[:cnt], status


@njit(cache=True)
def next_crossing(n, m, omega, x, y, px, py, nsteps, dt, escape):
    """First oriented crossing after t=0; returns (found, t, y, py, px, status)."""
    t = 0.0
    for _ in range(nsteps):
        xn, yn, pxn, pyn = rk4_step(n, m, omega, x, y, px, py, dt)
        if not (np.isfinite(xn) and np.isfinite(yn)):
            return False, t, 0.0, 0.0, 0.0, 2
        if abs(xn) > escape or abs(yn) > escape:
            return False, t, 0.0, 0.0, 0.0, 1
        if x < 0.0 and xn >= 0.0:
            h, xc, yc, pxc, pyc = _refine_crossing(n, m, omega, x, y, px, py, dt)
            if pxc > 0.0:
                return True, t + h, yc, pyc, pxc, 0
        x, y, px, py = xn, yn, pxn, pyn
        t += dt
    return False, t, 0.0, 0.0, 0.0, 0
