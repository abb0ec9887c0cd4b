import math

import numpy as np
import pytest

from hhlab import (
    OffShell,
    State,
    SystemParams,
    Trajectory,
    critical_energy,
    flow_endpoint,
    grad_potential,
    hessian_potential,
    integrate,
    integrate_variational,
    max_energy_drift,
    potential,
    rescale,
    rhs,
    solve_momentum_on_shell,
    total_energy,
)


def _harmonic(m, omega, x, y):
    return 0.5 * m * omega**2 * (x * x + y * y)


# hand-coded anharmonic parts for low orders, written out explicitly so they
# are independent of the recurrence the library uses internally
def _anh3(x, y):
    return (3.0 * x * x * y - y**3) / 3.0


def _anh4(x, y):
    return (4.0 * x**3 * y - 4.0 * x * y**3) / 4.0


def _anh5(x, y):
    return (5.0 * x**4 * y - 10.0 * x * x * y**3 + y**5) / 5.0


def _grad3(x, y):
    return 2.0 * x * y, x * x - y * y


def _grad4(x, y):
    return 3.0 * x * x * y - y**3, x**3 - 3.0 * x * y * y


def _grad5(x, y):
    return 4.0 * x**3 * y - 4.0 * x * y**3, x**4 - 6.0 * x * x * y * y + y**4


class TestPotential:
    def test_matches_handcoded_forms(self):
        rng = np.random.default_rng(1)
        for n, anh in [(3, _anh3), (4, _anh4), (5, _anh5)]:
            p = SystemParams(n=n)
            for x, y in rng.uniform(-1, 1, (100, 2)):
                expected = _harmonic(1, 1, x, y) + anh(x, y)
                assert potential(p, x, y) == pytest.approx(expected, abs=1e-14)

    def test_mass_and_frequency_scale_harmonic_part(self):
        p = SystemParams(m=2.0, omega=3.0, n=3)
        assert potential(p, 0.2, -0.1) == pytest.approx(
            _harmonic(2.0, 3.0, 0.2, -0.1) + _anh3(0.2, -0.1), abs=1e-14
        )

    def test_n1_is_harmonic_plus_linear(self):
        p = SystemParams(n=1)
        assert potential(p, 0.3, 0.4) == pytest.approx(
            _harmonic(1, 1, 0.3, 0.4) + 0.4, abs=1e-15
        )


class TestGradient:
    def test_matches_handcoded_forms(self):
        rng = np.random.default_rng(2)
        for n, grad in [(3, _grad3), (4, _grad4), (5, _grad5)]:
            p = SystemParams(n=n)
            for x, y in rng.uniform(-1, 1, (100, 2)):
                gx, gy = grad_potential(p, x, y)
                ex, ey = grad(x, y)
                assert gx == pytest.approx(p.m * p.omega**2 * x + ex, abs=1e-12)
                assert gy == pytest.approx(p.m * p.omega**2 * y + ey, abs=1e-12)

    def test_matches_finite_differences(self):
        rng = np.random.default_rng(3)
        h = 1e-6
        for n in range(1, 7):
            p = SystemParams(n=n)
            for x, y in rng.uniform(-0.8, 0.8, (20, 2)):
                gx, gy = grad_potential(p, x, y)
                fx = (potential(p, x + h, y) - potential(p, x - h, y)) / (2 * h)
                fy = (potential(p, x, y + h) - potential(p, x, y - h)) / (2 * h)
                assert gx == pytest.approx(fx, abs=1e-6)
                assert gy == pytest.approx(fy, abs=1e-6)


class TestHessian:
    def test_symmetric_and_laplace(self):
        rng = np.random.default_rng(4)
        for n in range(2, 8):
            p = SystemParams(n=n)
            for x, y in rng.uniform(-1, 1, (30, 2)):
                h = hessian_potential(p, x, y)
                assert h[0, 1] == pytest.approx(h[1, 0], abs=1e-14)
                # the anharmonic part solves Laplace's equation
                anh_trace = h[0, 0] + h[1, 1] - 2.0 * p.m * p.omega**2
                assert abs(anh_trace) < 1e-10

    def test_origin_is_pure_harmonic(self):
        # n=2 is the exception: its "anharmonic" term x*y is itself quadratic
        # and contributes a constant off-diagonal entry even at the origin
        for n in (1, 3, 4, 5):
            p = SystemParams(m=1.5, omega=2.0, n=n)
            h = hessian_potential(p, 0.0, 0.0)
            np.testing.assert_allclose(h, 1.5 * 4.0 * np.eye(2), atol=1e-14)
        h2 = hessian_potential(SystemParams(m=1.5, omega=2.0, n=2), 0.0, 0.0)
        np.testing.assert_allclose(h2, [[6.0, 1.0], [1.0, 6.0]], atol=1e-14)

    def test_matches_gradient_finite_differences(self):
        p = SystemParams(n=5)
        x, y = 0.3, -0.2
        h = hessian_potential(p, x, y)
        eps = 1e-6
        gxp = grad_potential(p, x + eps, y)
        gxm = grad_potential(p, x - eps, y)
        gyp = grad_potential(p, x, y + eps)
        gym = grad_potential(p, x, y - eps)
        fd = np.array(
            [
                [(gxp[0] - gxm[0]) / (2 * eps), (gyp[0] - gym[0]) / (2 * eps)],
                [(gxp[1] - gxm[1]) / (2 * eps), (gyp[1] - gym[1]) / (2 * eps)],
            ]
        )
        np.testing.assert_allclose(h, fd, atol=1e-6)


class TestCriticalEnergy:
    def test_known_values_exact(self):
        assert critical_energy(SystemParams(n=3)) == 1.0 / 6.0
        assert critical_energy(SystemParams(n=4)) == 0.25
        assert critical_energy(SystemParams(n=5)) == 0.3
        assert critical_energy(SystemParams(n=6)) == pytest.approx(1.0 / 3.0)

    def test_dimensionless_convention(self):
        # E_c refers to the m = omega = 1 normal form; the scale invariance
        # maps any other (m, omega) onto it, so the value depends only on n
        assert critical_energy(SystemParams(m=2.0, omega=0.5, n=4)) == 0.25
        assert critical_energy(SystemParams(n=2)) == 0.0


class TestOnShellLift:
    def test_round_trip(self):
        p = SystemParams(n=3)
        e = 0.125
        px = solve_momentum_on_shell(p, e, 0.0, 0.15, 0.0)
        s = State(0.0, 0.0, 0.15, px, 0.0)
        assert total_energy(p, s) == pytest.approx(e, abs=1e-14)
        assert px > 0

    def test_sign_selection(self):
        p = SystemParams(n=3)
        px = solve_momentum_on_shell(p, 0.125, 0.0, 0.15, 0.0, sign=-1)
        assert px < 0

    def test_off_shell_raises(self):
        p = SystemParams(n=3)
        with pytest.raises(OffShell):
            solve_momentum_on_shell(p, 0.01, 0.0, 0.5, 0.0)


class TestIntegration:
    def test_n1_matches_closed_form(self):
        # N=1 decouples after shifting y by the equilibrium offset
        p = SystemParams(n=1)
        ic = State(0.0, 0.4, 0.1, -0.2, 0.3)
        t_end = 10.0
        traj = integrate(p, ic, t_end, 1e-3)
        t = traj.times
        yeq = -1.0
        x_exp = ic.x * np.cos(t) + ic.px * np.sin(t)
        y_exp = yeq + (ic.y - yeq) * np.cos(t) + ic.py * np.sin(t)
        np.testing.assert_allclose(traj.data[:, 0], x_exp, atol=1e-9)
        np.testing.assert_allclose(traj.data[:, 1], y_exp, atol=1e-9)

    def test_fixed_point_stays_fixed(self):
        p = SystemParams(n=1)
        traj = integrate(p, State(0.0, 0.0, -1.0, 0.0, 0.0), 5.0, 1e-2)
        np.testing.assert_allclose(
            traj.data, np.tile([0.0, -1.0, 0.0, 0.0], (len(traj), 1)), atol=1e-14
        )

    def test_energy_drift_small(self):
        p = SystemParams(n=3)
        ic = State(0.0, 0.0, 0.15, solve_momentum_on_shell(p, 0.125, 0.0, 0.15, 0.0), 0.0)
        assert max_energy_drift(p, ic, 100.0, 1e-3) < 1e-10

    def test_momentum_flip_reversibility(self):
        p = SystemParams(n=3)
        ic = State(0.0, 0.1, -0.2, 0.3, 0.05)
        end = flow_endpoint(p, ic, 50.0, 1e-3)
        back = flow_endpoint(
            p, State(0.0, end.x, end.y, -end.px, -end.py), 50.0, 1e-3
        )
        assert abs(back.x - ic.x) < 1e-8
        assert abs(back.y - ic.y) < 1e-8
        assert abs(back.px + ic.px) < 1e-8
        assert abs(back.py + ic.py) < 1e-8

    def test_rhs_consistency(self):
        p = SystemParams(m=2.0, omega=0.5, n=4)
        s = State(0.0, 0.1, 0.2, 0.3, 0.4)
        dx = rhs(p, s)
        gx, gy = grad_potential(p, s.x, s.y)
        np.testing.assert_allclose(
            dx, [s.px / p.m, s.py / p.m, -gx, -gy], atol=1e-14
        )


class TestVariationalFlow:
    def test_n1_fundamental_matrix_is_oscillator_rotation(self):
        p = SystemParams(n=1)
        ic = State(0.0, 0.0, -1.0, 0.0, 0.0)  # equilibrium: constant Jacobian
        dt = 2.0 * math.pi / 6283  # ~1e-3, divides the period exactly
        phi = integrate_variational(p, ic, 2.0 * math.pi, dt)[-1].phi
        np.testing.assert_allclose(phi, np.eye(4), atol=1e-8)

    def test_symplectic_property(self):
        # Phi^T J Phi = J along any trajectory of a Hamiltonian flow
        p = SystemParams(n=3)
        ic = State(0.0, 0.0, 0.15, 0.45, 0.0)
        phi = integrate_variational(p, ic, 20.0, 1e-3)[-1].phi
        j = np.block(
            [[np.zeros((2, 2)), np.eye(2)], [-np.eye(2), np.zeros((2, 2))]]
        )
        np.testing.assert_allclose(phi.T @ j @ phi, j, atol=1e-8)


class TestRescale:
    def test_scaled_trajectory_solves_scaled_dynamics(self):
        # mapping r -> alpha r with m -> m/alpha^(n+2), omega -> alpha^n omega
        # sends solutions to solutions (with p -> p/alpha, t -> t/alpha^n)
        p = SystemParams(n=3)
        ic = State(0.0, 0.05, 0.1, 0.2, -0.1)
        traj = integrate(p, ic, 8.0, 1e-4)
        alpha = 0.5
        p2, traj2 = rescale(p, traj, alpha)
        redone = integrate(p2, traj2.initial_state, 8.0 / alpha**3, traj2.dt)
        np.testing.assert_allclose(redone.data, traj2.data, atol=1e-8)

    def test_energy_scaling(self):
        p = SystemParams(n=4)
        ic = State(0.0, 0.05, 0.1, 0.2, -0.1)
        traj = integrate(p, ic, 1.0, 1e-3)
        alpha = 2.0
        p2, traj2 = rescale(p, traj, alpha)
        assert traj2.energy == pytest.approx(
            traj.energy * alpha**p.n, rel=1e-12
        )
        assert total_energy(p2, traj2.initial_state) == pytest.approx(
            traj2.energy, rel=1e-10
        )


class TestDihedralSymmetry:
    def test_potential_invariant_under_rotation(self):
        # V_N is invariant under rotation by 2*pi/N composed with reflection
        # parity; for N=3 rotation by 2*pi/3 maps the potential to itself
        p = SystemParams(n=3)
        ang = 2.0 * math.pi / 3.0
        c, s = math.cos(ang), math.sin(ang)
        rng = np.random.default_rng(5)
        for x, y in rng.uniform(-1, 1, (50, 2)):
            xr, yr = c * x - s * y, s * x + c * y
            assert potential(p, xr, yr) == pytest.approx(
                potential(p, x, y), abs=1e-12
            )

    def test_x_reflection_parity(self):
        # the anharmonic part is even in x for odd N and odd in x for even N
        rng = np.random.default_rng(6)
        for n in (3, 4, 5, 6):
            p = SystemParams(n=n)
            sign = 1.0 if n % 2 == 1 else -1.0
            for x, y in rng.uniform(-1, 1, (20, 2)):
                anh = potential(p, x, y) - _harmonic(1, 1, x, y)
                anh_ref = potential(p, -x, y) - _harmonic(1, 1, x, y)
                assert anh_ref == pytest.approx(sign * anh, abs=1e-12)
