import numpy as np
import pytest

from hhlab import (
    EmptyLine,
    NotClosed,
    State,
    SystemParams,
    advance_line,
    base_involution,
    critical_energy,
    gamma0,
    periodic_ics,
    potential,
    return_map,
    solve_momentum_on_shell,
    verify_periodic,
)


class TestBaseInvolution:
    def test_odd_order_uses_momentum_reversal(self):
        inv = base_involution(SystemParams(n=3))
        assert inv.kind == "momentum-time"

    def test_even_order_uses_coordinate_reversal(self):
        inv = base_involution(SystemParams(n=4))
        assert inv.kind == "coordinate-time"


class TestGamma0:
    def test_points_on_fixed_line_and_on_shell(self):
        p = SystemParams(n=3)
        e = critical_energy(p) / 4
        line = gamma0(p, e, samples=100)
        assert line.index == 0
        # momentum-time involution fixes {py = 0} on the section
        assert np.all(line.points[:, 1] == 0.0)
        for y, py in line.points:
            v = potential(p, 0.0, y) + 0.5 * py * py
            assert v <= e + 1e-12

    def test_even_order_fixed_line_is_y_axis(self):
        p = SystemParams(n=4)
        e = critical_energy(p) / 4
        line = gamma0(p, e, samples=100)
        # coordinate-time involution fixes {y = 0} on the section
        assert np.all(line.points[:, 0] == 0.0)


class TestReturnMap:
    def test_maps_section_point_to_section_point(self):
        p = SystemParams(n=3)
        e = critical_energy(p) / 4
        y2, py2 = return_map(p, e, 0.1, 0.0)
        # the image must still be in the accessible region
        assert potential(p, 0.0, y2) + 0.5 * py2 * py2 <= e + 1e-9

    def test_period_one_fixed_point_is_fixed(self):
        # the known periodic orbit is a fixed point of the doubled map
        p = SystemParams(n=3)
        e = critical_energy(p) / 4
        y0 = -0.21341508
        y2, py2 = return_map(p, e, y0, 0.0, steps=2)
        assert y2 == pytest.approx(y0, abs=1e-3)
        assert py2 == pytest.approx(0.0, abs=1e-3)


class TestPeriodicSearch:
    def test_recovers_known_orbit_n3(self):
        p = SystemParams(n=3)
        e = critical_energy(p) / 4
        hits = periodic_ics(p, e, samples=200)
        assert hits
        ys = np.array([h.y for h in hits])
        assert np.min(np.abs(ys - (-0.21341508))) < 1e-3

    def test_lifted_orbits_close(self):
        p = SystemParams(n=3)
        e = critical_energy(p) / 4
        hits = periodic_ics(p, e, samples=200)
        closed = 0
        for h in hits:
            ic = State(0.0, 0.0, h.y, h.px, h.py)
            try:
                period, dist = verify_periodic(p, ic, max_period=50.0)
            except NotClosed:
                continue
            assert dist < 1e-3
            assert period > 0.5
            closed += 1
        assert closed >= 1

    def test_energy_recorded_on_hits(self):
        p = SystemParams(n=3)
        e = critical_energy(p) / 4
        for h in periodic_ics(p, e, samples=150):
            assert h.energy == pytest.approx(e, abs=1e-10)
            assert h.period_divisor == 2


class TestAdvanceLine:
    def test_advanced_line_stays_on_shell(self):
        p = SystemParams(n=3)
        e = critical_energy(p) / 4
        line0 = gamma0(p, e, samples=60)
        line2 = advance_line(p, e, line0)
        assert line2.index == 2
        assert len(line2.points) > 0
        for y, py in line2.points:
            assert potential(p, 0.0, y) + 0.5 * py * py <= e + 1e-9


class TestVerifyPeriodic:
    def test_known_orbit_closes(self):
        p = SystemParams(n=3)
        e = critical_energy(p) / 4
        y0 = -0.21341508
        px = solve_momentum_on_shell(p, e, 0.0, y0, 0.0)
        period, dist = verify_periodic(
            p, State(0.0, 0.0, y0, px, 0.0), max_period=50.0
        )
        assert dist < 1e-4

    def test_quasi_periodic_orbit_rejected(self):
        p = SystemParams(n=3)
        ic = State(0.0, 0.0, 0.15, solve_momentum_on_shell(p, 0.125, 0.0, 0.15, 0.0), 0.0)
        with pytest.raises(NotClosed) as err:
            verify_periodic(p, ic, max_period=30.0, closure_tol=1e-6)
        assert err.value.best_distance > 1e-6
