"""Relay controller tests: slot geometry, tracking commands, stretch guard."""

import math

import pytest
from hypothesis import given, settings, strategies as st

from uavlab.controller import (
    ChainTopology,
    ControllerParams,
    convergence_status,
    desired_positions,
    relay_commands,
    stretch_guard,
)
from uavlab.kernel import AgentState, KinematicLimits, Role, WorldState, step_world, vec_dist, vec_norm
from uavlab.radio import RadioParams

# constructed so d_max is exactly 900.0 and d_safe exactly 720.0
RP_900 = RadioParams(p_tx=20.0, pl0=40.0, d0=9.0, n_exp=2.0, rssi_min=-60.0)
CP = ControllerParams()


def chain(m, cruise_alt=50.0):
    return ChainTopology(ground_id=0, relay_ids=tuple(range(1, m + 1)), lead_id=m + 1, cruise_alt=cruise_alt)


def relay(aid, pos):
    return AgentState(id=aid, position=pos, velocity=(0.0, 0.0, 0.0), role=Role.RELAY)


class TestDesiredPositions:
    def test_equal_thirds(self):
        out = desired_positions((0.0, 0.0, 0.0), (300.0, 0.0, 50.0), chain(2))
        assert out == [(100.0, 0.0, 50.0), (200.0, 0.0, 50.0)]

    def test_degenerate_segment(self):
        out = desired_positions((5.0, 5.0, 0.0), (5.0, 5.0, 80.0), chain(3))
        assert out == [(5.0, 5.0, 50.0)] * 3

    def test_no_relays_empty(self):
        assert desired_positions((0.0, 0.0, 0.0), (10.0, 0.0, 0.0), chain(0)) == []

    def test_altitude_is_cruise_alt_not_interpolated(self):
        out = desired_positions((0.0, 0.0, 0.0), (90.0, 0.0, 200.0), chain(2, cruise_alt=35.0))
        assert [p[2] for p in out] == [35.0, 35.0]

    @given(
        gx=st.floats(-5000, 5000), gy=st.floats(-5000, 5000),
        lx=st.floats(-5000, 5000), ly=st.floats(-5000, 5000),
        m=st.integers(min_value=1, max_value=8),
    )
    @settings(max_examples=1000)
    def test_equal_spacing_and_reversal_symmetry(self, gx, gy, lx, ly, m):
        ground = (gx, gy, 0.0)
        lead = (lx, ly, 77.0)
        fwd = desired_positions(ground, lead, chain(m))
        gap = math.hypot(lx - gx, ly - gy) / (m + 1)
        pts = [(gx, gy)] + [(p[0], p[1]) for p in fwd] + [(lx, ly)]
        for a, b in zip(pts[:-1], pts[1:]):
            assert math.hypot(b[0] - a[0], b[1] - a[1]) == pytest.approx(gap, abs=1e-9)
        rev = desired_positions(lead, ground, chain(m))
        for p, q in zip(fwd, reversed(rev)):
            assert vec_dist(p, q) <= 1e-9


class TestRelayCommands:
    def test_on_target_zero(self):
        cmds = relay_commands([relay(1, (100.0, 0.0, 50.0))], [(100.0, 0.0, 50.0)], CP, KinematicLimits())
        assert cmds == {1: (0.0, 0.0, 0.0)}

    def test_one_meter_east(self):
        cmds = relay_commands([relay(1, (101.0, 0.0, 50.0))], [(100.0, 0.0, 50.0)], CP, KinematicLimits())
        assert cmds[1] == pytest.approx((-0.8, 0.0, 0.0), abs=1e-12)

    def test_far_target_saturates(self):
        cmds = relay_commands([relay(1, (0.0, 0.0, 50.0))], [(100.0, 0.0, 50.0)], CP, KinematicLimits())
        assert vec_norm(cmds[1]) == pytest.approx(12.0, abs=1e-9)
        assert cmds[1][0] > 0

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError, match="targets"):
            relay_commands([relay(1, (0.0, 0.0, 0.0))], [], CP, KinematicLimits())

    @given(
        px=st.floats(-2000, 2000), py=st.floats(-2000, 2000), pz=st.floats(-50, 200),
        qx=st.floats(-2000, 2000), qy=st.floats(-2000, 2000), qz=st.floats(-50, 200),
    )
    def test_never_exceeds_v_max(self, px, py, pz, qx, qy, qz):
        lim = KinematicLimits()
        cmds = relay_commands([relay(1, (px, py, pz))], [(qx, qy, qz)], CP, lim)
        assert vec_norm(cmds[1]) <= lim.v_max + 1e-9


class TestStretchGuard:
    def test_comfortable_scale_one(self):
        # per_hop 2000/3 ~ 666.7 < 720
        assert stretch_guard((0.0, 0.0, 0.0), (2000.0, 0.0, 0.0), 2, RP_900, CP) == 1.0

    def test_linear_midpoint(self):
        # per_hop = 810 -> (900-810)/180 = 0.5 exactly
        assert stretch_guard((0.0, 0.0, 0.0), (2430.0, 0.0, 0.0), 2, RP_900, CP) == pytest.approx(0.5, abs=1e-12)

    def test_hard_stop(self):
        assert stretch_guard((0.0, 0.0, 0.0), (2700.0, 0.0, 0.0), 2, RP_900, CP) == 0.0
        assert stretch_guard((0.0, 0.0, 0.0), (5000.0, 0.0, 0.0), 2, RP_900, CP) == 0.0

    def test_boundaries(self):
        # exactly d_safe stays full speed; exactly d_max stops
        assert stretch_guard((0.0, 0.0, 0.0), (720.0 * 3, 0.0, 0.0), 2, RP_900, CP) == 1.0
        assert stretch_guard((0.0, 0.0, 0.0), (900.0 * 3, 0.0, 0.0), 2, RP_900, CP) == 0.0

    @given(
        dist=st.floats(min_value=0.0, max_value=20000.0),
        m=st.integers(min_value=0, max_value=8),
    )
    def test_range_and_monotonicity(self, dist, m):
        s = stretch_guard((0.0, 0.0, 0.0), (dist, 0.0, 0.0), m, RP_900, CP)
        assert 0.0 <= s <= 1.0
        s_further = stretch_guard((0.0, 0.0, 0.0), (dist + 10.0, 0.0, 0.0), m, RP_900, CP)
        assert s_further <= s + 1e-12


class TestConvergenceStatus:
    def test_all_on_target(self):
        ok, err = convergence_status([relay(1, (5.0, 0.0, 50.0))], [(5.0, 0.0, 50.0)], 2.0)
        assert ok and err == 0.0

    def test_one_meter_off_within_tol(self):
        ok, err = convergence_status([relay(1, (6.0, 0.0, 50.0))], [(5.0, 0.0, 50.0)], 2.0)
        assert ok and err == pytest.approx(1.0, abs=1e-12)

    def test_five_meters_off_not_converged(self):
        ok, err = convergence_status([relay(1, (10.0, 0.0, 50.0))], [(5.0, 0.0, 50.0)], 2.0)
        assert not ok and err == pytest.approx(5.0, abs=1e-12)

    def test_empty_chain_converged_at_zero(self):
        assert convergence_status([], [], 2.0) == (True, 0.0)

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            convergence_status([relay(1, (0.0, 0.0, 0.0))], [], 2.0)


class TestClosedLoop:
    def test_stationary_lead_converges_within_30s(self):
        # relays start bunched near the ground station, lead parked 300 m out
        lim = KinematicLimits()
        topo = chain(3)
        ground = AgentState(id=0, position=(0.0, 0.0, 0.0), velocity=(0.0, 0.0, 0.0), role=Role.GROUND_STATION)
        lead = AgentState(id=4, position=(300.0, 0.0, 50.0), velocity=(0.0, 0.0, 0.0), role=Role.LEAD)
        relays = [relay(i, (10.0 * i, 0.0, 50.0)) for i in (1, 2, 3)]
        world = WorldState.initial([ground, *relays, lead], seed=5)
        targets = desired_positions(ground.position, lead.position, topo)
        ticks_30s = int(30.0 / lim.dt)
        converged_at = None
        errors = []
        for t in range(1, ticks_30s + 1):
            rl = [world.agent(i) for i in topo.relay_ids]
            world = step_world(world, relay_commands(rl, targets, CP, lim), lim)
            ok, err = convergence_status([world.agent(i) for i in topo.relay_ids], targets, CP.conv_tol)
            errors.append(err)
            if ok and converged_at is None:
                converged_at = t
        assert converged_at is not None, "did not converge within 30 simulated seconds"
        # error shrinks monotonically until tolerance is reached
        until = errors[: converged_at]
        assert all(b <= a + 1e-9 for a, b in zip(until[:-1], until[1:]))
