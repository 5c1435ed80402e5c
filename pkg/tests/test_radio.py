"""Radio model oracle tests.

The independent oracle re-states the path-loss formula through natural logs
(different code path from the implementation's log10) and the frozen values
below were worked out by hand from the defaults.
"""

import math

import pytest
from hypothesis import given, strategies as st

from uavlab.controller import ChainTopology
from uavlab.kernel import AgentState, Role
from uavlab.radio import LinkEstimate, RadioParams, chain_links, link_state, max_link_range, rssi

# hand-computed: d0 * 10^((20 - 40 + 85) / 22)
D_MAX_DEFAULT = 900.6280202112786


def oracle_rssi(d: float, rp: RadioParams) -> float:
    d_eff = max(d, rp.d0)
    return rp.p_tx - rp.pl0 - 10.0 * rp.n_exp * (math.log(d_eff / rp.d0) / math.log(10.0))


def mk_agent(aid, pos, role=Role.RELAY):
    return AgentState(id=aid, position=pos, velocity=(0.0, 0.0, 0.0), role=role)


class TestRssi:
    def test_reference_distance(self):
        assert rssi(1.0, RadioParams()) == pytest.approx(-20.0, abs=1e-12)

    def test_ten_meters(self):
        # 10 * 2.2 * log10(10) = 22 dB below the reference level
        assert rssi(10.0, RadioParams()) == pytest.approx(-42.0, abs=1e-12)

    def test_hundred_meters(self):
        assert rssi(100.0, RadioParams()) == pytest.approx(-64.0, abs=1e-12)

    def test_sub_reference_clamped(self):
        rp = RadioParams()
        assert rssi(0.01, rp) == rssi(rp.d0, rp)

    def test_zero_distance_clamps_to_d0(self):
        rp = RadioParams()
        assert rssi(0.0, rp) == rssi(rp.d0, rp)

    def test_negative_distance_rejected(self):
        with pytest.raises(ValueError, match="negative distance"):
            rssi(-3.0, RadioParams())

    def test_noise_is_additive(self):
        rp = RadioParams(noise_sigma=1.0)
        assert rssi(10.0, rp, noise=2.5) == pytest.approx(rssi(10.0, rp) + 2.5, abs=1e-12)

    def test_grid_oracle_equivalence(self):
        rp = RadioParams()
        d_hi = 10.0 * max_link_range(rp)
        n = 10_000
        worst = 0.0
        for i in range(n):
            d = rp.d0 + (d_hi - rp.d0) * i / (n - 1)
            worst = max(worst, abs(rssi(d, rp) - oracle_rssi(d, rp)))
        assert worst < 1e-9

    @given(d1=st.floats(min_value=1.0, max_value=1e5), d2=st.floats(min_value=1.0, max_value=1e5))
    def test_monotone_decreasing(self, d1, d2):
        rp = RadioParams()
        if d1 > d2:
            d1, d2 = d2, d1
        assert rssi(d1, rp) >= rssi(d2, rp)


class TestMaxLinkRange:
    def test_default_value_frozen(self):
        assert max_link_range(RadioParams()) == pytest.approx(D_MAX_DEFAULT, abs=1e-9)

    def test_exponent_one_construction(self):
        # p_tx - pl0 = rssi_min + 10*n  ->  d_max = 10 * d0
        rp = RadioParams(p_tx=10.0, pl0=30.0, d0=2.0, n_exp=2.0, rssi_min=-40.0)
        assert max_link_range(rp) == pytest.approx(20.0, abs=1e-12)

    def test_round_trip(self):
        for rp in (RadioParams(), RadioParams(p_tx=15.0, pl0=35.0, d0=3.0, n_exp=2.7, rssi_min=-90.0)):
            assert abs(rssi(max_link_range(rp), rp) - rp.rssi_min) < 1e-9


class TestLinkState:
    def test_coincident_positions_clamp(self):
        rp = RadioParams()
        a = mk_agent(0, (5.0, 5.0, 5.0))
        b = mk_agent(1, (5.0, 5.0, 5.0))
        est = link_state(a, b, rp)
        assert est.rssi == pytest.approx(rp.p_tx - rp.pl0, abs=1e-12)
        assert est.up

    def test_boundary_distance_is_up(self):
        rp = RadioParams(p_tx=20.0, pl0=40.0, d0=9.0, n_exp=2.0, rssi_min=-60.0)
        d_max = max_link_range(rp)  # exactly 900.0 by construction
        assert d_max == 900.0
        est = link_state(mk_agent(0, (0.0, 0.0, 0.0)), mk_agent(1, (d_max, 0.0, 0.0)), rp)
        assert est.up
        assert est.margin == pytest.approx(0.0, abs=1e-9)

    def test_double_range_margin(self):
        rp = RadioParams()
        d = 2.0 * max_link_range(rp)
        est = link_state(mk_agent(0, (0.0, 0.0, 0.0)), mk_agent(1, (d, 0.0, 0.0)), rp)
        assert not est.up
        assert est.margin == pytest.approx(-10.0 * rp.n_exp * math.log10(2.0), abs=1e-9)

    def test_same_id_rejected(self):
        with pytest.raises(ValueError, match="endpoints"):
            link_state(mk_agent(3, (0.0, 0.0, 0.0)), mk_agent(3, (1.0, 0.0, 0.0)), RadioParams())

    def test_up_iff_within_max_range(self):
        rp = RadioParams()
        d_max = max_link_range(rp)
        for d, expect_up in ((d_max * 0.999, True), (d_max * 1.001, False)):
            est = link_state(mk_agent(0, (0.0, 0.0, 0.0)), mk_agent(1, (d, 0.0, 0.0)), rp)
            assert est.up is expect_up


class TestChainLinks:
    def chain(self):
        return ChainTopology(ground_id=0, relay_ids=(1, 2), lead_id=3, cruise_alt=50.0)

    def agents(self, spacing):
        return [
            mk_agent(0, (0.0, 0.0, 0.0), Role.GROUND_STATION),
            mk_agent(1, (spacing, 0.0, 0.0)),
            mk_agent(2, (2 * spacing, 0.0, 0.0)),
            mk_agent(3, (3 * spacing, 0.0, 0.0), Role.LEAD),
        ]

    def test_hop_count_and_order(self):
        links = chain_links(self.chain(), self.agents(10.0), RadioParams())
        assert [(l.from_id, l.to_id) for l in links] == [(0, 1), (1, 2), (2, 3)]

    def test_all_coincident_all_up(self):
        links = chain_links(self.chain(), self.agents(0.0), RadioParams())
        assert all(l.up for l in links)

    def test_overstretched_chain_has_down_link(self):
        rp = RadioParams()
        spacing = max_link_range(rp) * 1.01
        links = chain_links(self.chain(), self.agents(spacing), rp)
        assert any(not l.up for l in links)

    def test_dangling_id_rejected(self):
        with pytest.raises(ValueError, match="not in the world"):
            chain_links(self.chain(), self.agents(10.0)[:-1], RadioParams())

    def test_draw_count_enforced(self):
        with pytest.raises(ValueError, match="noise draws"):
            chain_links(self.chain(), self.agents(10.0), RadioParams(), noise_draws=[0.0])


class TestRadioParams:
    def test_closed_link_budget_rejected(self):
        with pytest.raises(ValueError, match="link budget"):
            RadioParams(p_tx=0.0, pl0=100.0, rssi_min=-85.0)

    def test_bad_fields_rejected(self):
        with pytest.raises(ValueError):
            RadioParams(d0=0.0)
        with pytest.raises(ValueError):
            RadioParams(n_exp=-1.0)
        with pytest.raises(ValueError):
            RadioParams(noise_sigma=-0.1)
