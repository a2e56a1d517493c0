"""Pulse shapes: endpoints, mirror identity, gap-adapted sweep, Raman pair."""

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from conftest import OMEGA0, TAU, gate_params
from ckzgate.analysis import bright_gap
from ckzgate.model import build_star_graph
from ckzgate.pulses import (
    PulseConstructionError,
    flat_top_linear,
    gap_adapted_sweep,
    mirror_pulse,
    plateau_start,
    pulse_area,
    stirap_pair,
)
from ckzgate.qdyn import ContractViolation

DELTA0 = 2.4 * OMEGA0


class TestLinear:
    def test_endpoints(self):
        p = flat_top_linear(OMEGA0, DELTA0, TAU)
        assert p.omega(0.0) == pytest.approx(0.0, abs=1e-12)
        assert p.omega(TAU) == pytest.approx(0.0, abs=1e-12)
        assert p.omega(TAU / 2) == pytest.approx(OMEGA0)
        assert p.delta(0.0) == pytest.approx(-DELTA0)
        assert p.delta(TAU) == pytest.approx(DELTA0)

    def test_envelope_formula(self):
        p = flat_top_linear(OMEGA0, DELTA0, TAU)
        sigma = 0.4 * TAU
        edge = math.exp(-((0.5 / 0.4) ** 8))
        t = 0.3 * TAU
        expected = OMEGA0 * (math.exp(-(((t - TAU / 2) / sigma) ** 8)) - edge) / (1 - edge)
        assert p.omega(t) == pytest.approx(expected, rel=1e-12)

    def test_zero_outside(self):
        p = flat_top_linear(OMEGA0, DELTA0, TAU)
        assert p.omega(-0.1) == 0.0 and p.omega(TAU + 0.1) == 0.0

    def test_area_against_adaptive_quadrature(self):
        p = flat_top_linear(OMEGA0, DELTA0, TAU)
        ref, _ = quad(p.omega, 0, TAU, epsabs=1e-12, limit=200)
        assert pulse_area(p.omega, 0, TAU) == pytest.approx(ref, rel=1e-8)

    def test_plateau_start(self):
        p = flat_top_linear(OMEGA0, DELTA0, TAU)
        t9 = plateau_start(p)
        assert p.omega(t9) == pytest.approx(0.9 * OMEGA0, rel=1e-10)
        assert 0 < t9 < TAU / 4

    def test_rejects_nonpositive_tau(self):
        with pytest.raises(ContractViolation):
            flat_top_linear(OMEGA0, DELTA0, 0.0)


class TestMirror:
    @given(st.floats(0.3, 2.0))
    def test_mirror_identity(self, tau):
        p1 = flat_top_linear(OMEGA0, DELTA0, tau)
        p2 = mirror_pulse(p1)
        t = np.linspace(0, tau, 10_000)
        assert np.allclose(p2.omega(2 * tau - t), p1.omega(t), atol=1e-12)
        assert np.allclose(p2.delta(2 * tau - t), -p1.delta(t), atol=1e-12)
        assert p2.t_start == tau and p2.t_end == pytest.approx(2 * tau)

    def test_linear_mirror_is_same_ramp(self):
        p1 = flat_top_linear(OMEGA0, DELTA0, TAU)
        p2 = mirror_pulse(p1)
        # step II sweeps again from -Delta0 to +Delta0
        assert p2.delta(TAU) == pytest.approx(-DELTA0)
        assert p2.delta(2 * TAU) == pytest.approx(DELTA0)


@pytest.fixture(scope="module")
def sweep():
    delta0, b = gate_params(2)
    gap = bright_gap(build_star_graph(2, b), OMEGA0)
    return gap_adapted_sweep(gap, OMEGA0, delta0, 0.6), gap


class TestGapAdapted:
    def test_endpoints(self, sweep):
        p, _ = sweep
        assert p.delta(0.0) == pytest.approx(-DELTA0, rel=1e-10)
        assert p.delta(0.6) == pytest.approx(DELTA0, rel=1e-10)

    def test_monotone_and_continuous(self, sweep):
        p, _ = sweep
        t = np.linspace(0, 0.6, 20_001)
        d = p.delta(t)
        assert np.all(np.diff(d) > 0)
        assert np.max(np.abs(np.diff(d))) < 1e-2 * DELTA0

    def test_rate_follows_gap(self, sweep):
        p, gap = sweep
        m = p.meta
        t = np.linspace(m["dt_edge"] + 1e-3, 0.6 - m["dt_edge"] - 1e-3, 401)
        rate = np.gradient(p.delta(t), t)
        expected = m["zeta"] * gap(p.delta(t))
        assert np.allclose(rate[5:-5], expected[5:-5], rtol=1e-3)

    def test_slow_near_resonance(self, sweep):
        p, _ = sweep
        m = p.meta
        t = np.linspace(m["dt_edge"], 0.6 - m["dt_edge"], 2001)
        rate = np.gradient(p.delta(t), t)
        mid = np.argmin(np.abs(p.delta(t)))
        assert rate[mid] < rate[5] and rate[mid] < rate[-5]

    def test_constant_gap_gives_linear_interior(self):
        p = gap_adapted_sweep(lambda d: np.ones_like(d), OMEGA0, DELTA0, TAU)
        lin = flat_top_linear(OMEGA0, DELTA0, TAU)
        dt = p.meta["dt_edge"]
        t = np.linspace(dt, TAU - dt, 101)
        assert np.allclose(p.delta(t), lin.delta(t), rtol=1e-9, atol=1e-9)

    def test_rejects_nonpositive_gap(self):
        with pytest.raises(ContractViolation):
            gap_adapted_sweep(lambda d: d, OMEGA0, DELTA0, TAU)

    def test_rejects_steep_boundary(self):
        with pytest.raises(PulseConstructionError):
            gap_adapted_sweep(lambda d: 1.0 + 1e4 * (d / DELTA0) ** 8, OMEGA0, DELTA0, TAU)


class TestStirapPair:
    def test_counterintuitive_order(self):
        sp = stirap_pair(2 * math.pi * 80, 0.2, 0.055)
        assert sp.mixing_angle(0.01) == pytest.approx(0.0, abs=1e-12)
        assert abs(sp.mixing_angle(0.19)) == pytest.approx(math.pi / 2, abs=1e-12)

    def test_mirror_symmetry(self):
        sp = stirap_pair(1.0, 0.2, 0.05)
        t = np.linspace(0, 0.2, 1001)
        assert np.allclose(sp.omega_sp(t), -sp.omega_dp(0.2 - t), atol=1e-12)

    def test_area(self):
        om, width = 3.0, 0.15
        sp = stirap_pair(om, 0.2, 0.2 - width)
        assert pulse_area(sp.omega_dp, 0, 0.2) == pytest.approx(om * width / 2, rel=1e-9)

    @pytest.mark.parametrize("d", [0.0, 0.2, -0.1])
    def test_delay_contract(self, d):
        with pytest.raises(ContractViolation):
            stirap_pair(1.0, 0.2, d)
