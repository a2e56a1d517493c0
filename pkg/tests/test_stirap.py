"""Raman transfer between the two Rydberg manifolds."""

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import gate_params
from ckzgate.model import build_star_graph
from ckzgate.pulses import stirap_pair
from ckzgate.qdyn import ContractViolation, propagate
from ckzgate.stirap import (
    StirapConfig,
    dynamical_phase_check,
    pulse_area,
    transfer_error,
    transfer_hamiltonian,
    transfer_run,
)

TWO_PI = 2 * math.pi
RAMAN = dict(omega_max=TWO_PI * 80, tau_tr=0.2, tau_del=0.275 * 0.2)


def _pair(b, cfg):
    a1 = transfer_hamiltonian(np.zeros((1, 1)), cfg)
    a2 = transfer_hamiltonian(np.array([[0.0, b], [b, 0.0]]), cfg)
    return a1, a2


class TestTransfer:
    def test_passive_input(self):
        arr = build_star_graph(2, gate_params(2)[1])
        rec = transfer_run(arr, (0, 0, 0), StirapConfig(**RAMAN))
        assert rec.nu == 0 and rec.amplitude == 1.0

    def test_single_atom_adiabatic(self):
        arr = build_star_graph(2, gate_params(2)[1])
        rec = transfer_run(arr, (1, 0, 0), StirapConfig(**RAMAN))
        assert rec.fidelity > 0.999
        assert rec.pop_Rp[-1] == pytest.approx(rec.fidelity)
        assert rec.pop_R[0] == pytest.approx(1.0)

    def test_degenerate_configurations_averaged(self):
        arr = build_star_graph(2, gate_params(2)[1])
        rec = transfer_run(arr, (1, 1, 0), StirapConfig(**RAMAN), n_samples=3)
        assert len(rec.amplitudes) == 2

    def test_decay_adds_error(self):
        arr = build_star_graph(2, gate_params(2)[1])
        clean = transfer_error(arr, StirapConfig(**RAMAN), n_samples=3)
        lossy = transfer_error(arr, StirapConfig(**RAMAN, gamma_p=TWO_PI * 0.58), n_samples=3)
        assert lossy.E_tr > clean.E_tr + 1e-3
        assert lossy.printed_sum == pytest.approx(1 - lossy.E_tr)

    def test_monotone_in_coupling(self):
        cfg = StirapConfig(**RAMAN)
        errs = [
            transfer_error(build_star_graph(2, TWO_PI * b), cfg, n_samples=3).E_tr for b in (4, 16, 48)
        ]
        assert errs[0] < errs[1] < errs[2]

    def test_hamiltonian_hermitian_without_decay(self):
        cfg = StirapConfig(**RAMAN, lam=0.7, chi=0.2)
        h = transfer_hamiltonian(np.array([[0, 5.0], [5.0, 0]]), cfg)
        m = h(0.08)
        assert m.shape == (9, 9)
        assert np.allclose(m, m.conj().T)

    @pytest.mark.parametrize(
        "kw", [dict(tau_del=0.0), dict(tau_del=0.3), dict(lam=0.0), dict(chi=1.5), dict(gamma_p=-1.0)]
    )
    def test_config_contract(self, kw):
        with pytest.raises(ContractViolation):
            StirapConfig(**{**RAMAN, **kw})


class TestInteractionPhase:
    def test_symmetric_pulses_cancel(self):
        pc = dynamical_phase_check(stirap_pair(**RAMAN), 10.0)
        assert abs(pc.residual) < 1e-12 and abs(pc.phi_int) < 1e-10

    @given(st.floats(0.3, 3.0), st.floats(-0.5, 0.5))
    def test_phase_proportional_to_residual(self, lam, chi):
        pc = dynamical_phase_check(stirap_pair(**RAMAN), 7.0, lam, chi)
        assert pc.phi_int == pytest.approx(7.0 * pc.residual, rel=1e-9, abs=1e-12)

    def test_unequal_interaction_leaves_phase(self):
        pc = dynamical_phase_check(stirap_pair(**RAMAN), 10.0, lam=1.5)
        assert abs(pc.phi_int) > 0.1

    @pytest.mark.parametrize("lam,chi", [(2.0, 0.0), (0.5, 0.3)])
    def test_closed_form_against_simulation(self, lam, chi):
        b = TWO_PI * 0.5
        cfg = StirapConfig(omega_max=TWO_PI * 200, tau_tr=0.5, tau_del=0.11, lam=lam, chi=chi)
        h1, h2 = _pair(b, cfg)
        a1 = propagate(np.eye(3)[0], h1, (0, 0.5), tol=1e-10).final[2]
        a2 = propagate(np.eye(9)[0], h2, (0, 0.5), tol=1e-10).final[8]
        pc = dynamical_phase_check(cfg.pulses, b, lam, chi)
        assert float(np.angle(a2 / a1**2)) == pytest.approx(-pc.phi_int, abs=1e-3)

    def test_pulse_area_against_closed_form(self):
        # no overlap: each sin^2 lobe contributes omega_max * width / 2
        om, width = 3.0, 0.1
        sp = stirap_pair(om, 0.2 + 1e-12, 0.1 + 1e-12)
        assert pulse_area(sp) == pytest.approx(om * width, rel=1e-6)
