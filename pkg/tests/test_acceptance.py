"""Acceptance criteria C1-C12 at their stated tolerances.

Each test prints one PASS/FAIL line; the collected lines are repeated in the
terminal summary.
"""

import math
import time
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize_scalar

from conftest import GAMMA, OMEGA0, TAU, TWO_PI, gate_params, report
from ckzgate.analysis import (
    bright_gap,
    classify_symmetry,
    leakage_fit,
    mean_excitation,
    minimize_total_error,
    spectrum_scan,
    thermal_monte_carlo,
)
from ckzgate.model import (
    assemble_hamiltonian,
    basis_for_input,
    build_extended_graph,
    build_star_graph,
    hamiltonian_terms,
    input_bits,
    mis_excitations,
)
from ckzgate.protocol import (
    build_bundle,
    average_fidelity,
    ckz_diagonal,
    correction_qubits,
    corrected_diagonal,
    phase_decomposition,
    run_gate,
)
from ckzgate.pulses import flat_top_linear, gap_adapted_sweep, mirror_pulse
from ckzgate.qdyn import LinearHamiltonian, overlap_fidelity, propagate, propagate_expm
from ckzgate.stirap import StirapConfig, transfer_error

GAMMA_P = TWO_PI * 0.58
OMEGA_MAX = TWO_PI * 80.0

pytestmark = pytest.mark.slow


def _star(k):
    return build_star_graph(k, gate_params(k)[1])


def _linear(k, tau):
    return flat_top_linear(OMEGA0, gate_params(k)[0], tau)


def _within(x, ref, rel):
    return abs(x - ref) <= rel * abs(ref)


# ---------------------------------------------------------------- C1


TABLE_STAR = {
    (0, 0, 0): 1, (1, 0, 0): -1, (0, 1, 0): -1, (0, 0, 1): -1,
    (1, 1, 0): -1, (1, 0, 1): -1, (0, 1, 1): 1, (1, 1, 1): 1,
}
TABLE_BUS = {q: (-1 if q == (1, 1, 1) else 1) for q in TABLE_STAR}


def test_c1_truth_tables():
    start = time.perf_counter()
    b = gate_params(2)[1]
    worst, wrong = 0.0, []
    for arr, table in ((_star(2), TABLE_STAR), (build_extended_graph(2, (1, 1), b), TABLE_BUS)):
        run = run_gate(arr, _linear(2, TAU), n_samples=3)
        for q, sign in table.items():
            phi = float(np.angle(run.inputs[q].g))
            got = 1 if abs(phi) < math.pi / 2 else -1
            worst = max(worst, abs(phi) if got == 1 else math.pi - abs(phi))
            if got != sign or (-1) ** run.inputs[q].nu != sign:
                wrong.append(q)
    elapsed = time.perf_counter() - start
    ok = not wrong and worst < 0.02 and elapsed < 30
    report("C1", ok, f"truth tables: 16/16 signs {'ok' if not wrong else wrong}, "
           f"max phase offset {worst:.2e} rad (< 0.02), {elapsed:.1f} s (< 30)")
    assert ok


# ---------------------------------------------------------------- C2


def test_c2_dynamical_phase_cancels():
    vals = {}
    for k in (2, 3, 4):
        run = run_gate(_star(k), _linear(k, TAU), n_samples=3)
        vals[k] = max(abs(phase_decomposition(run, q)[0]) for q in input_bits(k + 1))
    ok = all(v < 0.01 for v in vals.values())
    report("C2", ok, "max |phi_d| " + ", ".join(f"k={k}: {v:.1e}" for k, v in vals.items()) + " rad (< 0.01)")
    assert ok


# ---------------------------------------------------------------- C3


def test_c3_spectrum_antisymmetry():
    worst = {}
    for k in (2, 3, 4):
        arr = _star(k)
        basis = basis_for_input(arr, (1,) * (k + 1))
        delta0 = gate_params(k)[0]
        dev = 0.0
        for d in np.linspace(-delta0, delta0, 256):
            e = np.linalg.eigvalsh(assemble_hamiltonian(arr, basis, OMEGA0, d))
            f = np.linalg.eigvalsh(assemble_hamiltonian(arr, basis, OMEGA0, -d, interaction_sign=-1))
            dev = max(dev, float(np.max(np.abs(e + f[::-1]))))
        worst[k + 1] = dev
    ok = all(v < 1e-10 for v in worst.values())
    report("C3", ok, "max |E + reverse(E')| " + ", ".join(f"N={n}: {v:.1e}" for n, v in worst.items()) + " (< 1e-10)")
    assert ok


# ---------------------------------------------------------------- C4, C7


def _total_error(k, kind):
    arr = _star(k)
    bundle = build_bundle(arr)
    delta0 = gate_params(k)[0]
    gap = bright_gap(arr, OMEGA0) if kind == "gap" else None

    def err(tau):
        pulse = (
            gap_adapted_sweep(gap, OMEGA0, delta0, tau) if gap is not None else flat_top_linear(OMEGA0, delta0, tau)
        )
        return average_fidelity(run_gate(arr, pulse, GAMMA, n_samples=3, bundle=bundle)).E

    return err


@pytest.fixture(scope="module")
def linear_optimum():
    start = time.perf_counter()
    tau, e, _ = minimize_total_error(_total_error(2, "linear"), (0.3, 1.3), n_coarse=11)
    return tau, e, time.perf_counter() - start


def test_c4_fidelity_anchor(linear_optimum):
    tau, e, elapsed = linear_optimum
    ok = _within(e, 3.1e-3, 0.20) and _within(tau, 0.8, 0.15) and elapsed < 300
    report("C4", ok, f"k=2 E_min = {e:.3e} (3.1e-3 +/- 20%), tau_opt = {tau:.3f} us (0.8 +/- 15%), {elapsed:.0f} s")
    assert ok


def test_c7_gap_adapted_sweep(linear_optimum):
    tau_l, e_l, _ = linear_optimum
    tau_g, e_g, _ = minimize_total_error(_total_error(2, "gap"), (0.3, 1.3), n_coarse=11)
    re, rt = e_g / e_l, tau_g / tau_l
    ok = abs(re - 0.75) <= 0.10 and abs(rt - 0.75) <= 0.10
    report("C7", ok, f"gap-adapted E = {e_g:.3e} at {tau_g:.3f} us; ratios E {re:.3f}, tau {rt:.3f} (0.75 +/- 0.10)")
    assert ok


# ---------------------------------------------------------------- C5


FIT_ANCHORS = {2: (0.99, 0.43, 0.15), 3: (4.27, 0.45, 0.20), 4: (15.88, 0.48, 0.25)}
FIT_GRID = np.round(np.arange(0.4, 1.6 + 1e-9, 0.025), 6)


def test_c5_leakage_fits():
    parts, ok = [], True
    for k, (mu_ref, c_ref, rel) in FIT_ANCHORS.items():
        arr = _star(k)
        bundle = build_bundle(arr)
        samples = [
            (t, average_fidelity(run_gate(arr, _linear(k, t), n_samples=3, bundle=bundle)).E) for t in FIT_GRID
        ]
        with warnings.catch_warnings():
            # Landau-Zener wiggles make the samples non-monotone; the fit is still the estimator
            warnings.simplefilter("ignore")
            fit = leakage_fit(samples, k, gate_params(k)[0], OMEGA0)
        good = _within(fit.mu, mu_ref, rel) and _within(fit.c, c_ref, rel)
        ok &= good
        parts.append(f"k={k}: mu {fit.mu:.2f} ({mu_ref}), c {fit.c:.3f} ({c_ref}) +/-{rel:.0%} {'ok' if good else 'off'}")
    report("C5", ok, "; ".join(parts))
    assert ok


# ---------------------------------------------------------------- C6


def test_c6_mean_excitation():
    nu_ref = {2: 9 / 8, 3: 25 / 16, 4: 65 / 32}
    two_ref = {2: 1.11, 3: 1.49, 4: 1.79}
    parts, ok = [], True
    for k in (2, 3, 4):
        stats = mean_excitation(run_gate(_star(k), _linear(k, TAU), n_samples=401))
        good = _within(stats.nu_k, nu_ref[k], 0.02) and _within(stats.two_nu_bar, two_ref[k], 0.05)
        ok &= good
        parts.append(f"k={k}: nu {stats.nu_k:.4f} ({nu_ref[k]:.4f}), 2nu_bar {stats.two_nu_bar:.3f} ({two_ref[k]})")
    report("C6", ok, "; ".join(parts))
    assert ok


# ---------------------------------------------------------------- C8


def test_c8_dark_states():
    pattern = {2: (1, 0, 1), 3: (4, 2, 0), 4: (10, 3, 4)}
    parts, ok = [], True
    for k, (dark, pairs, nondeg) in pattern.items():
        arr = _star(k)
        basis = basis_for_input(arr, (1,) * (k + 1))
        rep = classify_symmetry(arr, basis)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            scan = spectrum_scan(arr, basis, OMEGA0, gate_params(k)[0], grid_size=256)
        eta = np.where(scan.momentum != 0, scan.eta[:, 0, :], 0.0)
        eta_max = float(np.nanmax(eta))
        good = (rep.n_dark, rep.degenerate_pairs, rep.non_degenerate) == (dark, pairs, nondeg) and eta_max < 1e-12
        ok &= good
        parts.append(
            f"N={k + 1}: {rep.n_dark} dark ({rep.degenerate_pairs} pairs + {rep.non_degenerate}), eta {eta_max:.0e}"
        )
    report("C8", ok, "; ".join(parts) + " (1/4/10, eta < 1e-12)")
    assert ok


# ---------------------------------------------------------------- C9


def _stirap(arr, tau_tr, frac):
    cfg = StirapConfig(
        omega_max=OMEGA_MAX, tau_tr=tau_tr, tau_del=frac * tau_tr, gamma_p=GAMMA_P, gamma_r=GAMMA, gamma_rp=GAMMA
    )
    return transfer_error(arr, cfg, tol=1e-9, n_samples=101)


def _best_delay(arr, tau_tr, fracs):
    coarse = [(f, _stirap(arr, tau_tr, f).E_tr) for f in fracs]
    i = int(np.argmin([e for _, e in coarse]))
    lo, hi = fracs[max(i - 1, 0)], fracs[min(i + 1, len(fracs) - 1)]
    res = minimize_scalar(lambda f: _stirap(arr, tau_tr, f).E_tr, bounds=(lo, hi), method="bounded",
                          options={"xatol": 2e-3})
    return min([(res.x, res.fun)] + coarse, key=lambda fe: fe[1])


def test_c9_stirap():
    fracs = list(np.linspace(0.15, 0.35, 9))
    arr2 = _star(2)
    best2 = min(((t, *_best_delay(arr2, t, fracs)) for t in (0.2, 0.25, 0.3)), key=lambda r: r[2])
    _, e3 = _best_delay(_star(3), 0.3, fracs)
    _, e4 = _best_delay(_star(4), 0.23, fracs)
    ref_point = _stirap(arr2, 0.2, 0.275)
    p_max = ref_point.max_p
    p_single = next(r.max_p for r in ref_point.records if r.nu == 1)
    checks = {
        "k=2": best2[2] <= 2e-3,
        "k=3": _within(e3, 3.3e-3, 0.30),
        "k=4": _within(e4, 9.3e-3, 0.30),
        "P_p": p_max < 1e-3,
    }
    ok = all(checks.values())
    report(
        "C9",
        ok,
        f"k=2 min E_tr {best2[2]:.2e} at tau_tr {best2[0]:.2f}, del {best2[1]:.3f} tau_tr (<= 2e-3) "
        f"{'ok' if checks['k=2'] else 'off'}; k=3 {e3:.2e} (3.3e-3 +/-30%) {'ok' if checks['k=3'] else 'off'}; "
        f"k=4 {e4:.2e} (9.3e-3 +/-30%) {'ok' if checks['k=4'] else 'off'}; "
        f"max P_p {p_max:.2e} summed over atoms, {p_single:.2e} single atom (< 1e-3) "
        f"{'ok' if checks['P_p'] else 'off'}",
    )
    assert ok


# ---------------------------------------------------------------- C10


def test_c10_thermal():
    parts, ok = [], True
    for k in (2, 3, 4):
        arr, pulse = _star(k), _linear(k, TAU)
        hot = thermal_monte_carlo(arr, pulse, 1.0, 40, seed=2024, gamma_r=GAMMA)
        again = thermal_monte_carlo(arr, pulse, 1.0, 3, seed=2024, gamma_r=GAMMA, e_static=hot.e_static)
        cold = thermal_monte_carlo(arr, pulse, 0.0, 2, seed=2024, gamma_r=GAMMA, e_static=hot.e_static)
        cold_max = float(np.max(np.abs(cold.samples)))
        same = np.array_equal(again.samples, hot.samples[:3])
        good = hot.mean < 0.1 * hot.e_static and cold_max < 1e-8 and same
        ok &= good
        parts.append(f"k={k}: E_th {hot.mean:.1e} vs 0.1 E_0 = {0.1 * hot.e_static:.1e}, T=0 {cold_max:.0e}, "
                     f"{'repeatable' if same else 'NOT repeatable'}")
    report("C10", ok, "; ".join(parts))
    assert ok


# ---------------------------------------------------------------- C11


def _operator(arr, basis, pulse, sign):
    terms = hamiltonian_terms(arr, basis)
    inter = (1.0 if sign == 1 else -1.0) * terms.interaction
    return LinearHamiltonian(
        basis.dim,
        matrix_terms=[(lambda t: 0.5 * float(pulse.omega(t)), terms.drive)],
        diagonal_terms=[(lambda t: -float(pulse.delta(t)), terms.n_ryd), (lambda t: 1.0, inter)],
    )


_C11_WORST = [0.0, 0]


@settings(max_examples=6, deadline=None)
@given(
    tau=st.floats(0.4, 1.5),
    d_ratio=st.floats(1.5, 3.5),
    b_ratio=st.floats(3.0, 8.0),
)
def _c11_property(tau, d_ratio, b_ratio):
    arr = build_star_graph(2, b_ratio * OMEGA0)
    p1 = flat_top_linear(OMEGA0, d_ratio * OMEGA0, tau)
    p2 = mirror_pulse(p1)
    for q in input_bits(3):
        basis = basis_for_input(arr, q)
        h1, h2 = _operator(arr, basis, p1, 1), _operator(arr, basis, p2, -1)
        psi0 = np.zeros(basis.dim, dtype=complex)
        psi0[0] = 1.0
        fast = propagate(psi0, h1, (0, tau), tol=1e-11).final
        fast = propagate(fast, h2, (tau, 2 * tau), tol=1e-11).final
        slow = propagate_expm(psi0, h1, (0, tau), 1000)
        slow = propagate_expm(slow, h2, (tau, 2 * tau), 1000)
        dev = 1 - overlap_fidelity(fast, slow)
        _C11_WORST[0] = max(_C11_WORST[0], dev)
        _C11_WORST[1] += 1
        assert dev < 1e-8, (tau, d_ratio, b_ratio, q)


def test_c11_oracle_equivalence():
    ok = False
    try:
        _c11_property()
        ok = True
    finally:
        report("C11", ok, f"adaptive vs 1000-slice expm: worst 1 - overlap {_C11_WORST[0]:.1e} "
               f"over {_C11_WORST[1]} N=3 propagations (< 1e-8)")


# ---------------------------------------------------------------- C12


def test_c12_correction_frame():
    b = gate_params(2)[1]
    graphs = [(k, (0,) * k) for k in (2, 3, 4)] + [(2, (1, 1)), (2, (2, 1)), (3, (1, 1, 1))]
    parts, ok = [], True
    for k, n in graphs:
        arr = build_extended_graph(k, n, b) if any(n) else build_star_graph(k, b)
        parity = {q: (-1) ** mis_excitations(arr, q) for q in input_bits(k + 1)}
        corr = corrected_diagonal(parity, correction_qubits(arr.aux_counts))
        ideal = ckz_diagonal(k + 1)
        ratios = {corr[q] * ideal[q] for q in ideal}
        good = len(ratios) == 1
        ok &= good
        parts.append(f"n={n}: {'ok' if good else 'mismatch'}{' (global -1)' if ratios == {-1} else ''}")
    report("C12", ok, "C_kZ reproduced up to global sign, all inputs; " + ", ".join(parts))
    assert ok
