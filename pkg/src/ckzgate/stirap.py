"""Raman transfer ``|r> -> |r'>`` through the short-lived level ``|p>``.

Only the atoms excited in the MIS state ``|R_q>`` take part; ground-state
atoms are untouched by the Raman lasers and drop out.  Each participating
atom has levels ``(r, p, r')`` with

    H_at = Omega_SP/2 |r><p| + Omega_DP/2 |r'><p| + h.c.

and pairs interact with ``B`` (rr), ``-lam B`` (r'r') and ``chi B`` (rr', r'r).
Decay enters as ``-i Gamma / 2`` on each level.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from functools import reduce
from typing import Sequence

import numpy as np
from scipy.integrate import simpson

from .model import AtomArray, basis_for_input, input_bits, mis_configurations, mis_excitations
from .pulses import QUAD_POINTS, StirapPulses, stirap_pair
from .qdyn import ContractViolation, LinearHamiltonian, NumericalError, propagate

LEVELS = ("r", "p", "r'")
R, P, RP = 0, 1, 2


class TransferError(NumericalError):
    def __init__(self, message: str, q):
        super().__init__(message)
        self.q = q


@dataclass(frozen=True)
class StirapConfig:
    """Raman pulse pair and decay rates (rad/us, us)."""

    omega_max: float
    tau_tr: float
    tau_del: float
    gamma_p: float = 0.0
    gamma_r: float = 0.0
    gamma_rp: float = 0.0
    lam: float = 1.0
    chi: float = 0.0

    def __post_init__(self):
        if not 0 < self.tau_del < self.tau_tr:
            raise ContractViolation("need 0 < tau_del < tau_tr")
        if self.lam <= 0:
            raise ContractViolation("lam must be positive")
        if abs(self.chi) > 1:
            raise ContractViolation("|chi| must not exceed 1")
        if min(self.omega_max, self.gamma_p, self.gamma_r, self.gamma_rp) < 0:
            raise ContractViolation("rates must be non-negative")

    @property
    def pulses(self) -> StirapPulses:
        return stirap_pair(self.omega_max, self.tau_tr, self.tau_del)


@dataclass
class TransferRecord:
    """Transfer of one input.  Degenerate MIS configurations are run separately."""

    q: tuple[int, ...]
    nu: int
    amplitudes: list[complex]
    times: np.ndarray = field(default=None)
    pop_R: np.ndarray = field(default=None)
    pop_Rp: np.ndarray = field(default=None)
    pop_p: np.ndarray = field(default=None)
    pop_ryd: np.ndarray = field(default=None)

    @property
    def fidelity(self) -> float:
        return float(np.mean(np.abs(self.amplitudes) ** 2))

    @property
    def amplitude(self) -> complex:
        return self.amplitudes[0]

    @property
    def max_p(self) -> float:
        return 0.0 if self.pop_p is None else float(np.max(self.pop_p))


def _embed(op: np.ndarray, site: int, n: int) -> np.ndarray:
    eye = np.eye(3)
    return reduce(np.kron, [op if s == site else eye for s in range(n)])


def transfer_hamiltonian(b: np.ndarray, config: StirapConfig) -> LinearHamiltonian:
    """Hamiltonian of ``len(b)`` Raman-driven atoms with pair couplings ``b``."""
    n = b.shape[0]
    dim = 3**n
    sp1 = np.zeros((3, 3))
    sp1[R, P] = sp1[P, R] = 1.0
    dp1 = np.zeros((3, 3))
    dp1[RP, P] = dp1[P, RP] = 1.0
    sp = sum(_embed(sp1, s, n) for s in range(n))
    dp = sum(_embed(dp1, s, n) for s in range(n))

    levels = np.array(np.unravel_index(np.arange(dim), (3,) * n)).T  # (dim, n)
    occ = {lv: (levels == lv).astype(float) for lv in (R, P, RP)}
    diag = np.zeros(dim, dtype=complex)
    for i in range(n):
        for j in range(i + 1, n):
            rr = occ[R][:, i] * occ[R][:, j]
            pp = occ[RP][:, i] * occ[RP][:, j]
            cross = occ[R][:, i] * occ[RP][:, j] + occ[RP][:, i] * occ[R][:, j]
            diag += b[i, j] * (rr - config.lam * pp + config.chi * cross)
    diag -= 0.5j * (
        config.gamma_r * occ[R].sum(1) + config.gamma_p * occ[P].sum(1) + config.gamma_rp * occ[RP].sum(1)
    )
    pulses = config.pulses
    return LinearHamiltonian(
        dim,
        matrix_terms=[(lambda t: 0.5 * float(pulses.omega_sp(t)), sp), (lambda t: 0.5 * float(pulses.omega_dp(t)), dp)],
        diagonal_terms=[(lambda t: 1.0, diag)],
    )


def _transfer_one(b: np.ndarray, config: StirapConfig, tol: float, n_samples: int):
    n = b.shape[0]
    dim = 3**n
    h = transfer_hamiltonian(b, config)
    psi0 = np.zeros(dim, dtype=complex)
    start = np.ravel_multi_index((R,) * n, (3,) * n)
    target = np.ravel_multi_index((RP,) * n, (3,) * n)
    psi0[start] = 1.0
    t = np.linspace(0.0, config.tau_tr, n_samples)
    tr = propagate(psi0, h, (0.0, config.tau_tr), tol=tol, t_eval=t)
    levels = np.array(np.unravel_index(np.arange(dim), (3,) * n)).T
    pops = np.abs(tr.states) ** 2
    n_p = pops @ (levels == P).sum(1)
    n_ryd = pops @ ((levels == R) | (levels == RP)).sum(1)
    return complex(tr.final[target]), t, pops[:, start], pops[:, target], n_p, n_ryd


def transfer_run(
    array: AtomArray, q: Sequence[int], config: StirapConfig, tol: float = 1e-10, n_samples: int = 201
) -> TransferRecord:
    """Propagate ``|R_q>`` through the Raman pulses; amplitude on ``|R'_q>``.

    When the MIS state is degenerate every configuration is transferred
    separately; traces belong to the first configuration.
    """
    q = tuple(int(x) for x in q)
    nu = mis_excitations(array, q)
    if nu == 0:
        return TransferRecord(q=q, nu=0, amplitudes=[1.0 + 0j])
    basis = basis_for_input(array, q)
    _, configs = mis_configurations(array, basis)
    amps, traces = [], None
    for j in configs:
        atoms = [basis.active[a] for a in np.flatnonzero(basis.states[j])]
        b = array.couplings[np.ix_(atoms, atoms)]
        try:
            a, *tr = _transfer_one(b, config, tol, n_samples)
        except NumericalError as exc:
            raise TransferError(f"transfer failed for input {q}: {exc}", q) from exc
        amps.append(a)
        if traces is None:
            traces = tr
    t, pr, prp, pp, pryd = traces
    return TransferRecord(q=q, nu=nu, amplitudes=amps, times=t, pop_R=pr, pop_Rp=prp, pop_p=pp, pop_ryd=pryd)


@dataclass(frozen=True)
class TransferReport:
    """``E_tr`` averaged over inputs, and the transfer-probability average."""

    E_tr: float
    mean_fidelity: float
    E_p: float
    E_ryd: float
    max_p: float
    records: tuple

    @property
    def printed_sum(self) -> float:
        """Input average of ``|<R'_q|U|R_q>|^2`` (a fidelity; ``E_tr = 1 - printed_sum``)."""
        return self.mean_fidelity


def transfer_error(array: AtomArray, config: StirapConfig, tol: float = 1e-10, n_samples: int = 201) -> TransferReport:
    """Average transfer infidelity over all ``2^(k+1)`` inputs.

    ``E_p`` and ``E_ryd`` are first-order decay estimates, ``Gamma_p int n_p``
    and ``Gamma_r int n_ryd``, averaged over inputs; they split the error
    into intermediate-level and Rydberg-level losses.
    """
    recs = []
    for q in input_bits(array.n_qubits):
        recs.append(transfer_run(array, q, config, tol=tol, n_samples=n_samples))
    fid = float(np.mean([r.fidelity for r in recs]))
    e_p, e_r = [], []
    g_ryd = 0.5 * (config.gamma_r + config.gamma_rp)
    for r in recs:
        if r.times is None:
            e_p.append(0.0)
            e_r.append(0.0)
            continue
        e_p.append(config.gamma_p * simpson(r.pop_p, x=r.times))
        e_r.append(g_ryd * simpson(r.pop_ryd, x=r.times))
    return TransferReport(
        E_tr=1.0 - fid,
        mean_fidelity=fid,
        E_p=float(np.mean(e_p)),
        E_ryd=float(np.mean(e_r)),
        max_p=max(r.max_p for r in recs),
        records=tuple(recs),
    )


@dataclass(frozen=True)
class TransferSurface:
    tau_tr: np.ndarray
    del_frac: np.ndarray
    E: np.ndarray
    E_p: np.ndarray
    E_ryd: np.ndarray

    @property
    def argmin(self) -> tuple[float, float, float]:
        """``(tau_tr, tau_del / tau_tr, E_tr)`` at the grid minimum."""
        i, j = np.unravel_index(np.argmin(self.E), self.E.shape)
        return float(self.tau_tr[i]), float(self.del_frac[j]), float(self.E[i, j])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["tau_tr", "tau_del", "E_tr"])
        for i, t in enumerate(self.tau_tr):
            for j, f in enumerate(self.del_frac):
                w.writerow([repr(float(t)), repr(float(f * t)), repr(float(self.E[i, j]))])
        return buf.getvalue()


def scan_transfer(
    array: AtomArray,
    base: StirapConfig,
    tau_tr: Sequence[float],
    del_frac: Sequence[float],
    tol: float = 1e-9,
) -> TransferSurface:
    """``E_tr`` over ``tau_tr`` and ``tau_del = del_frac * tau_tr``; other settings from ``base``."""
    tau_tr = np.asarray(tau_tr, dtype=float)
    del_frac = np.asarray(del_frac, dtype=float)
    shape = (len(tau_tr), len(del_frac))
    e, ep, er = np.empty(shape), np.empty(shape), np.empty(shape)
    for i, t in enumerate(tau_tr):
        for j, f in enumerate(del_frac):
            cfg = StirapConfig(
                omega_max=base.omega_max,
                tau_tr=float(t),
                tau_del=float(f * t),
                gamma_p=base.gamma_p,
                gamma_r=base.gamma_r,
                gamma_rp=base.gamma_rp,
                lam=base.lam,
                chi=base.chi,
            )
            rep = transfer_error(array, cfg, tol=tol, n_samples=101)
            e[i, j], ep[i, j], er[i, j] = rep.E_tr, rep.E_p, rep.E_ryd
    return TransferSurface(tau_tr=tau_tr, del_frac=del_frac, E=e, E_p=ep, E_ryd=er)


@dataclass(frozen=True)
class PhaseCheck:
    phi_int: float
    residual: float


def dynamical_phase_check(
    pulses: StirapPulses, pair_sum: float, lam: float = 1.0, chi: float = 0.0, n: int = QUAD_POINTS
) -> PhaseCheck:
    """Interaction phase accumulated by the product dark state.

    ``phi_int = int E_int dt`` with
    ``E_int = sum B [cos^4 th - lam sin^4 th + 2 chi cos^2 th sin^2 th]``, and
    the residual ``int [(1-chi) cos^2 th + chi]^2 - (chi^2 + lam) sin^4 th dt``
    of the phase-cancellation condition.  The two are algebraically
    proportional (``phi_int = pair_sum * residual``).
    """
    t = np.linspace(0.0, pulses.tau_tr, n)
    th = pulses.mixing_angle(t)
    c2, s2 = np.cos(th) ** 2, np.sin(th) ** 2
    e_int = pair_sum * (c2**2 - lam * s2**2 + 2 * chi * c2 * s2)
    lhs = simpson(((1 - chi) * c2 + chi) ** 2, x=t)
    rhs = simpson((chi**2 + lam) * s2**2, x=t)
    return PhaseCheck(phi_int=float(simpson(e_int, x=t)), residual=float(lhs - rhs))


def pulse_area(pulses: StirapPulses, n: int = QUAD_POINTS) -> float:
    """``int sqrt(Omega_SP^2 + Omega_DP^2) dt``."""
    t = np.linspace(0.0, pulses.tau_tr, n)
    return float(simpson(np.hypot(pulses.omega_sp(t), pulses.omega_dp(t)), x=t))
