"""Instantaneous spectra along a sweep and the non-adiabatic couplings between them."""

from __future__ import annotations

import csv
import io
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import linear_sum_assignment

from ..model import AtomArray, BasisMap, basis_for_input, hamiltonian_terms
from ..pulses import PulseSchedule
from ..qdyn import ContractViolation, fix_gauge
from .symmetry import SymmetryBrokenError, classify_symmetry

DEGENERACY_RTOL = 1e-9


class TrackingWarning(RuntimeWarning):
    pass


@dataclass(frozen=True, eq=False)
class SpectrumScan:
    """Eigenvalues along a detuning sweep.

    ``energies[g, n]`` is sorted ascending at grid point ``g``.  ``labels[g, n]``
    is the continuous-track id of that level (tracks are numbered by their
    order at the first grid point).  ``eta[g, l, n]`` is
    ``|<a_l| d/dt a_n>|^2 tau / Delta0`` between sorted levels, NaN where the
    two levels are degenerate.  ``momentum[g, n]`` is the cyclic sector index
    of each level when the array has the star symmetry, else -1.
    """

    delta: np.ndarray
    omega: np.ndarray
    energies: np.ndarray
    labels: np.ndarray
    eta: np.ndarray
    momentum: np.ndarray
    tau: float
    delta0: float
    skipped: list = field(default_factory=list)

    def tracked_energies(self) -> np.ndarray:
        """``energies`` reordered so column ``m`` follows track ``m``."""
        out = np.empty_like(self.energies)
        for g in range(len(self.delta)):
            out[g, self.labels[g]] = self.energies[g]
        return out

    def to_csv(self) -> str:
        """Columns ``Delta, E_1..E_m, eta_1_2..eta_1_m`` (rad/us; eta dimensionless)."""
        m = self.energies.shape[1]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["Delta"] + [f"E_{n + 1}" for n in range(m)] + [f"eta_1_{n + 1}" for n in range(1, m)])
        for g in range(len(self.delta)):
            row = [self.delta[g], *self.energies[g], *self.eta[g, 0, 1:]]
            w.writerow([repr(float(x)) for x in row])
        return buf.getvalue()


def _sector_eigensystem(h: np.ndarray, blocks) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Eigenpairs of ``h`` assembled from symmetry blocks (exact sector labels)."""
    vals, vecs, sec = [], [], []
    for label, u in blocks:
        w, v = np.linalg.eigh(u.conj().T @ h @ u)
        vals.append(w)
        vecs.append(u @ v)
        sec += [label] * len(w)
    vals = np.concatenate(vals)
    vecs = np.hstack(vecs)
    order = np.argsort(vals, kind="stable")
    return vals[order], fix_gauge(vecs[:, order]), np.asarray(sec)[order]


def spectrum_scan(
    array: AtomArray,
    basis: BasisMap,
    omega0: float,
    delta0: float,
    interaction_sign: int = 1,
    grid_size: int = 256,
    tau: float | None = None,
    pulse: PulseSchedule | None = None,
    use_symmetry: bool = True,
) -> SpectrumScan:
    """Eigenvalues of ``H[Omega, Delta, sign B]`` for ``Delta`` in ``[-delta0, delta0]``.

    Without ``pulse`` the drive is held at ``omega0`` and the detuning moves
    at the constant rate ``2 delta0 / tau``.  With ``pulse`` the grid is
    uniform in time on ``[0, tau]`` and both ``Omega`` and ``Delta`` (with their
    rates) come from the schedule.

    The couplings use ``<a_l|d_t a_n> = <a_l|d_t H|a_n> / (E_n - E_l)`` with
    ``d_t H = dDelta/dt (-N) + dOmega/dt D / 2``.
    """
    if grid_size < 64:
        raise ContractViolation("grid_size must be at least 64")
    if interaction_sign not in (1, -1):
        raise ContractViolation("interaction_sign must be +1 or -1")
    if tau is None:
        tau = pulse.duration if pulse is not None else 16 * np.pi / omega0
    terms = hamiltonian_terms(array, basis)
    n_op = np.diag(terms.n_ryd).astype(complex)
    drive = terms.drive.astype(complex)
    inter = interaction_sign * terms.interaction

    if pulse is None:
        delta = np.linspace(-delta0, delta0, grid_size)
        omega = np.full(grid_size, float(omega0))
        d_delta = np.full(grid_size, 2.0 * delta0 / tau)
        d_omega = np.zeros(grid_size)
    else:
        t = np.linspace(pulse.t_start, pulse.t_end, grid_size)
        h = 1e-6 * pulse.duration
        delta = np.asarray(pulse.delta(t), dtype=float)
        omega = np.asarray(pulse.omega(t), dtype=float)
        tp, tm = np.minimum(t + h, pulse.t_end), np.maximum(t - h, pulse.t_start)
        d_delta = (np.asarray(pulse.delta(tp)) - np.asarray(pulse.delta(tm))) / (tp - tm)
        d_omega = (np.asarray(pulse.omega(tp)) - np.asarray(pulse.omega(tm))) / (tp - tm)

    blocks = None
    if use_symmetry:
        try:
            rep = classify_symmetry(array, basis)
            blocks = [(s.n, s.members) for s in rep.sectors]
        except SymmetryBrokenError:
            blocks = None

    dim = basis.dim
    energies = np.empty((grid_size, dim))
    labels = np.empty((grid_size, dim), dtype=int)
    momentum = np.full((grid_size, dim), -1, dtype=int)
    eta = np.full((grid_size, dim, dim), np.nan)
    skipped = []
    prev = None
    for g in range(grid_size):
        hmat = 0.5 * omega[g] * drive + np.diag(-delta[g] * terms.n_ryd + inter).astype(complex)
        if blocks is not None:
            w, v, sec = _sector_eigensystem(hmat, blocks)
            momentum[g] = sec
        else:
            w, v = np.linalg.eigh(hmat)
            v = fix_gauge(v)
        energies[g] = w
        if prev is None:
            labels[g] = np.arange(dim)
        else:
            ov = np.abs(prev[0].conj().T @ v) ** 2
            rows, cols = linear_sum_assignment(-ov)
            labels[g, cols] = prev[1][rows]
        prev = (v, labels[g].copy())

        dh = d_delta[g] * (-n_op) + 0.5 * d_omega[g] * drive
        m = v.conj().T @ dh @ v
        gap = w[None, :] - w[:, None]
        thresh = DEGENERACY_RTOL * max(np.max(np.abs(hmat)), 1.0)
        degenerate = np.abs(gap) < thresh
        with np.errstate(divide="ignore", invalid="ignore"):
            e = np.abs(m / gap) ** 2 * tau / delta0
        e[degenerate] = np.nan
        eta[g] = e
        bad = np.argwhere(np.triu(degenerate, 1))
        for l, n in bad:
            skipped.append((g, int(l), int(n)))
            if blocks is not None and momentum[g, l] == 0 and momentum[g, n] == 0:
                warnings.warn(
                    f"bright levels {l} and {n} degenerate at Delta = {delta[g]:.6g}",
                    TrackingWarning,
                    stacklevel=2,
                )
    return SpectrumScan(
        delta=delta,
        omega=omega,
        energies=energies,
        labels=labels,
        eta=eta,
        momentum=momentum,
        tau=float(tau),
        delta0=float(delta0),
        skipped=skipped,
    )


def bright_gap(
    array: AtomArray, omega0: float, interaction_sign: int = 1
) -> Callable[[np.ndarray], np.ndarray]:
    """``Delta -> E_2 - E_1`` in the fully symmetric sector of the all-ones input.

    This is the gap that controls leakage of the ``|11...1>`` input; when the
    array lacks the star symmetry the two lowest levels of the full sector
    are used instead.
    """
    basis = basis_for_input(array, [1] * array.n_qubits)
    terms = hamiltonian_terms(array, basis)
    try:
        rep = classify_symmetry(array, basis)
        u = next(s.members for s in rep.sectors if s.n == 0 and s.reflection in (1, None))
    except SymmetryBrokenError:
        u = np.eye(basis.dim, dtype=complex)
    drive = u.conj().T @ terms.drive @ u
    n_op = u.conj().T @ np.diag(terms.n_ryd) @ u
    inter = u.conj().T @ np.diag(interaction_sign * terms.interaction) @ u

    def gap(delta):
        d = np.atleast_1d(np.asarray(delta, dtype=float))
        hs = 0.5 * omega0 * drive[None] - d[:, None, None] * n_op[None] + inter[None]
        w = np.linalg.eigvalsh(hs)
        out = w[:, 1] - w[:, 0]
        return out if np.ndim(delta) else float(out[0])

    return gap
