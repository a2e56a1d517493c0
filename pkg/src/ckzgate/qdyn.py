"""Dense linear algebra and time propagation for small Hilbert spaces.

Frequencies are angular (rad/us) and times are in us throughout, so
``exp(-i H t)`` needs no extra factors.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import sparse
from scipy.linalg import expm

__all__ = [
    "ContractViolation",
    "NumericalError",
    "StiffProblemError",
    "DivergenceError",
    "UndefinedPhaseError",
    "EigenSystem",
    "Trajectory",
    "LinearHamiltonian",
    "eigh",
    "propagate",
    "propagate_expm",
    "total_phase",
    "overlap_fidelity",
]


class ContractViolation(ValueError):
    """An input broke a documented precondition."""


class NumericalError(RuntimeError):
    """A numerical routine failed."""


class StiffProblemError(NumericalError):
    pass


class DivergenceError(NumericalError):
    pass


class UndefinedPhaseError(NumericalError):
    pass


@dataclass(frozen=True)
class EigenSystem:
    """Ascending eigenvalues and gauge-fixed orthonormal eigenvectors (columns)."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    gauge_convention: str = "largest-component-real-positive"

    def __len__(self) -> int:
        return len(self.eigenvalues)


def _max_abs(h: np.ndarray) -> float:
    return float(np.max(np.abs(h))) if h.size else 0.0


def _check_hermitian(h: np.ndarray) -> None:
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ContractViolation(f"expected a square matrix, got shape {h.shape}")
    if not np.all(np.isfinite(h)):
        raise ContractViolation("matrix has non-finite entries")
    scale = _max_abs(h)
    if scale == 0.0:
        return
    asym = _max_abs(h - h.conj().T)
    if asym >= 1e-12 * scale:
        raise ContractViolation(
            f"matrix is not Hermitian: max |H - H^dag| = {asym:.3e} (scale {scale:.3e})"
        )


def fix_gauge(vectors: np.ndarray) -> np.ndarray:
    """Rotate each column so its largest-magnitude component is real positive."""
    v = np.array(vectors, dtype=complex, copy=True)
    if v.size == 0:
        return v
    idx = np.argmax(np.abs(v), axis=0)
    pivots = v[idx, np.arange(v.shape[1])]
    v *= (np.abs(pivots) / pivots)[None, :]
    return v


def eigh(h: np.ndarray) -> EigenSystem:
    """Hermitian eigendecomposition with a deterministic eigenvector gauge.

    Raises
    ------
    ContractViolation
        If ``h`` is not square, finite and Hermitian.
    NumericalError
        If LAPACK fails to converge.
    """
    h = np.asarray(h)
    _check_hermitian(h)
    hs = 0.5 * (h + h.conj().T)
    try:
        w, v = np.linalg.eigh(hs)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise NumericalError(f"eigh failed to converge: {exc}") from exc
    return EigenSystem(eigenvalues=w, eigenvectors=fix_gauge(v))


class LinearHamiltonian:
    """Time-dependent Hamiltonian ``H(t) = sum_k c_k(t) A_k + diag(sum_k d_k(t) v_k)``.

    Off-diagonal terms are dense matrices; diagonal terms are stored as
    vectors so that time-dependent interaction shifts and decay cost only a
    vector product per evaluation.

    Parameters
    ----------
    dim : int
        Hilbert-space dimension.
    matrix_terms : sequence of (callable, ndarray)
        ``(c_k, A_k)`` pairs.
    diagonal_terms : sequence of (callable, ndarray)
        ``(d_k, v_k)`` pairs; ``d_k(t)`` may return a scalar, or a vector
        when ``v_k`` is a 2D array whose columns are combined.
    """

    def __init__(
        self,
        dim: int,
        matrix_terms: Sequence[tuple[Callable[[float], complex], np.ndarray]] = (),
        diagonal_terms: Sequence[tuple[Callable[[float], object], np.ndarray]] = (),
    ):
        self.dim = int(dim)
        self.matrix_terms = [
            (c, a if sparse.issparse(a) else np.asarray(a, dtype=complex)) for c, a in matrix_terms
        ]
        self.diagonal_terms = [(d, np.asarray(v)) for d, v in diagonal_terms]
        for _, a in self.matrix_terms:
            if a.shape != (self.dim, self.dim):
                raise ContractViolation("matrix term has wrong shape")

    def diagonal(self, t: float) -> np.ndarray:
        out = np.zeros(self.dim, dtype=complex)
        for d, v in self.diagonal_terms:
            coeff = d(t)
            if v.ndim == 2:
                out += v @ np.asarray(coeff)
            else:
                out += coeff * v
        return out

    def apply(self, t: float, psi: np.ndarray) -> np.ndarray:
        out = self.diagonal(t) * psi
        for c, a in self.matrix_terms:
            coeff = c(t)
            if coeff != 0:
                out += coeff * (a @ psi)
        return out

    def __call__(self, t: float) -> np.ndarray:
        h = np.diag(self.diagonal(t))
        for c, a in self.matrix_terms:
            h = h + c(t) * (a.toarray() if sparse.issparse(a) else a)
        return h


# Dormand-Prince 5(4) tableau.
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array(_A[6] + [0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4
_A_ROWS = [np.asarray(row) for row in _A]


@dataclass
class Trajectory:
    """States sampled at requested times; ``states[i]`` belongs to ``times[i]``."""

    times: np.ndarray
    states: np.ndarray
    n_steps: int = 0
    n_rejected: int = 0
    final: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.final is None:
            self.final = self.states[-1]


def _as_apply(h_of_t) -> Callable[[float, np.ndarray], np.ndarray]:
    if hasattr(h_of_t, "apply"):
        return h_of_t.apply
    return lambda t, psi: np.asarray(h_of_t(t)) @ psi


def propagate(
    psi0: np.ndarray,
    h_of_t,
    t_span: tuple[float, float],
    tol: float = 1e-10,
    t_eval: Sequence[float] | None = None,
    h0: float | None = None,
    max_steps: int = 5_000_000,
) -> Trajectory:
    """Integrate ``i d/dt psi = H(t) psi`` with an adaptive Dormand-Prince 5(4) pair.

    Steps are clipped to land exactly on every requested sample time, so
    samples carry the full local accuracy of the integrator.

    Parameters
    ----------
    psi0 : ndarray
        Initial amplitudes.
    h_of_t : callable or LinearHamiltonian
        ``H(t)`` as a dense matrix, or any object with ``apply(t, psi)``.
    t_span : (float, float)
        Integration interval ``(t0, t1)`` with ``t1 > t0``.
    tol : float
        Bound on the max-norm local error per step, in ``(1e-14, 1e-4)``.
    t_eval : sequence of float, optional
        Sample times inside ``t_span``; the final time is always included.

    Returns
    -------
    Trajectory
    """
    if not (1e-14 < tol < 1e-4):
        raise ContractViolation(f"tol must lie in (1e-14, 1e-4), got {tol}")
    t0, t1 = float(t_span[0]), float(t_span[1])
    if not t1 > t0:
        raise ContractViolation("t_span must be increasing")
    psi = np.array(psi0, dtype=complex, copy=True)
    if psi.ndim != 1:
        raise ContractViolation("psi0 must be a vector")
    apply = _as_apply(h_of_t)

    if t_eval is None:
        samples = np.array([t1])
    else:
        samples = np.unique(np.clip(np.asarray(t_eval, dtype=float), t0, t1))
        if samples[-1] < t1:
            samples = np.append(samples, t1)
    out = np.empty((len(samples), psi.size), dtype=complex)
    i_s = 0
    while i_s < len(samples) and samples[i_s] <= t0:
        out[i_s] = psi
        i_s += 1

    def rhs(t, y):
        return -1j * apply(t, y)

    t = t0
    k = np.empty((7, psi.size), dtype=complex)
    k[0] = rhs(t, psi)
    span = t1 - t0
    if h0 is None:
        scale = max(np.max(np.abs(k[0])), 1e-300)
        h = min(span, 0.01 * tol ** 0.2 / scale)
    else:
        h = min(span, h0)
    h_min = 1e-14 * max(1.0, abs(t1))
    n_steps = n_rej = 0

    while t < t1:
        if n_steps + n_rej > max_steps:
            raise StiffProblemError(f"exceeded {max_steps} steps at t={t:.6g}")
        target = samples[i_s]
        step = h
        clipped = t + h >= target - 1e-15 * max(1.0, abs(target))
        if clipped:
            step = target - t
        for s in range(1, 7):
            y = psi + step * (_A_ROWS[s] @ k[:s])
            k[s] = rhs(t + _C[s] * step, y)
        err = step * float(np.max(np.abs(_E @ k)))
        if not np.isfinite(err):
            if step <= h_min:
                raise DivergenceError(f"non-finite amplitudes at t={t:.6g}")
            h = 0.1 * step
            n_rej += 1
            continue
        if err <= tol:
            t = target if clipped else t + step
            psi = y  # last stage argument is the 5th-order solution (FSAL)
            k[0] = k[6]
            n_steps += 1
            while i_s < len(samples) and samples[i_s] <= t + 1e-15 * max(1.0, abs(t)):
                out[i_s] = psi
                i_s += 1
            fac = 5.0 if err == 0 else min(5.0, 0.9 * (tol / err) ** 0.2)
            h = max(h, step * fac) if clipped else step * fac
        else:
            n_rej += 1
            h = step * max(0.2, 0.9 * (tol / err) ** 0.2)
            if h < h_min:
                raise StiffProblemError(f"step size underflow at t={t:.6g}")

    return Trajectory(times=samples, states=out, n_steps=n_steps, n_rejected=n_rej, final=psi)


def propagate_expm(
    psi0: np.ndarray, h_of_t, t_span: tuple[float, float], n_slices: int = 1000
) -> np.ndarray:
    """Piecewise-constant propagation with midpoint Hamiltonians.

    Each slice applies ``expm(-i H(t_mid) dt)`` (Pade scaling-and-squaring).
    Used as an independent check of :func:`propagate`.
    """
    t0, t1 = t_span
    dt = (t1 - t0) / n_slices
    psi = np.array(psi0, dtype=complex, copy=True)
    mat = h_of_t if not hasattr(h_of_t, "apply") else h_of_t.__call__
    for j in range(n_slices):
        tm = t0 + (j + 0.5) * dt
        psi = expm(-1j * dt * np.asarray(mat(tm))) @ psi
    return psi


def total_phase(psi0: np.ndarray, psi_t: np.ndarray) -> float:
    """``arg <psi0|psi_t>`` in (-pi, pi]."""
    ov = np.vdot(psi0, psi_t)
    if np.linalg.norm(psi0) == 0 or np.linalg.norm(psi_t) == 0 or abs(ov) <= 1e-12:
        raise UndefinedPhaseError(f"overlap magnitude {abs(ov):.3e} too small for a phase")
    phi = float(np.angle(ov))
    return np.pi if phi <= -np.pi else phi


def overlap_fidelity(a: np.ndarray, b: np.ndarray) -> float:
    """``|<a|b>| / (|a| |b|)``."""
    return float(abs(np.vdot(a, b)) / (np.linalg.norm(a) * np.linalg.norm(b)))
