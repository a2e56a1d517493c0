"""Cyclic and reflection symmetry of star graphs.

The outer atoms of a symmetric star sit on a ring, so the cyclic shift
``C: j -> j+1 (mod k)`` commutes with the Hamiltonian of any input whose
outer atoms are all active.  Its eigenvalues ``e^{ip}`` with ``p = 2 pi n / k``
label invariant sectors.  The uniformly driven initial state lies in
``p = 0``; every ``p != 0`` sector is unreachable ("dark").  The reflection
``S: j -> -j (mod k)`` maps ``p`` to ``-p``, so sectors ``p`` and
``2 pi - p`` have identical spectra.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..model import AtomArray, BasisMap, Role, blockade_free_states
from ..qdyn import ContractViolation


class SymmetryBrokenError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class SymmetrySector:
    """One invariant subspace.

    ``members`` holds an orthonormal basis of the sector as columns in the
    product basis.  ``reflection`` is the eigenvalue of ``S`` for ``p = 0``
    and ``p = pi``, where ``S`` maps the sector to itself, and ``None``
    otherwise.  ``n_low`` counts the directions built from blockade-free
    configurations, i.e. the sector's share of the low-energy manifold.
    """

    n: int
    k: int
    reflection: int | None
    members: np.ndarray
    n_low: int

    @property
    def p(self) -> float:
        return 2.0 * np.pi * self.n / self.k

    @property
    def dim(self) -> int:
        return self.members.shape[1]

    @property
    def is_dark(self) -> bool:
        return self.n % self.k != 0


@dataclass(frozen=True, eq=False)
class SymmetryReport:
    sectors: tuple[SymmetrySector, ...]
    k: int

    @property
    def n_dark(self) -> int:
        """Dark states in the blockade-free manifold."""
        return sum(s.n_low for s in self.sectors if s.is_dark)

    @property
    def n_bright(self) -> int:
        return sum(s.n_low for s in self.sectors if not s.is_dark)

    @property
    def degenerate_pairs(self) -> int:
        """Dark levels that come in ``(p, 2pi - p)`` pairs, counted once per pair."""
        return sum(s.n_low for s in self.sectors if 0 < s.n < self.k / 2)

    @property
    def non_degenerate(self) -> int:
        """Dark levels at ``p = pi``, which have no partner."""
        return sum(s.n_low for s in self.sectors if 2 * s.n == self.k)

    def transform(self) -> np.ndarray:
        """Unitary whose column blocks are the sectors, in order."""
        return np.hstack([s.members for s in self.sectors])


def _outer_permutation(array: AtomArray, basis: BasisMap, shift) -> np.ndarray:
    """Basis-index permutation induced by relabelling outer atoms ``j -> shift(j)``."""
    k = array.k
    outer = [i for i, r in enumerate(array.roles) if r is Role.OUTER]
    pos = {atom: a for a, atom in enumerate(basis.active)}
    slot_map = list(range(len(basis.active)))
    for j, atom in enumerate(outer):
        slot_map[pos[atom]] = pos[outer[shift(j) % k]]
    perm = np.empty(basis.dim, dtype=int)
    for idx in range(basis.dim):
        st = basis.states[idx]
        new = np.empty_like(st)
        new[slot_map] = st
        perm[idx] = basis.index(new)
    return perm


def classify_symmetry(array: AtomArray, basis: BasisMap, rtol: float = 1e-9) -> SymmetryReport:
    """Split ``basis`` into cyclic-momentum and reflection sectors.

    Raises
    ------
    SymmetryBrokenError
        If the array is not a symmetric star or some outer atom is inactive.
    """
    if not array.is_symmetric_star(rtol=rtol):
        raise SymmetryBrokenError("array is not a symmetric star graph")
    outer = [i for i, r in enumerate(array.roles) if r is Role.OUTER]
    if not set(outer) <= set(basis.active):
        raise SymmetryBrokenError("cyclic symmetry needs every outer atom active")
    k = array.k
    shift = _outer_permutation(array, basis, lambda j: j + 1)
    refl = _outer_permutation(array, basis, lambda j: -j)
    low = blockade_free_states(array, basis)

    # orbits of the basis under the cyclic shift
    seen = np.zeros(basis.dim, dtype=bool)
    orbits = []
    for s in range(basis.dim):
        if seen[s]:
            continue
        orb = [s]
        nxt = shift[s]
        while nxt != s:
            orb.append(nxt)
            nxt = shift[nxt]
        seen[orb] = True
        orbits.append(orb)

    sectors = []
    for n in range(k):
        p = 2.0 * np.pi * n / k
        cols, is_low = [], []
        for orb in orbits:
            size = len(orb)
            if (n * size) % k:
                continue  # e^{ip size} != 1: no momentum-p state on this orbit
            v = np.zeros(basis.dim, dtype=complex)
            for m, s in enumerate(orb):
                v[s] = np.exp(-1j * p * m)
            cols.append(v / np.sqrt(size))
            is_low.append(bool(low[orb[0]]))
        if not cols:
            continue
        mem = np.array(cols).T
        low_mask = np.array(is_low)
        if 2 * n % k == 0:
            # S maps the sector to itself: split by its eigenvalue
            for part in (low_mask, ~low_mask):
                if not part.any():
                    continue
                sub = mem[:, part]
                s_sub = sub.conj().T @ sub[refl]
                s_sub = 0.5 * (s_sub + s_sub.conj().T)
                w, v = np.linalg.eigh(s_sub)
                lam = np.rint(w).astype(int)
                for val in (1, -1):
                    sel = lam == val
                    if sel.any():
                        sectors.append(((n, val, part is low_mask), sub @ v[:, sel]))
        else:
            for part, flag in ((low_mask, True), (~low_mask, False)):
                if part.any():
                    sectors.append(((n, None, flag), mem[:, part]))

    merged: dict = {}
    for (n, val, flag), cols in sectors:
        key = (n, val)
        low_c, high_c = merged.get(key, (None, None))
        if flag:
            low_c = cols
        else:
            high_c = cols
        merged[key] = (low_c, high_c)
    out = []
    for (n, val) in sorted(merged, key=lambda t: (t[0], -(t[1] or 0))):
        low_c, high_c = merged[(n, val)]
        blocks = [c for c in (low_c, high_c) if c is not None]
        out.append(
            SymmetrySector(
                n=n,
                k=k,
                reflection=val,
                members=np.hstack(blocks),
                n_low=0 if low_c is None else low_c.shape[1],
            )
        )
    total = sum(s.dim for s in out)
    if total != basis.dim:  # pragma: no cover - construction guarantees a partition
        raise ContractViolation("sectors do not partition the basis")
    return SymmetryReport(sectors=tuple(out), k=k)


def block_diagonalize(h: np.ndarray, report: SymmetryReport) -> list[np.ndarray]:
    """Restrict ``h`` to every sector."""
    return [s.members.conj().T @ h @ s.members for s in report.sectors]
