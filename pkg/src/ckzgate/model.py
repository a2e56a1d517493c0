"""Atom geometry, basis enumeration and Hamiltonian assembly.

Atoms are indexed with the qubit atoms first: the centre is atom 0, the
outer qubits are atoms ``1..k`` (qubit ``q_i`` lives on atom ``i``), and the
auxiliary bus atoms follow.  Couplings ``B_ij = C6 / |x_i - x_j|^6`` are
computed from the positions for every pair.
"""

from __future__ import annotations

import enum
import itertools
import json
import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .qdyn import ContractViolation

TWO_PI = 2.0 * math.pi

# Rb 70S_{1/2} van der Waals coefficient, 2pi x 862.69 GHz um^6, in rad/us um^6.
C6_RB70S = TWO_PI * 862_690.0


class GeometryError(ValueError):
    pass


class UnsupportedSizeError(ValueError):
    pass


class Role(str, enum.Enum):
    CENTER = "CenterQubit"
    OUTER = "OuterQubit"
    AUX = "Auxiliary"


@dataclass(frozen=True, eq=False)
class AtomArray:
    """Positions (um), roles and pairwise couplings of a gate graph.

    ``c6`` applies to the Rydberg state ``|r>``; ``c6_prime`` to ``|r'>``
    (defaults to ``-c6``).  ``k`` counts branches, ``aux_counts[i]`` is the
    number of bus atoms on branch ``i+1``.
    """

    positions: np.ndarray
    roles: tuple[Role, ...]
    branch_of: tuple[int, ...]
    c6: float
    c6_prime: float
    aux_counts: tuple[int, ...]
    nn_coupling: float
    coupling_cutoff: float = 0.0

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float)
        object.__setattr__(self, "positions", pos)
        if pos.ndim != 2 or pos.shape[1] not in (2, 3):
            raise ContractViolation("positions must have shape (N, 2)")
        if self.roles.count(Role.CENTER) != 1 or self.roles[0] is not Role.CENTER:
            raise ContractViolation("exactly one centre qubit, stored first")

    @property
    def n_atoms(self) -> int:
        return len(self.roles)

    @property
    def k(self) -> int:
        return len(self.aux_counts)

    @property
    def n_qubits(self) -> int:
        return self.k + 1

    @property
    def qubit_atoms(self) -> list[int]:
        return [i for i, r in enumerate(self.roles) if r is not Role.AUX]

    @property
    def aux_atoms(self) -> list[int]:
        return [i for i, r in enumerate(self.roles) if r is Role.AUX]

    @cached_property
    def couplings(self) -> np.ndarray:
        """Symmetric ``B_ij`` table (rad/us), zero diagonal."""
        return coupling_table(self.positions, self.c6, self.coupling_cutoff)

    @property
    def blockade_threshold(self) -> float:
        return 0.5 * self.nn_coupling

    def blockade_edges(self) -> np.ndarray:
        """Boolean adjacency of strongly interacting (blockaded) pairs."""
        return self.couplings >= self.blockade_threshold

    def is_symmetric_star(self, rtol: float = 1e-9) -> bool:
        if any(self.aux_counts):
            return False
        b = self.couplings
        k = self.k
        if not np.allclose(b[0, 1:], b[0, 1], rtol=rtol):
            return False
        ring = [b[1 + j, 1 + (j + 1) % k] for j in range(k)]
        return bool(np.allclose(ring, ring[0], rtol=rtol))

    def to_dict(self) -> dict:
        """JSON-ready summary: positions in um, couplings in MHz (B / 2pi)."""
        return {
            "positions_um": self.positions.tolist(),
            "roles": [r.value for r in self.roles],
            "branch_of": list(self.branch_of),
            "aux_counts": list(self.aux_counts),
            "c6_MHz_um6": self.c6 / TWO_PI,
            "c6_prime_MHz_um6": self.c6_prime / TWO_PI,
            "couplings_MHz": (self.couplings / TWO_PI).tolist(),
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    def with_positions(self, positions: np.ndarray) -> "AtomArray":
        positions = np.asarray(positions, dtype=float)
        _check_spacing(positions, blockade_radius(self.nn_coupling, self.c6))
        return AtomArray(
            positions=positions,
            roles=self.roles,
            branch_of=self.branch_of,
            c6=self.c6,
            c6_prime=self.c6_prime,
            aux_counts=self.aux_counts,
            nn_coupling=self.nn_coupling,
            coupling_cutoff=self.coupling_cutoff,
        )


def coupling_table(positions: np.ndarray, c6: float, cutoff: float = 0.0) -> np.ndarray:
    pos = np.asarray(positions, dtype=float)
    diff = pos[:, None, :] - pos[None, :, :]
    d2 = np.sum(diff**2, axis=-1)
    np.fill_diagonal(d2, np.inf)
    b = c6 / d2**3
    if cutoff > 0:
        b[np.abs(b) < cutoff] = 0.0
    return b


def _check_spacing(pos: np.ndarray, r: float) -> None:
    d = np.linalg.norm(pos[:, None] - pos[None, :], axis=-1)
    np.fill_diagonal(d, np.inf)
    if np.min(d) < 0.1 * r:
        raise GeometryError("two atoms closer than 0.1 r")


def blockade_radius(b: float, c6: float) -> float:
    return (c6 / b) ** (1.0 / 6.0)


def build_star_graph(
    k: int, b: float, c6: float = C6_RB70S, *, allow_large: bool = False, c6_prime: float | None = None
) -> AtomArray:
    """Centre at the origin, ``k`` outer atoms on a circle where ``B_0j = b``.

    Raises
    ------
    UnsupportedSizeError
        For ``k`` outside ``[2, 4]`` unless ``allow_large`` is set.
    """
    if b <= 0 or c6 <= 0:
        raise ContractViolation("b and c6 must be positive")
    if not (2 <= k <= 4) and not (allow_large and k >= 1):
        raise UnsupportedSizeError(f"star graphs support k in [2, 4], got {k}")
    return build_extended_graph(k, [0] * k, b, c6, c6_prime=c6_prime)


def build_extended_graph(
    k: int,
    n: Sequence[int],
    b: float,
    c6: float = C6_RB70S,
    *,
    c6_prime: float | None = None,
    coupling_cutoff: float = 0.0,
    max_atoms: int = 12,
) -> AtomArray:
    """Star graph whose branches are straight chains of bus atoms.

    Branch ``i`` points at angle ``2 pi (i-1) / k``; its ``n_i`` auxiliary
    atoms sit at ``r, 2r, ...`` from the centre and the qubit at
    ``(n_i + 1) r``, with ``r = (c6 / b)^(1/6)``.
    """
    n = [int(x) for x in n]
    if len(n) != k or k < 1:
        raise ContractViolation("need one auxiliary count per branch")
    if any(x < 0 for x in n):
        raise ContractViolation("auxiliary counts must be non-negative")
    if b <= 0 or c6 <= 0:
        raise ContractViolation("b and c6 must be positive")
    n_atoms = k + 1 + sum(n)
    if n_atoms > max_atoms:
        raise ContractViolation(f"{n_atoms} atoms exceeds the cap of {max_atoms}")
    r = blockade_radius(b, c6)

    positions = [np.zeros(2)]
    roles = [Role.CENTER]
    branch_of = [0]
    aux_pos, aux_branch = [], []
    for i in range(k):
        angle = TWO_PI * i / k
        u = np.array([math.cos(angle), math.sin(angle)])
        positions.append((n[i] + 1) * r * u)
        roles.append(Role.OUTER)
        branch_of.append(i + 1)
        for j in range(n[i]):
            aux_pos.append((j + 1) * r * u)
            aux_branch.append(i + 1)
    positions += aux_pos
    roles += [Role.AUX] * len(aux_pos)
    branch_of += aux_branch
    pos = np.array(positions)

    _check_spacing(pos, r)

    arr = AtomArray(
        positions=pos,
        roles=tuple(roles),
        branch_of=tuple(branch_of),
        c6=c6,
        c6_prime=-c6 if c6_prime is None else c6_prime,
        aux_counts=tuple(n),
        nn_coupling=b,
        coupling_cutoff=coupling_cutoff,
    )
    weak = arr.couplings.copy()
    weak[arr.blockade_edges()] = 0.0
    if np.max(weak) > 0.2 * b:
        warnings.warn(
            f"non-neighbour coupling {np.max(weak) / b:.3f} B breaks the weak-coupling assumption",
            RuntimeWarning,
            stacklevel=2,
        )
    return arr


@dataclass(frozen=True)
class LevelScheme:
    """Per-atom levels and decay rates (rad/us) of the levels outside the qubit pair."""

    levels: tuple[str, ...] = ("0", "1", "r")
    gamma_r: float = 0.0
    gamma_rp: float = 0.0
    gamma_p: float = 0.0

    def __post_init__(self):
        if min(self.gamma_r, self.gamma_rp, self.gamma_p) < 0:
            raise ContractViolation("decay rates must be non-negative")


GATE_LEVELS = ("1", "r")


@dataclass(frozen=True, eq=False)
class BasisMap:
    """Product basis over the laser-active atoms of one computational input.

    ``states[j, a]`` is the level index (into ``levels``) of active atom
    ``active[a]`` in basis state ``j``.  State 0 has every active atom in
    ``levels[0]``.
    """

    q: tuple[int, ...]
    active: tuple[int, ...]
    levels: tuple[str, ...] = GATE_LEVELS
    states: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.states is None:
            grid = list(itertools.product(range(len(self.levels)), repeat=len(self.active)))
            st = np.array(grid, dtype=np.int8).reshape(len(grid), len(self.active))
            object.__setattr__(self, "states", st)

    @property
    def dim(self) -> int:
        return self.states.shape[0]

    @cached_property
    def _lookup(self) -> dict:
        return {tuple(row): j for j, row in enumerate(self.states.tolist())}

    def index(self, state: Iterable[int]) -> int:
        return self._lookup[tuple(state)]

    def state(self, j: int) -> tuple[int, ...]:
        return tuple(int(x) for x in self.states[j])

    def occupation(self, level: str) -> np.ndarray:
        """``(dim, n_active)`` 0/1 matrix marking active atoms in ``level``."""
        li = self.levels.index(level)
        return (self.states == li).astype(float)

    def rydberg_count(self) -> np.ndarray:
        ryd = [i for i, lv in enumerate(self.levels) if lv in ("r", "r'", "p")]
        return np.isin(self.states, ryd).sum(axis=1)

    def full_config(self, j: int, n_atoms: int) -> list[str]:
        """Level label of every atom (inactive qubits read ``'0'``)."""
        labels = ["0"] * n_atoms
        for a, atom in enumerate(self.active):
            labels[atom] = self.levels[self.states[j, a]]
        return labels


def input_bits(n_qubits: int) -> list[tuple[int, ...]]:
    """All inputs ``q0 q1 ... qk`` in binary order (q0 most significant)."""
    return [tuple(int(c) for c in format(x, f"0{n_qubits}b")) for x in range(2**n_qubits)]


def basis_for_input(array: AtomArray, q: Sequence[int], levels: tuple[str, ...] = GATE_LEVELS) -> BasisMap:
    q = tuple(int(x) for x in q)
    if len(q) != array.n_qubits:
        raise ContractViolation(f"input has {len(q)} bits, array has {array.n_qubits} qubits")
    active = tuple([i for i in range(array.n_qubits) if q[i] == 1] + array.aux_atoms)
    return BasisMap(q=q, active=active, levels=levels)


@dataclass(frozen=True)
class HamiltonianTerms:
    """Constant pieces of the gate Hamiltonian on one basis.

    ``H = (Omega/2) drive - Delta * diag(n_ryd) + s * diag(pairs @ b_pairs)``
    with ``pairs[j, m]`` = 1 when both atoms of pair ``m`` are in ``|r>``.
    """

    drive: np.ndarray
    n_ryd: np.ndarray
    pairs: np.ndarray
    pair_index: tuple[tuple[int, int], ...]
    b_pairs: np.ndarray

    @property
    def interaction(self) -> np.ndarray:
        return self.pairs @ self.b_pairs if self.pairs.size else np.zeros(len(self.n_ryd))


def hamiltonian_terms(array: AtomArray, basis: BasisMap) -> HamiltonianTerms:
    if basis.levels != GATE_LEVELS:
        raise ContractViolation("gate Hamiltonian needs the {1, r} basis")
    dim = basis.dim
    n_act = len(basis.active)
    st = basis.states
    drive = np.zeros((dim, dim))
    # flipping active atom a toggles bit a; states enumerate in mixed radix 2
    weights = 2 ** np.arange(n_act - 1, -1, -1)
    idx = st.astype(np.int64) @ weights if n_act else np.zeros(dim, dtype=np.int64)
    for a in range(n_act):
        flipped = idx ^ weights[a]
        drive[flipped, idx] = 1.0
    n_ryd = st.sum(axis=1).astype(float)
    pair_index = tuple(itertools.combinations(range(n_act), 2))
    pairs = np.array([[st[j, a] * st[j, b] for a, b in pair_index] for j in range(dim)], dtype=float)
    pairs = pairs.reshape(dim, len(pair_index))
    b = array.couplings
    b_pairs = np.array([b[basis.active[a], basis.active[c]] for a, c in pair_index], dtype=float)
    return HamiltonianTerms(drive=drive, n_ryd=n_ryd, pairs=pairs, pair_index=pair_index, b_pairs=b_pairs)


def assemble_hamiltonian(
    array: AtomArray,
    basis: BasisMap,
    omega: float,
    delta: float,
    interaction_sign: int = 1,
    decay: LevelScheme | None = None,
    lam: float = 1.0,
) -> np.ndarray:
    """Dense gate Hamiltonian on ``basis``.

    ``interaction_sign=-1`` models the atoms sitting in ``|r'>`` with
    ``B'_ij = -lam * B_ij``; the decay rate is then ``gamma_rp`` instead of
    ``gamma_r``.
    """
    if interaction_sign not in (1, -1):
        raise ContractViolation("interaction_sign must be +1 or -1")
    terms = hamiltonian_terms(array, basis)
    scale = 1.0 if interaction_sign == 1 else -lam
    diag = -delta * terms.n_ryd + scale * terms.interaction
    h = 0.5 * omega * terms.drive + np.diag(diag).astype(complex)
    if decay is not None:
        gamma = decay.gamma_r if interaction_sign == 1 else decay.gamma_rp
        h = h - 0.5j * gamma * np.diag(terms.n_ryd)
    return h


def parity_matrix(basis: BasisMap) -> np.ndarray:
    return np.diag((-1.0) ** basis.rydberg_count())


def parity_of(state: Iterable[str] | Iterable[int], levels: tuple[str, ...] = GATE_LEVELS) -> int:
    """``(-1)^(number of atoms in a Rydberg level)``.

    Accepts level labels (``'1'``, ``'r'``, ...) or level indices into
    ``levels``.  A string such as ``'1rr'`` is read character-wise.
    """
    labels = [levels[x] if isinstance(x, (int, np.integer)) else str(x) for x in state]
    count = sum(1 for lv in labels if lv in ("r", "r'", "p"))
    return -1 if count % 2 else 1


def mis_excitations(array: AtomArray, q: Sequence[int]) -> int:
    """Rydberg excitation count of the MIS state reached from input ``q``.

    Closed form for star graphs with optional bus chains: with branch
    lengths ``l_i = n_i + q_i``, the count is ``sum ceil(l_i / 2)`` plus one
    when the centre is active and every branch length is even.
    """
    q = [int(x) for x in q]
    if len(q) != array.n_qubits:
        raise ContractViolation(f"input has {len(q)} bits, array has {array.n_qubits} qubits")
    lengths = [n_i + q_i for n_i, q_i in zip(array.aux_counts, q[1:])]
    base = sum((l + 1) // 2 for l in lengths)
    if q[0] == 1 and all(l % 2 == 0 for l in lengths):
        return 1 + base
    return base


def mis_configurations(array: AtomArray, basis: BasisMap) -> tuple[int, list[int]]:
    """Brute-force maximum independent sets of the blockade graph.

    Returns the maximum excitation count and the basis indices of every
    configuration attaining it.
    """
    edges = array.blockade_edges()
    act = np.array(basis.active, dtype=int)
    sub = edges[np.ix_(act, act)] if len(act) else np.zeros((0, 0), dtype=bool)
    best, configs = 0, [0]
    ryd = basis.states == basis.levels.index("r")
    for j in range(basis.dim):
        on = np.flatnonzero(ryd[j])
        if len(on) < best:
            continue
        if len(on) > 1 and np.any(sub[np.ix_(on, on)]):
            continue
        if len(on) > best:
            best, configs = len(on), [j]
        elif len(on) == best and j not in configs:
            configs.append(j)
    return best, configs


def blockade_free_states(array: AtomArray, basis: BasisMap) -> np.ndarray:
    """Boolean mask of basis states without a blockaded pair in ``|r>``."""
    edges = array.blockade_edges()
    act = np.array(basis.active, dtype=int)
    sub = edges[np.ix_(act, act)] if len(act) else np.zeros((0, 0), dtype=bool)
    ryd = basis.states == basis.levels.index("r")
    ok = np.ones(basis.dim, dtype=bool)
    for j in range(basis.dim):
        on = np.flatnonzero(ryd[j])
        if len(on) > 1 and np.any(sub[np.ix_(on, on)]):
            ok[j] = False
    return ok
