"""Gate error from thermal atomic motion.

Atoms start at their trap sites and fly with constant velocities drawn
from the Maxwell-Boltzmann distribution ``W(v) ~ exp(-v^2 / u^2)``,
``u = sqrt(2 k_B T / m)``, so each Cartesian component is normal with
standard deviation ``u / sqrt(2)``.  Positions are in the plane; the
out-of-plane velocity still changes the distances.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np
from scipy import constants

from ..model import AtomArray
from ..protocol import GateRun, SectorBundle, average_fidelity, build_bundle, run_gate
from ..pulses import PulseSchedule
from ..qdyn import ContractViolation

M_RB87 = 86.909180527 * constants.atomic_mass  # kg


def thermal_speed(temperature_uK: float, mass: float = M_RB87) -> float:
    """``u = sqrt(2 k_B T / m)`` in um/us (numerically equal to m/s)."""
    if temperature_uK < 0:
        raise ContractViolation("temperature must be non-negative")
    return math.sqrt(2.0 * constants.k * temperature_uK * 1e-6 / mass)


def sample_velocities(rng: np.random.Generator, n_atoms: int, temperature_uK: float) -> np.ndarray:
    """``(n_atoms, 3)`` velocities in um/us."""
    sigma = thermal_speed(temperature_uK) / math.sqrt(2.0)
    return rng.normal(0.0, sigma, size=(n_atoms, 3))


def moving_couplings(array: AtomArray, bundle: SectorBundle, velocities: np.ndarray):
    """``t -> B_pair(t)`` over ``bundle.pair_list`` for straight-line motion."""
    pos = np.zeros((array.n_atoms, 3))
    pos[:, : array.positions.shape[1]] = array.positions
    i, j = np.array(bundle.pair_list, dtype=int).T
    dx = pos[i] - pos[j]
    dv = velocities[i] - velocities[j]
    c6 = array.c6

    def couplings(t):
        r = dx + dv * t
        return c6 / np.einsum("ij,ij->i", r, r) ** 3

    return couplings


@dataclass(frozen=True)
class ThermalResult:
    temperature_uK: float
    mean: float
    std: float
    samples: np.ndarray
    e_static: float


def thermal_monte_carlo(
    array: AtomArray,
    pulse: PulseSchedule,
    temperature_uK: float,
    n_samples: int,
    seed: int,
    gamma_r: float = 0.0,
    gamma_rp: float | None = None,
    tol: float = 1e-9,
    e_static: float | None = None,
) -> ThermalResult:
    """Mean and spread of ``E_th = E_tot - E_{T=0}`` over ``n_samples`` velocity draws.

    Each sample draws from its own child of ``SeedSequence(seed)``, so the
    result is independent of evaluation order.  The interaction of step II
    is ``-lam`` times the same moving-atom coupling, with one clock running
    through both steps.
    """
    if n_samples < 2:
        raise ContractViolation("need at least two samples")
    bundle = build_bundle(array)
    if e_static is None:
        run0 = run_gate(array, pulse, gamma_r, gamma_rp, tol=tol, n_samples=3, bundle=bundle)
        e_static = average_fidelity(run0).E
    children = np.random.SeedSequence(seed).spawn(n_samples)
    out = np.empty(n_samples)
    for m, child in enumerate(children):
        rng = np.random.default_rng(child)
        v = sample_velocities(rng, array.n_atoms, temperature_uK)
        run = run_gate(
            array,
            pulse,
            gamma_r,
            gamma_rp,
            tol=tol,
            n_samples=3,
            bundle=bundle,
            couplings_of_t=moving_couplings(array, bundle, v),
        )
        out[m] = average_fidelity(run).E - e_static
    return ThermalResult(
        temperature_uK=float(temperature_uK),
        mean=float(out.mean()),
        std=float(out.std(ddof=1)),
        samples=out,
        e_static=float(e_static),
    )


def thermal_csv(results) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["T", "mean", "std"])
    for r in results:
        w.writerow([repr(r.temperature_uK), repr(r.mean), repr(r.std)])
    return buf.getvalue()
