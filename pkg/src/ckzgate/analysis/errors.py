"""Error budget of the gate: decay, leakage, fits and the optimal duration."""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import simpson
from scipy.interpolate import CubicSpline
from scipy.optimize import minimize_scalar

from ..model import AtomArray, basis_for_input, input_bits, mis_configurations
from ..protocol import GateRun
from ..qdyn import ContractViolation

LEAK_WINDOW = (1e-6, 1e-1)


class RegimeError(ValueError):
    """Decay dominates leakage at every duration; no interior optimum exists."""


class FitQualityWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class ErrorBudget:
    E_decay: float = 0.0
    E_leakage: float = 0.0
    E_tr: float = 0.0
    E_th: float = 0.0
    mu: float = float("nan")
    c: float = float("nan")
    nu_bar: float = float("nan")
    tau_opt: float = float("nan")
    E_min: float = float("nan")

    def __post_init__(self):
        for name in ("E_decay", "E_leakage", "E_tr", "E_th"):
            if getattr(self, name) < 0:
                raise ContractViolation(f"{name} must be non-negative")

    @property
    def E_total(self) -> float:
        return self.E_decay + self.E_leakage + self.E_tr + self.E_th

    @property
    def g(self) -> float:
        """Gap coefficient with ``c = pi g^2 / 4``."""
        return 2.0 * math.sqrt(self.c / math.pi)


@dataclass(frozen=True)
class DecayError:
    exact: float
    linear: float


def decay_error(tau: float, gamma: float, two_nu_bar: float) -> DecayError:
    """Decay error ``1 - exp(-2 nu_bar Gamma tau)`` and its linearization."""
    x = two_nu_bar * gamma * tau
    return DecayError(exact=-math.expm1(-x), linear=x)


def decay_error_from_run(run: GateRun, gamma_r: float, gamma_rp: float | None = None) -> DecayError:
    """Input average of ``1 - exp(-Gamma int nu_q dt)`` using the run's excitation traces."""
    gamma_rp = gamma_r if gamma_rp is None else gamma_rp
    tau = run.tau
    t = run.times
    first = t <= tau
    second = t >= tau
    exact, linear = [], []
    for rec in run.inputs.values():
        a = simpson(rec.excitation[first], x=t[first]) * gamma_r
        b = simpson(rec.excitation[second], x=t[second]) * gamma_rp
        exact.append(-math.expm1(-(a + b)))
        linear.append(a + b)
    return DecayError(exact=float(np.mean(exact)), linear=float(np.mean(linear)))


@dataclass(frozen=True)
class ExcitationStats:
    """``nu_k`` (input average at ``t = tau``) and ``nu_bar_k`` (input and time average)."""

    nu_k: float
    nu_bar_k: float
    per_input: dict

    @property
    def two_nu_bar(self) -> float:
        return 2.0 * self.nu_bar_k


def mean_excitation(run: GateRun) -> ExcitationStats:
    t = run.times
    mid = int(np.argmin(np.abs(t - run.tau)))
    per = {}
    for q, rec in run.inputs.items():
        per[q] = (float(rec.excitation[mid]), float(simpson(rec.excitation, x=t) / (t[-1] - t[0])))
    nu = float(np.mean([v[0] for v in per.values()]))
    nub = float(np.mean([v[1] for v in per.values()]))
    return ExcitationStats(nu_k=nu, nu_bar_k=nub, per_input=per)


def mean_field_excitation(array: AtomArray, delta0: float) -> float:
    """Closed-form ``2 nu_bar_k`` for a linear sweep.

    Each atom that ends up excited in the MIS state feels the field
    ``B_i`` of the other excited atoms and crosses into ``|r>`` when
    ``Delta(t) = B_i / 2``, so it spends the fraction ``1 - B_i / (2 Delta0)``
    of the pulse in the Rydberg state.  Degenerate MIS configurations are
    averaged.
    """
    b = array.couplings
    total = 0.0
    for q in input_bits(array.n_qubits):
        basis = basis_for_input(array, q)
        _, configs = mis_configurations(array, basis)
        vals = []
        for j in configs:
            on = [basis.active[a] for a in np.flatnonzero(basis.states[j])]
            vals.append(sum(1.0 - sum(b[i, m] for m in on if m != i) / (2.0 * delta0) for i in on))
        total += float(np.mean(vals))
    return total / 2**array.n_qubits


@dataclass(frozen=True)
class LeakageFit:
    """``E_leak = (4 / 2^(k+1)) mu exp(-c Omega0^2 tau / Delta0)``."""

    mu: float
    c: float
    residual: float
    n_used: int

    @property
    def g(self) -> float:
        return 2.0 * math.sqrt(self.c / math.pi)


def leakage_model(tau, k: int, mu: float, c: float, omega0: float, delta0: float):
    return 4.0 / 2 ** (k + 1) * mu * np.exp(-c * omega0**2 / delta0 * np.asarray(tau, dtype=float))


def leakage_fit(
    samples: Sequence[tuple[float, float]],
    k: int,
    delta0: float,
    omega0: float,
    window: tuple[float, float] = LEAK_WINDOW,
) -> LeakageFit:
    """Least-squares fit of ``log E_leak`` against ``tau``.

    Only samples with ``E`` inside ``window`` enter the fit.  Raises
    ``ContractViolation`` unless at least six usable samples spanning a
    decade remain; warns when the used samples are not decreasing.
    """
    arr = np.asarray(samples, dtype=float)
    tau, e = arr[:, 0], arr[:, 1]
    order = np.argsort(tau)
    tau, e = tau[order], e[order]
    use = (e >= window[0]) & (e <= window[1])
    if use.sum() < 6:
        raise ContractViolation("need at least six samples inside the fit window")
    if e[use].max() / e[use].min() < 10:
        raise ContractViolation("samples must span at least a decade of E_leak")
    if np.any(np.diff(e[use]) >= 0):
        warnings.warn("leakage samples are not monotone in tau", FitQualityWarning, stacklevel=2)
    x = omega0**2 / delta0 * tau[use]
    y = np.log(e[use])
    slope, icpt = np.polyfit(x, y, 1)
    resid = float(np.sqrt(np.mean((y - (slope * x + icpt)) ** 2)))
    mu = math.exp(icpt) * 2 ** (k + 1) / 4.0
    return LeakageFit(mu=mu, c=-float(slope), residual=resid, n_used=int(use.sum()))


def landau_zener_estimate(delta_e: float, delta0: float, tau: float) -> float:
    """``exp[-2 pi (dE/2)^2 / (2 Delta0 / tau)]`` for a gap ``dE`` crossed at rate ``2 Delta0 / tau``."""
    if delta_e <= 0:
        raise ContractViolation("gap must be positive")
    return math.exp(-2.0 * math.pi * (0.5 * delta_e) ** 2 / (2.0 * delta0 / tau))


@dataclass(frozen=True)
class OptimalDuration:
    tau_opt: float
    E_min: float
    tau_num: float = float("nan")
    E_num: float = float("nan")


def optimal_duration(
    k: int,
    mu: float,
    c: float,
    nu_bar: float,
    gamma: float,
    delta0: float,
    omega0: float,
    curve: Sequence[tuple[float, float]] | None = None,
) -> OptimalDuration:
    """Closed-form minimum of ``2 nu_bar Gamma tau + E_leak(tau)``.

    ``nu_bar`` is half the time-integrated excitation number per unit
    ``tau``, so the decay term is ``2 nu_bar Gamma tau``.  When ``curve``
    (sampled ``(tau, E_total)``) is given, its minimum is also located by
    spline interpolation.
    """
    x = c * omega0**2 / delta0
    arg = mu * x / (2**k * nu_bar * gamma) if gamma > 0 else math.inf
    if not arg > 1:
        raise RegimeError(f"log argument {arg:.3g} <= 1: decay dominates at every duration")
    tau_opt = math.log(arg) / x
    e_min = 2.0 * nu_bar * gamma * (tau_opt + 1.0 / x)
    if curve is None:
        return OptimalDuration(tau_opt=tau_opt, E_min=e_min)
    t_num, e_num = minimize_sampled(curve)
    return OptimalDuration(tau_opt=tau_opt, E_min=e_min, tau_num=t_num, E_num=e_num)


def minimize_sampled(curve: Sequence[tuple[float, float]]) -> tuple[float, float]:
    """Minimum of a sampled curve through a cubic spline of its values."""
    arr = np.asarray(sorted(curve), dtype=float)
    if len(arr) < 4:
        raise ContractViolation("need at least four samples")
    spl = CubicSpline(arr[:, 0], arr[:, 1])
    i = int(np.argmin(arr[:, 1]))
    lo, hi = arr[max(i - 1, 0), 0], arr[min(i + 1, len(arr) - 1), 0]
    res = minimize_scalar(spl, bounds=(lo, hi), method="bounded", options={"xatol": 1e-6})
    return float(res.x), float(res.fun)


def minimize_total_error(
    error_of_tau: Callable[[float], float],
    bounds: tuple[float, float],
    n_coarse: int = 9,
    xatol: float = 2e-3,
) -> tuple[float, float, list[tuple[float, float]]]:
    """Coarse scan then bounded Brent refinement of a simulated error curve.

    Returns ``(tau*, E*, evaluations)``.
    """
    taus = np.linspace(bounds[0], bounds[1], n_coarse)
    evals = [(float(t), float(error_of_tau(t))) for t in taus]
    i = int(np.argmin([e for _, e in evals]))
    lo = taus[max(i - 1, 0)]
    hi = taus[min(i + 1, n_coarse - 1)]

    def f(t):
        e = float(error_of_tau(t))
        evals.append((float(t), e))
        return e

    minimize_scalar(f, bounds=(lo, hi), method="bounded", options={"xatol": xatol})
    best = min(evals, key=lambda te: te[1])
    return best[0], best[1], sorted(evals)


def error_curve_csv(rows: Sequence[dict]) -> str:
    """CSV of dict rows, header from the first row's keys."""
    if not rows:
        return ""
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: (repr(float(v)) if isinstance(v, (float, np.floating)) else v) for k, v in r.items()})
    return buf.getvalue()
