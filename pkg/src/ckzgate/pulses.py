"""Laser drive schedules: Rabi envelope ``omega(t)`` and detuning ``delta(t)``."""

from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import cumulative_simpson, simpson
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from .qdyn import ContractViolation

QUAD_POINTS = 4097


class PulseConstructionError(ValueError):
    pass


class PulseKind(str, enum.Enum):
    LINEAR = "LinearSweep"
    GAP_ADAPTED = "GapAdapted"
    MIRROR = "MirrorOf"
    STIRAP = "StirapPair"


@dataclass(frozen=True, eq=False)
class PulseSchedule:
    """Drive on ``[t_start, t_start + duration]``.

    ``omega`` and ``delta`` accept scalars or arrays of times (us) and return
    rad/us.
    """

    omega: Callable
    delta: Callable
    duration: float
    kind: PulseKind
    omega0: float = 0.0
    delta0: float = 0.0
    t_start: float = 0.0
    parent: "PulseSchedule | None" = None
    meta: dict = field(default_factory=dict)

    @property
    def t_end(self) -> float:
        return self.t_start + self.duration

    def sample(self, n: int = 1001) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        t = np.linspace(self.t_start, self.t_end, n)
        return t, np.asarray(self.omega(t), dtype=float), np.asarray(self.delta(t), dtype=float)

    def to_csv(self, n: int = 1001) -> str:
        """Sampled ``t, Omega, Delta`` columns (us, rad/us)."""
        t, om, de = self.sample(n)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "Omega", "Delta"])
        for row in zip(t, om, de):
            w.writerow([repr(float(x)) for x in row])
        return buf.getvalue()


def flat_top_envelope(omega0: float, tau: float, sigma_frac: float = 0.4) -> Callable:
    """Super-Gaussian (order 8) envelope shifted and rescaled to vanish at 0 and tau."""
    sigma = sigma_frac * tau
    edge = np.exp(-((tau / 2 / sigma) ** 8))

    def omega(t):
        t = np.asarray(t, dtype=float)
        val = omega0 * (np.exp(-(((t - tau / 2) / sigma) ** 8)) - edge) / (1 - edge)
        val = np.where((t >= 0) & (t <= tau), val, 0.0)
        return val if val.ndim else float(val)

    return omega


def flat_top_linear(omega0: float, delta0: float, tau: float) -> PulseSchedule:
    """Flat-top Rabi pulse with detuning swept linearly from ``-delta0`` to ``+delta0``."""
    if tau <= 0:
        raise ContractViolation("tau must be positive")
    beta = 2.0 * delta0 / tau

    def delta(t):
        return beta * (np.asarray(t, dtype=float) - tau / 2)

    return PulseSchedule(
        omega=flat_top_envelope(omega0, tau),
        delta=delta,
        duration=tau,
        kind=PulseKind.LINEAR,
        omega0=omega0,
        delta0=delta0,
        meta={"beta": beta, "sigma": 0.4 * tau},
    )


def mirror_pulse(step1: PulseSchedule) -> PulseSchedule:
    """Step-II drive on ``(tau, 2 tau]``: ``Omega(2tau - t)`` and ``-Delta(2tau - t)``."""
    if step1.t_start != 0.0:
        raise ContractViolation("step-I pulse must start at t = 0")
    tau = step1.duration
    om, de = step1.omega, step1.delta

    def omega(t):
        return om(2 * tau - np.asarray(t, dtype=float))

    def delta(t):
        return -de(2 * tau - np.asarray(t, dtype=float))

    return PulseSchedule(
        omega=omega,
        delta=delta,
        duration=tau,
        kind=PulseKind.MIRROR,
        omega0=step1.omega0,
        delta0=step1.delta0,
        t_start=tau,
        parent=step1,
    )


def plateau_start(pulse: PulseSchedule, fraction: float = 0.9) -> float:
    """First time the envelope reaches ``fraction * omega0``."""
    f = lambda t: float(pulse.omega(t)) - fraction * pulse.omega0
    return brentq(f, 0.0, pulse.duration / 2, xtol=1e-14)


def _hermite(t0, t1, y0, y1, m0, m1):
    h = t1 - t0

    def f(t):
        s = (np.asarray(t, dtype=float) - t0) / h
        h00 = 2 * s**3 - 3 * s**2 + 1
        h10 = s**3 - 2 * s**2 + s
        h01 = -2 * s**3 + 3 * s**2
        h11 = s**3 - s**2
        return h00 * y0 + h10 * h * m0 + h01 * y1 + h11 * h * m1

    return f


def gap_adapted_sweep(
    gap_profile: Callable,
    omega0: float,
    delta0: float,
    tau: float,
    dt_edge: float | None = None,
    n_grid: int = QUAD_POINTS,
) -> PulseSchedule:
    """Detuning sweep whose rate follows the instantaneous gap.

    On ``[dt_edge, tau - dt_edge]`` the detuning obeys
    ``dDelta/dt = zeta * gap(Delta)`` between ``-/+ delta0_star`` with
    ``delta0_star = beta (tau/2 - dt_edge)``; this is solved by tabulating
    ``t(Delta)`` with Simpson quadrature of ``1/gap``.  Cubic Hermite
    segments with zero end slope join it to ``-/+ delta0`` at ``0`` and
    ``tau``.  ``dt_edge`` defaults to where the envelope reaches 90 %.
    """
    base = flat_top_linear(omega0, delta0, tau)
    if dt_edge is None:
        dt_edge = plateau_start(base, 0.9)
    if not 0 < dt_edge < tau / 2:
        raise ContractViolation("dt_edge must lie in (0, tau/2)")
    beta = 2.0 * delta0 / tau
    d_star = beta * (tau / 2 - dt_edge)

    grid = np.linspace(-d_star, d_star, n_grid)
    gap = np.asarray(gap_profile(grid), dtype=float)
    if np.any(gap <= 0) or not np.all(np.isfinite(gap)):
        raise ContractViolation("gap profile must be strictly positive")
    inv = 1.0 / gap
    cum = cumulative_simpson(inv, x=grid, initial=0.0)
    total = cum[-1]
    t_interior = tau - 2 * dt_edge
    zeta = total / t_interior
    t_grid = dt_edge + cum / zeta
    if np.any(np.diff(t_grid) <= 0):
        raise PulseConstructionError("detuning is not monotone")
    inner = CubicSpline(t_grid, grid)
    rate_lo = zeta * gap[0]
    rate_hi = zeta * gap[-1]
    left = _hermite(0.0, dt_edge, -delta0, -d_star, 0.0, rate_lo)
    right = _hermite(tau - dt_edge, tau, d_star, delta0, rate_hi, 0.0)

    def delta(t):
        t = np.asarray(t, dtype=float)
        tc = np.clip(t, dt_edge, tau - dt_edge)
        out = np.where(t < dt_edge, left(t), np.where(t > tau - dt_edge, right(t), inner(tc)))
        return out if out.ndim else float(out)

    # the boundary cubics are monotone only when the end slopes stay below 3x the mean slope
    mean_slope = (delta0 - d_star) / dt_edge
    if rate_lo > 3 * mean_slope or rate_hi > 3 * mean_slope:
        raise PulseConstructionError("boundary interpolation would be non-monotone")

    return PulseSchedule(
        omega=base.omega,
        delta=delta,
        duration=tau,
        kind=PulseKind.GAP_ADAPTED,
        omega0=omega0,
        delta0=delta0,
        meta={"zeta": zeta, "dt_edge": dt_edge, "delta0_star": d_star, "beta": beta},
    )


@dataclass(frozen=True, eq=False)
class StirapPulses:
    """Counter-intuitive pair: ``omega_dp`` (r'-p) precedes ``omega_sp`` (r-p)."""

    omega_sp: Callable
    omega_dp: Callable
    omega_max: float
    tau_tr: float
    tau_del: float
    kind: PulseKind = PulseKind.STIRAP

    def mixing_angle(self, t):
        """``theta`` with ``tan(theta) = Omega_SP / Omega_DP``."""
        return np.arctan2(self.omega_sp(t), self.omega_dp(t))

    def to_csv(self, n: int = 1001) -> str:
        t = np.linspace(0, self.tau_tr, n)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "Omega_SP", "Omega_DP"])
        for row in zip(t, self.omega_sp(t), self.omega_dp(t)):
            w.writerow([repr(float(x)) for x in row])
        return buf.getvalue()


def stirap_pair(omega_max: float, tau_tr: float, tau_del: float) -> StirapPulses:
    """sin^2 pulses of length ``tau_tr - tau_del``; ``Omega_SP`` is delayed by
    ``tau_del`` and carries the opposite sign."""
    if not 0 < tau_del < tau_tr:
        raise ContractViolation("need 0 < tau_del < tau_tr")
    width = tau_tr - tau_del

    def omega_dp(t):
        t = np.asarray(t, dtype=float)
        return np.where((t >= 0) & (t <= width), omega_max * np.sin(np.pi * t / width) ** 2, 0.0)

    def omega_sp(t):
        t = np.asarray(t, dtype=float)
        s = t - tau_del
        return np.where((s >= 0) & (s <= width), -omega_max * np.sin(np.pi * s / width) ** 2, 0.0)

    return StirapPulses(omega_sp=omega_sp, omega_dp=omega_dp, omega_max=omega_max, tau_tr=tau_tr, tau_del=tau_del)


def pulse_area(f: Callable, t0: float, t1: float, n: int = QUAD_POINTS) -> float:
    t = np.linspace(t0, t1, n)
    return float(simpson(np.asarray(f(t), dtype=float), x=t))
