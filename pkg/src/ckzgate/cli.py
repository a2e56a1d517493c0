"""Command line: run experiment configs, compare outputs, list experiments.

Configs are flat YAML mappings in lab units (MHz, us, uK, um).  Every
frequency ``X_MHz`` becomes ``2 pi X`` rad/us on load and nowhere else.

Exit codes: 0 success, 1 numerical failure or failed comparison,
2 invalid configuration or unreadable input.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import csv
import io
import json
import math
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np
import yaml

from . import __version__
from .analysis import (
    bright_gap,
    classify_symmetry,
    leakage_fit,
    mean_excitation,
    minimize_total_error,
    optimal_duration,
    spectrum_scan,
    thermal_monte_carlo,
)
from .analysis.errors import decay_error
from .model import C6_RB70S, TWO_PI, basis_for_input, build_extended_graph, build_star_graph
from .protocol import (
    TargetKind,
    average_fidelity,
    build_bundle,
    correction_qubits,
    corrected_diagonal,
    phase_decomposition,
    run_gate,
)
from .pulses import flat_top_linear, gap_adapted_sweep
from .qdyn import ContractViolation, NumericalError
from .stirap import StirapConfig, scan_transfer

OUTPUT_ENV = "CKZGATE_OUTPUT_DIR"
EXIT_OK, EXIT_NUMERICAL, EXIT_CONFIG = 0, 1, 2


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------- config


def _grid(value, name):
    """A list of numbers, or ``{start, stop, num}`` for an inclusive linspace."""
    if isinstance(value, dict):
        missing = {"start", "stop", "num"} - set(value)
        if missing:
            raise ConfigError(f"{name}: grid needs start, stop, num (missing {sorted(missing)})")
        return [float(x) for x in np.linspace(value["start"], value["stop"], int(value["num"]))]
    if isinstance(value, (list, tuple)) and value:
        return [float(x) for x in value]
    raise ConfigError(f"{name}: expected a list or a start/stop/num mapping")


def _nonneg(name):
    def check(v):
        v = float(v)
        if not math.isfinite(v) or v < 0:
            raise ConfigError(f"{name}: must be a non-negative number")
        return v

    return check


def _positive(name):
    def check(v):
        v = float(v)
        if not math.isfinite(v) or v <= 0:
            raise ConfigError(f"{name}: must be positive")
        return v

    return check


def _int_in(name, lo, hi):
    def check(v):
        if isinstance(v, bool) or int(v) != v or not lo <= int(v) <= hi:
            raise ConfigError(f"{name}: must be an integer in [{lo}, {hi}]")
        return int(v)

    return check


def _bits(name):
    def check(v):
        if not isinstance(v, (list, str)) or any(str(b) not in "01" for b in v):
            raise ConfigError(f"{name}: must be a bit list such as [1, 1, 1]")
        return [int(b) for b in v]

    return check


def _choice(name, options):
    def check(v):
        if v not in options:
            raise ConfigError(f"{name}: must be one of {sorted(options)}")
        return v

    return check


def _seed(v):
    if isinstance(v, bool) or int(v) != v or not 0 <= int(v) < 2**64:
        raise ConfigError("seed: must be a 64-bit non-negative integer")
    return int(v)


FIELDS: dict[str, tuple[Callable, Any]] = {
    "experiment": (str, None),
    "name": (str, None),
    "output": (str, None),
    "seed": (_seed, 0),
    "k": (_int_in("k", 2, 4), 2),
    "n": (lambda v: [_int_in("n", 0, 8)(x) for x in v], None),
    "Omega0_MHz": (_positive("Omega0_MHz"), 8.0),
    "Delta0_MHz": (_positive("Delta0_MHz"), None),
    "B_MHz": (_positive("B_MHz"), None),
    "C6_MHz_um6": (_positive("C6_MHz_um6"), C6_RB70S / TWO_PI),
    "lam": (_positive("lam"), 1.0),
    "chi": (float, 0.0),
    "tau_us": (_positive("tau_us"), None),
    "tau_grid_us": (lambda v: _grid(v, "tau_grid_us"), None),
    "Gamma_r_MHz": (_nonneg("Gamma_r_MHz"), 0.0),
    "Gamma_rp_MHz": (_nonneg("Gamma_rp_MHz"), None),
    "Gamma_p_MHz": (_nonneg("Gamma_p_MHz"), 0.58),
    "pulse": (_choice("pulse", {"linear", "gapAdapted"}), "linear"),
    "tol": (lambda v: float(v), 1e-10),
    "T_uK": (lambda v: _grid(v, "T_uK"), [1.0]),
    "M": (_int_in("M", 2, 100000), 40),
    "Omega_max_MHz": (_positive("Omega_max_MHz"), 80.0),
    "tau_tr_us": (lambda v: _grid(v, "tau_tr_us"), None),
    "tau_del_frac": (lambda v: _grid(v, "tau_del_frac"), None),
    "input": (_bits("input"), None),
    "sign": (_choice("sign", {1, -1}), 1),
    "grid_size": (_int_in("grid_size", 64, 100000), 256),
    "n_samples": (_int_in("n_samples", 2, 100000), 201),
}


@dataclass
class ExperimentConfig:
    """Validated config; ``values`` holds lab units, ``lines`` maps keys to source lines."""

    values: dict
    lines: dict = field(default_factory=dict)
    source: str = "<string>"

    def __getitem__(self, key):
        return self.values[key]

    # derived quantities in rad/us
    @property
    def omega0(self) -> float:
        return TWO_PI * self["Omega0_MHz"]

    @property
    def delta0(self) -> float:
        return TWO_PI * self["Delta0_MHz"]

    @property
    def b(self) -> float:
        return TWO_PI * self["B_MHz"]

    @property
    def c6(self) -> float:
        return TWO_PI * self["C6_MHz_um6"]

    @property
    def gamma_r(self) -> float:
        return TWO_PI * self["Gamma_r_MHz"]

    @property
    def gamma_rp(self) -> float:
        return TWO_PI * self["Gamma_rp_MHz"]

    def resolved(self) -> dict:
        return {k: v for k, v in sorted(self.values.items())}


def _key_lines(text: str) -> dict:
    node = yaml.compose(text, Loader=yaml.SafeLoader)
    if not isinstance(node, yaml.MappingNode):
        return {}
    return {k.value: k.start_mark.line + 1 for k, _ in node.value}


def parse_config(text: str, source: str = "<string>") -> ExperimentConfig:
    """Parse and validate a YAML config.

    Raises
    ------
    ConfigError
        With the offending field and its line number.
    """
    try:
        raw = yaml.safe_load(text)
        lines = _key_lines(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{source}: YAML syntax error: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{source}: config must be a mapping of fields")

    def where(key):
        return f"{source}:{lines[key]}" if key in lines else source

    unknown = sorted(set(raw) - set(FIELDS))
    if unknown:
        raise ConfigError(f"{where(unknown[0])}: unknown field '{unknown[0]}'")
    if "experiment" not in raw:
        raise ConfigError(f"{source}: missing required field 'experiment'")
    if raw["experiment"] not in EXPERIMENTS:
        raise ConfigError(
            f"{where('experiment')}: unknown experiment kind '{raw['experiment']}'; "
            f"valid kinds: {', '.join(EXPERIMENTS)}"
        )
    vals = {}
    for key, (conv, default) in FIELDS.items():
        if key in raw and raw[key] is not None:
            try:
                vals[key] = conv(raw[key])
            except ConfigError as exc:
                raise ConfigError(f"{where(key)}: {exc}") from exc
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"{where(key)}: {key}: invalid value {raw[key]!r}") from exc
        else:
            vals[key] = default

    k = vals["k"]
    if vals["n"] is None:
        vals["n"] = [0] * k
    if len(vals["n"]) != k:
        raise ConfigError(f"{where('n')}: n needs one entry per branch (k = {k})")
    if vals["Delta0_MHz"] is None:
        vals["Delta0_MHz"] = (3.2 if k == 4 else 2.4) * vals["Omega0_MHz"]
    if vals["B_MHz"] is None:
        vals["B_MHz"] = (5.6 if k == 4 else 6.0) * vals["Omega0_MHz"]
    if vals["tau_us"] is None:
        vals["tau_us"] = 8.0 / vals["Omega0_MHz"]  # 16 pi / Omega0
    if vals["Gamma_rp_MHz"] is None:
        vals["Gamma_rp_MHz"] = vals["Gamma_r_MHz"]
    if not 1e-14 < vals["tol"] < 1e-4:
        raise ConfigError(f"{where('tol')}: tol must lie in (1e-14, 1e-4)")
    if abs(vals["chi"]) > 1:
        raise ConfigError(f"{where('chi')}: |chi| must not exceed 1")
    if vals["input"] is not None and len(vals["input"]) != k + 1:
        raise ConfigError(f"{where('input')}: input needs k + 1 = {k + 1} bits")
    if any(t < 0 for t in vals["T_uK"]):
        raise ConfigError(f"{where('T_uK')}: temperatures must be non-negative")
    if vals["tau_del_frac"] is not None and not all(0 < f < 1 for f in vals["tau_del_frac"]):
        raise ConfigError(f"{where('tau_del_frac')}: fractions must lie in (0, 1)")
    if vals["name"] is None:
        vals["name"] = Path(source).stem if source != "<string>" else vals["experiment"]
    return ExperimentConfig(values=vals, lines=lines, source=source)


def load_config(path: str | os.PathLike) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, source=str(path))


# ---------------------------------------------------------------- output


def render_csv(header: dict, columns: list[str], rows: list[list]) -> str:
    """CSV preceded by a ``# ``-prefixed YAML metadata block."""
    meta = yaml.safe_dump(_plain(header), sort_keys=True, default_flow_style=False).rstrip("\n")
    buf = io.StringIO()
    buf.write("# ---\n")
    for line in meta.splitlines():
        buf.write(f"# {line}\n")
    buf.write("# ---\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(x) for x in row])
    return buf.getvalue()


def _fmt(x):
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if isinstance(x, (np.integer,)):
        return str(int(x))
    return str(x)


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def read_csv(path: str | os.PathLike) -> tuple[dict, list[str], list[list[str]]]:
    text = Path(path).read_text()
    lines = text.splitlines()
    meta_lines = [ln[2:] if ln.startswith("# ") else ln[1:] for ln in lines if ln.startswith("#")]
    meta_lines = [ln for ln in meta_lines if ln.strip() != "---"]
    header = yaml.safe_load("\n".join(meta_lines)) if meta_lines else {}
    body = [ln for ln in lines if not ln.startswith("#")]
    rows = list(csv.reader(body))
    if not rows:
        return header or {}, [], []
    return header or {}, rows[0], rows[1:]


# ---------------------------------------------------------------- building blocks


def _array(cfg: ExperimentConfig):
    if any(cfg["n"]):
        return build_extended_graph(cfg["k"], cfg["n"], cfg.b, cfg.c6, c6_prime=-cfg["lam"] * cfg.c6)
    return build_star_graph(cfg["k"], cfg.b, cfg.c6, c6_prime=-cfg["lam"] * cfg.c6)


def _pulse(cfg: ExperimentConfig, tau: float, kind: str | None = None):
    kind = kind or cfg["pulse"]
    if kind == "gapAdapted":
        return gap_adapted_sweep(bright_gap(_array(cfg), cfg.omega0), cfg.omega0, cfg.delta0, tau)
    return flat_top_linear(cfg.omega0, cfg.delta0, tau)


def _gate_error(args) -> tuple[float, float]:
    """``(E_total, E_leakage)`` at one duration; module level so workers can pickle it."""
    values, tau, kind = args
    cfg = ExperimentConfig(values=values)
    arr = _array(cfg)
    bundle = build_bundle(arr)
    pulse = _pulse(cfg, tau, kind)
    e_leak = average_fidelity(run_gate(arr, pulse, tol=cfg["tol"], n_samples=3, bundle=bundle)).E
    if cfg.gamma_r == 0 and cfg.gamma_rp == 0:
        return e_leak, e_leak
    run = run_gate(arr, pulse, cfg.gamma_r, cfg.gamma_rp, tol=cfg["tol"], n_samples=3, bundle=bundle)
    return average_fidelity(run).E, e_leak


def _thermal_task(args):
    values, temp, e_static = args
    cfg = ExperimentConfig(values=values)
    res = thermal_monte_carlo(
        _array(cfg),
        _pulse(cfg, cfg["tau_us"]),
        temp,
        cfg["M"],
        cfg["seed"],
        gamma_r=cfg.gamma_r,
        gamma_rp=cfg.gamma_rp,
        tol=min(cfg["tol"], 1e-9),
        e_static=e_static,
    )
    return res.mean, res.std, res.e_static


def pmap(fn, items: list, workers: int) -> list:
    """Ordered map, in worker processes when ``workers > 1``."""
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))


# ---------------------------------------------------------------- experiments


def exp_truth_table(cfg: ExperimentConfig, workers: int) -> dict:
    arr = _array(cfg)
    run = run_gate(arr, _pulse(cfg, cfg["tau_us"]), cfg.gamma_r, cfg.gamma_rp, tol=cfg["tol"], n_samples=3)
    flipped = correction_qubits(arr.aux_counts)
    corr = corrected_diagonal(run.g(), flipped)
    rows = []
    for q, rec in run.inputs.items():
        phi_d = phase_decomposition(run, q)[0] if abs(rec.g) > 0.5 else float("nan")
        rows.append(
            [
                "".join(map(str, q)),
                rec.nu,
                (-1) ** rec.nu,
                float(np.angle(rec.g)),
                abs(rec.g),
                phi_d,
                int(np.sign(corr[q].real)),
            ]
        )
    header = {
        "experiment": "truthTable",
        "F_parity": average_fidelity(run).F,
        "F_ckz": average_fidelity(run, TargetKind.CKZ).F,
        "flipped_qubits": flipped,
    }
    cols = ["q", "nu", "parity", "arg_g", "abs_g", "phi_d", "ckz_sign"]
    return {"truth_table.csv": render_csv(header, cols, rows)}


def exp_dynamics(cfg: ExperimentConfig, workers: int) -> dict:
    arr = _array(cfg)
    pulse = _pulse(cfg, cfg["tau_us"])
    run = run_gate(arr, pulse, cfg.gamma_r, cfg.gamma_rp, tol=cfg["tol"], n_samples=cfg["n_samples"])
    cols = ["t", "Omega", "Delta"]
    labels = ["".join(map(str, q)) for q in run.inputs]
    for lab in labels:
        cols += [f"phi_{lab}", f"pop_q_{lab}", f"pop_R_{lab}", f"nu_{lab}"]
    tau = run.tau
    t = run.times
    om = np.where(t <= tau, pulse.omega(np.minimum(t, tau)), pulse.omega(2 * tau - np.maximum(t, tau)))
    de = np.where(t <= tau, pulse.delta(np.minimum(t, tau)), -pulse.delta(2 * tau - np.maximum(t, tau)))
    rows = []
    for i in range(len(t)):
        row = [t[i], om[i], de[i]]
        for rec in run.inputs.values():
            row += [rec.phase[i], rec.pop_q[i], rec.pop_r[i], rec.excitation[i]]
        rows.append(row)
    ex = mean_excitation(run)
    header = {"experiment": "dynamics", "nu_k": ex.nu_k, "two_nu_bar_k": ex.two_nu_bar}
    return {
        "dynamics.csv": render_csv(header, cols, rows),
        "gate_run.json": json.dumps(run.to_dict(max_points=cfg["n_samples"] * 2), sort_keys=True),
        "pulse.csv": pulse.to_csv(),
    }


def exp_spectrum(cfg: ExperimentConfig, workers: int) -> dict:
    arr = _array(cfg)
    q = cfg["input"] or [1] * (cfg["k"] + 1)
    basis = basis_for_input(arr, q)
    scan = spectrum_scan(
        arr, basis, cfg.omega0, cfg.delta0, interaction_sign=cfg["sign"], grid_size=cfg["grid_size"], tau=cfg["tau_us"]
    )
    header = {"experiment": "spectrum", "input": "".join(map(str, q)), "sign": cfg["sign"]}
    try:
        rep = classify_symmetry(arr, basis)
        header.update(n_dark=rep.n_dark, degenerate_pairs=rep.degenerate_pairs, non_degenerate=rep.non_degenerate)
    except ValueError:
        pass
    body = scan.to_csv().splitlines()
    rows = [r.split(",") for r in body[1:]]
    return {"spectrum.csv": render_csv(header, body[0].split(","), rows)}


def exp_fidelity_scan(cfg: ExperimentConfig, workers: int) -> dict:
    taus = cfg["tau_grid_us"] or [float(x) for x in np.linspace(0.4, 1.6, 13)]
    res = pmap(_gate_error, [(cfg.values, t, None) for t in taus], workers)
    e_tot = np.array([r[0] for r in res])
    e_leak = np.array([r[1] for r in res])
    arr = _array(cfg)
    mid = run_gate(arr, _pulse(cfg, cfg["tau_us"]), tol=cfg["tol"], n_samples=101)
    two_nu_bar = mean_excitation(mid).two_nu_bar
    g = cfg.gamma_r
    rows = [[t, et, el, decay_error(t, g, two_nu_bar).linear] for t, et, el in zip(taus, e_tot, e_leak)]
    header = {"experiment": "fidelityScan", "pulse": cfg["pulse"], "two_nu_bar_k": two_nu_bar}
    try:
        fit = leakage_fit(list(zip(taus, e_leak)), cfg["k"], cfg.delta0, cfg.omega0)
        header.update(mu_k=fit.mu, c_k=fit.c, fit_residual=fit.residual)
        if g > 0:
            opt = optimal_duration(cfg["k"], fit.mu, fit.c, two_nu_bar / 2, g, cfg.delta0, cfg.omega0, list(zip(taus, e_tot)))
            header.update(tau_opt=opt.tau_opt, E_min=opt.E_min, tau_num=opt.tau_num, E_num=opt.E_num)
    except (ContractViolation, ValueError) as exc:
        header["fit_note"] = str(exc)
    return {"fidelity_scan.csv": render_csv(header, ["tau", "E_total", "E_leakage", "E_decay"], rows)}


def exp_thermal(cfg: ExperimentConfig, workers: int) -> dict:
    arr = _array(cfg)
    pulse = _pulse(cfg, cfg["tau_us"])
    tol = min(cfg["tol"], 1e-9)
    e0 = average_fidelity(run_gate(arr, pulse, cfg.gamma_r, cfg.gamma_rp, tol=tol, n_samples=3)).E
    res = pmap(_thermal_task, [(cfg.values, t, e0) for t in cfg["T_uK"]], workers)
    rows = [[t, m, s] for t, (m, s, _) in zip(cfg["T_uK"], res)]
    header = {"experiment": "thermal", "E_T0": e0, "M": cfg["M"], "seed": cfg["seed"]}
    return {"thermal.csv": render_csv(header, ["T", "mean", "std"], rows)}


def exp_stirap_scan(cfg: ExperimentConfig, workers: int) -> dict:
    arr = _array(cfg)
    tau_tr = cfg["tau_tr_us"] or [float(x) for x in np.linspace(0.1, 0.4, 8)]
    frac = cfg["tau_del_frac"] or [float(x) for x in np.linspace(0.1, 0.45, 8)]
    base = StirapConfig(
        omega_max=TWO_PI * cfg["Omega_max_MHz"],
        tau_tr=tau_tr[0],
        tau_del=frac[0] * tau_tr[0],
        gamma_p=TWO_PI * cfg["Gamma_p_MHz"],
        gamma_r=cfg.gamma_r,
        gamma_rp=cfg.gamma_rp,
        lam=cfg["lam"],
        chi=cfg["chi"],
    )
    surf = scan_transfer(arr, base, tau_tr, frac, tol=max(cfg["tol"], 1e-9))
    t_best, f_best, e_best = surf.argmin
    rows = []
    for i, t in enumerate(surf.tau_tr):
        for j, f in enumerate(surf.del_frac):
            rows.append([t, f * t, f, surf.E[i, j], surf.E_p[i, j], surf.E_ryd[i, j]])
    header = {"experiment": "stirapScan", "argmin_tau_tr": t_best, "argmin_del_frac": f_best, "E_tr_min": e_best}
    cols = ["tau_tr", "tau_del", "del_frac", "E_tr", "E_p", "E_ryd"]
    return {"stirap_scan.csv": render_csv(header, cols, rows)}


def exp_optimized_pulse(cfg: ExperimentConfig, workers: int) -> dict:
    rows = []
    out = {}
    for kind in ("linear", "gapAdapted"):
        t_best, e_best, evals = minimize_total_error(
            lambda t, kind=kind: _gate_error((cfg.values, t, kind))[0], (0.3, 1.3), n_coarse=11
        )
        rows.append([kind, t_best, e_best])
        out[f"pulse_{kind}.csv"] = _pulse(cfg, t_best, kind).to_csv()
    header = {
        "experiment": "optimizedPulse",
        "E_ratio": rows[1][2] / rows[0][2],
        "tau_ratio": rows[1][1] / rows[0][1],
    }
    out["optimized.csv"] = render_csv(header, ["pulse", "tau_opt", "E_min"], rows)
    return out


EXPERIMENTS: dict[str, tuple[Callable, str]] = {
    "truthTable": (exp_truth_table, "phases and parities of every input"),
    "dynamics": (exp_dynamics, "phase, population and excitation traces through both pulses"),
    "spectrum": (exp_spectrum, "instantaneous eigenvalues and couplings vs detuning"),
    "fidelityScan": (exp_fidelity_scan, "gate error vs duration with leakage fit and optimum"),
    "thermal": (exp_thermal, "Monte Carlo error from thermal motion vs temperature"),
    "stirapScan": (exp_stirap_scan, "Rydberg transfer error over transfer time and delay"),
    "optimizedPulse": (exp_optimized_pulse, "minimal error of linear vs gap-adapted sweeps"),
}


# ---------------------------------------------------------------- commands


def run_config(cfg: ExperimentConfig, out_dir: Path, workers: int) -> list[Path]:
    start = time.perf_counter()
    runner, _ = EXPERIMENTS[cfg["experiment"]]
    files = runner(cfg, workers)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for name, text in files.items():
        path = out_dir / name
        path.write_text(text)
        written.append(path)
    manifest = {
        "experiment": cfg["experiment"],
        "config": str(cfg.source),
        "parameters": _plain(cfg.resolved()),
        "seed": cfg["seed"],
        "version": __version__,
        "wall_time_s": time.perf_counter() - start,
        "outputs": sorted(p.name for p in written),
    }
    mpath = out_dir / "manifest.json"
    mpath.write_text(json.dumps(manifest, indent=2, sort_keys=True))
    return written + [mpath]


def compare_files(a: str, b: str, rtol: float = 1e-9, atol: float = 0.0, col_tol: dict | None = None) -> tuple[bool, str]:
    """Column-wise comparison of two CSV outputs.

    Numeric cells pass when ``|x - y| <= atol + rtol |y|``; other cells must
    match exactly.  Returns ``(passed, report)``.
    """
    col_tol = col_tol or {}
    _, ca, ra = read_csv(a)
    _, cb, rb = read_csv(b)
    if ca != cb:
        only_a = [c for c in ca if c not in cb]
        only_b = [c for c in cb if c not in ca]
        return False, f"schema mismatch: only in {a}: {only_a}; only in {b}: {only_b}"
    if len(ra) != len(rb):
        return False, f"row count differs: {len(ra)} vs {len(rb)}"
    worst = (0.0, None)
    failures = []
    for i, (x, y) in enumerate(zip(ra, rb)):
        for j, col in enumerate(ca):
            r, at = col_tol.get(col, (rtol, atol))
            try:
                fx, fy = float(x[j]), float(y[j])
            except ValueError:
                if x[j] != y[j]:
                    failures.append(f"row {i + 1}, column {col}: {x[j]!r} != {y[j]!r}")
                continue
            if math.isnan(fx) and math.isnan(fy):
                continue
            dev = abs(fx - fy)
            if dev > worst[0] or worst[1] is None:
                worst = (dev, (i + 1, col))
            if not dev <= at + r * abs(fy):
                failures.append(f"row {i + 1}, column {col}: {fx!r} vs {fy!r} (|diff| {dev:.3e})")
    summary = f"worst deviation {worst[0]:.3e}" + (f" at row {worst[1][0]}, column {worst[1][1]}" if worst[1] else "")
    if failures:
        return False, "FAIL: " + "; ".join(failures[:10]) + f" ({len(failures)} cells); {summary}"
    return True, f"PASS: {summary}"


def _parse_col_tol(items) -> dict:
    out = {}
    for item in items or []:
        name, _, val = item.partition("=")
        parts = val.split(",")
        out[name] = (float(parts[0]), float(parts[1]) if len(parts) > 1 else 0.0)
    return out


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ckzgate", description="Multiqubit Rydberg gate simulator")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run an experiment config")
    r.add_argument("config")
    r.add_argument("-o", "--output", help=f"output directory (default: config 'output', ${OUTPUT_ENV}, or ./runs)")
    r.add_argument("--workers", type=int, default=os.cpu_count() or 1, help="worker processes")
    c = sub.add_parser("compare", help="compare two CSV outputs column by column")
    c.add_argument("a")
    c.add_argument("b")
    c.add_argument("--rtol", type=float, default=1e-9)
    c.add_argument("--atol", type=float, default=0.0)
    c.add_argument("--col-tol", action="append", metavar="COL=RTOL[,ATOL]")
    sub.add_parser("list-experiments", help="list experiment kinds")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK

    if args.command == "list-experiments":
        for name, (_, desc) in EXPERIMENTS.items():
            print(f"{name:16s} {desc}")
        return EXIT_OK

    if args.command == "compare":
        try:
            ok, report = compare_files(args.a, args.b, args.rtol, args.atol, _parse_col_tol(args.col_tol))
        except (OSError, ValueError, yaml.YAMLError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        print(report)
        return EXIT_OK if ok else EXIT_NUMERICAL

    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = args.output or cfg["output"] or os.path.join(os.environ.get(OUTPUT_ENV, "runs"), cfg["name"])
    try:
        paths = run_config(cfg, Path(out), max(1, args.workers))
    except (NumericalError, ContractViolation) as exc:
        detail = ""
        if getattr(exc, "inputs", None):
            detail = f" (inputs {[''.join(map(str, q)) for q in exc.inputs]})"
        elif getattr(exc, "q", None) is not None:
            detail = f" (input {''.join(map(str, exc.q))})"
        print(f"numerical failure in {cfg['experiment']}: {exc}{detail}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for pth in paths:
        print(pth)
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
