"""Leakage error vs duration without decay, and the exponential fit per k.

Writes ``leakage_k{k}.csv`` (tau, E_leak) and prints (mu_k, c_k).
Usage: python scripts/leakage_fits.py [output_dir]
"""

import math
import sys
import warnings
from pathlib import Path

import numpy as np

from ckzgate.analysis import leakage_fit
from ckzgate.cli import render_csv
from ckzgate.model import build_star_graph
from ckzgate.protocol import average_fidelity, build_bundle, run_gate
from ckzgate.pulses import flat_top_linear

OMEGA0 = 2 * math.pi * 8.0
RATIOS = {2: (2.4, 6.0), 3: (2.4, 6.0), 4: (3.2, 5.6)}
GRID = np.round(np.arange(0.4, 1.6 + 1e-9, 0.025), 6)


def scan(k: int) -> list[tuple[float, float]]:
    d, b = RATIOS[k]
    arr = build_star_graph(k, b * OMEGA0)
    bundle = build_bundle(arr)
    out = []
    for tau in GRID:
        run = run_gate(arr, flat_top_linear(OMEGA0, d * OMEGA0, tau), n_samples=3, bundle=bundle)
        out.append((float(tau), average_fidelity(run).E))
    return out


def main(out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    for k in (2, 3, 4):
        samples = scan(k)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            fit = leakage_fit(samples, k, RATIOS[k][0] * OMEGA0, OMEGA0)
        header = {"k": k, "mu": fit.mu, "c": fit.c, "residual": fit.residual, "n_used": fit.n_used}
        (out / f"leakage_k{k}.csv").write_text(render_csv(header, ["tau", "E_leak"], [list(s) for s in samples]))
        print(f"k={k}: mu = {fit.mu:.3f}, c = {fit.c:.4f} ({fit.n_used} points)")


if __name__ == "__main__":
    main(Path(sys.argv[1] if len(sys.argv) > 1 else "runs/leakage"))
