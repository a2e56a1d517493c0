"""Thermal error of the k=4 gate vs atom spacing at fixed B.

Scaling C6 by s^6 scales all distances by s while keeping every coupling;
the motional dephasing should fall as 1/s^2.
Usage: python scripts/thermal_spacing.py [M]
"""

import math
import sys

from ckzgate.analysis import thermal_monte_carlo
from ckzgate.model import C6_RB70S, blockade_radius, build_star_graph
from ckzgate.pulses import flat_top_linear

OMEGA0 = 2 * math.pi * 8.0
GAMMA = 2 * math.pi * 5e-4


def main(m: int) -> None:
    b, delta0 = 5.6 * OMEGA0, 3.2 * OMEGA0
    pulse = flat_top_linear(OMEGA0, delta0, 1.0)
    print("scale  r_um    E_th_mean  E_th_std   E_T0")
    for s in (1.0, 1.25, 1.5, 2.0):
        c6 = C6_RB70S * s**6
        res = thermal_monte_carlo(build_star_graph(4, b, c6), pulse, 1.0, m, seed=2024, gamma_r=GAMMA)
        print(f"{s:5.2f}  {blockade_radius(b, c6):6.3f}  {res.mean:.3e}  {res.std:.3e}  {res.e_static:.3e}")


if __name__ == "__main__":
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 10)
