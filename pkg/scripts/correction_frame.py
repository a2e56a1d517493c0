"""Exhaustive check of the X/Z correction frame on star and extended graphs.

For each graph, prints which qubits are flipped and whether the corrected
parity diagonal equals the C_kZ truth table (up to a global sign).
"""

import math

from ckzgate.model import build_extended_graph, input_bits, mis_excitations
from ckzgate.protocol import ckz_diagonal, correction_qubits, corrected_diagonal

B = 2 * math.pi * 48.0
GRAPHS = [(0, 0), (0, 0, 0), (0, 0, 0, 0), (1, 1), (2, 1), (1, 1, 1), (1, 0, 0), (2, 1, 0), (1, 1, 0, 0)]


def check(n):
    k = len(n)
    arr = build_extended_graph(k, n, B)
    parity = {q: (-1) ** mis_excitations(arr, q) for q in input_bits(k + 1)}
    flipped = correction_qubits(n)
    corr = corrected_diagonal(parity, flipped)
    ideal = ckz_diagonal(k + 1)
    ratios = {corr[q] * ideal[q] for q in ideal}
    return flipped, ratios


if __name__ == "__main__":
    for n in GRAPHS:
        flipped, ratios = check(n)
        verdict = f"C_kZ x {ratios.pop():+d}" if len(ratios) == 1 else "mismatch"
        print(f"n={str(n):14s} flipped={str(flipped):12s} {verdict}")
