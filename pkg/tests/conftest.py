import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from ckzgate.model import build_star_graph

settings.register_profile(
    "ckz", max_examples=25, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("ckz")

TWO_PI = 2 * math.pi
OMEGA0 = TWO_PI * 8.0
TAU = 16 * math.pi / OMEGA0
GAMMA = TWO_PI * 5e-4

# (Delta0 / Omega0, B / Omega0) per k
GATE_RATIOS = {2: (2.4, 6.0), 3: (2.4, 6.0), 4: (3.2, 5.6)}


def gate_params(k):
    d, b = GATE_RATIOS[k]
    return d * OMEGA0, b * OMEGA0


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def star2():
    return build_star_graph(2, gate_params(2)[1])


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE: dict[str, str] = {}


def report(cid: str, ok: bool, detail: str) -> None:
    line = f"{cid:>4s} {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE[cid] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for cid in sorted(ACCEPTANCE, key=lambda c: int(c[1:])):
        terminalreporter.write_line(ACCEPTANCE[cid])
