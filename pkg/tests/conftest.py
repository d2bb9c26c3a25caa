import numpy as np
import pytest

from necklaces.bead import analyze_bead, simple_bead, validate_bead
from necklaces.necklace import build_necklace, indicator_gallery

B2_ROWS = [[0.2, 0.5, 0.3], [0.3, 0.2, 0.5]]
P_SIMPLE = 2.0 / 3.0


@pytest.fixture(scope="session")
def simple():
    return analyze_bead(simple_bead(P_SIMPLE))


@pytest.fixture(scope="session")
def bead2():
    return analyze_bead(validate_bead(B2_ROWS))


@pytest.fixture(scope="session")
def gallery(simple, bead2):
    """(label, spec) for both beads, three patterns and a spread of n <= 20."""
    out = []
    for name, bead in (("simple", simple), ("b2", bead2)):
        for pattern in ("alternating", "block", "all"):
            for n in (2, 3, 7, 12, 20):
                spec, _ = build_necklace(bead, indicator_gallery(pattern, n))
                out.append((f"{name}-{pattern}-{n}", spec))
    return out


def exact_rows(spec, start_index, steps):
    """Dense ``P^t(start, .)`` for ``t = 0..steps``: an oracle independent of the kernels."""
    p = spec.operator.toarray()
    out = np.zeros((steps + 1, spec.size))
    out[0, start_index] = 1.0
    for t in range(steps):
        out[t + 1] = out[t] @ p
    return out


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
