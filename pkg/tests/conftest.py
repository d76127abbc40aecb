import numpy as np
import pytest

from omgrand.constellation import Constellation, Ring
from omgrand.shaping import ShapingCode

# 20-symbol tree of the worked example: 7 -> 111, 4 -> 011, 9 -> 1001,
# 15 -> 110000; the remaining leaves complete a full tree.
_FIXED = {4: "011", 7: "111", 9: "1001", 15: "110000", 0: "0000"}
_OTHER_WORDS = [
    "0001", "0010", "0011", "0100", "0101",
    "1000", "10100", "10101", "10110", "10111",
    "110001", "110010", "110011", "11010", "11011",
]
# rings: origin {0}, {1..4}, {5,6,7}, {8,9,10}, {11,12,13}, {14..19}
FIXTURE_RING_SIZES = (1, 4, 3, 3, 3, 6)
# offsets put point 9 (ring 3) right outside point 7 (ring 2)
FIXTURE_OFFSETS = (0.0, 0.0, 0.0, 2.0, 0.5, 0.2)


def fixture_codewords():
    words = [None] * 20
    for s, w in _FIXED.items():
        words[s] = w
    rest = iter(_OTHER_WORDS)
    for s in range(20):
        if words[s] is None:
            words[s] = next(rest)
    return words


def fixture_constellation():
    rings, pts, ring_idx = [], [], []
    for j, k in enumerate(FIXTURE_RING_SIZES):
        ring = Ring(0.5 * j, k, FIXTURE_OFFSETS[j])
        rings.append(ring)
        pts.append(ring.points())
        ring_idx.append(np.full(k, j))
    words = fixture_codewords()
    probs = np.array([2.0 ** -len(w) for w in words])
    return Constellation(np.concatenate(pts), probs / probs.sum(), np.concatenate(ring_idx),
                         rings, peak_m=2.5, n0=0.01, avg_power=4.0)


@pytest.fixture
def fixture_code():
    cons = fixture_constellation()
    return ShapingCode(fixture_codewords(), cons.probs)


@pytest.fixture
def fixture_cons():
    return fixture_constellation()


def worked_example_samples(cons, t=0.4):
    """Received samples that MAP-detect as 9-4-15 while 7 was sent first.

    The first sample sits between points 9 and 7 (closer to 9), so 9 is the
    least reliable decision and 7 its most likely alternative.
    """
    x = cons.points
    return np.array([x[9] + t * (x[7] - x[9]), x[4], x[15]])


@pytest.fixture(scope="session")
def paper_design():
    """Converged amplitude-channel design on the 0.6-step grid (N0 = 0.01, power 4)."""
    from omgrand.channel import ChannelParams
    from omgrand.dacp import AmplitudeGrid, design_dacp

    grid = AmplitudeGrid.uniform(0.6, 11)
    return design_dacp(grid, ChannelParams(0.01, grid.peak, 4.0), tol=1e-3)


@pytest.fixture(scope="session")
def paper_link():
    """128-point complex-model design with its shaping code, as the CLI pipeline builds it."""
    from omgrand.channel import ChannelParams
    from omgrand.constellation import build_constellation
    from omgrand.dacp import AmplitudeGrid, design_dacp
    from omgrand.shaping import assign_gray, build_code
    from omgrand.sim import OmLink

    grid = AmplitudeGrid.uniform(0.6, 11)
    dist, _ = design_dacp(grid, ChannelParams(0.01, grid.peak, 4.0), tol=1e-4, model="complex")
    cons = build_constellation(dist, 128, n0=0.01)
    code = assign_gray(build_code(cons.probs), cons)
    cons.codewords = code.codewords
    return OmLink(cons, code)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "REPORT", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
