import math

import numpy as np
import pytest

from helly_quant.geometry import Ellipsoid, HPolytope
from helly_quant.helly import ConvexFamily


def box(lo, hi):
    return HPolytope.box(lo, hi)


def polygon(vertices):
    """Counter-clockwise vertex list to an H-polytope."""
    V = np.asarray(vertices, dtype=float)
    rows, rhs = [], []
    for p, q in zip(V, np.roll(V, -1, axis=0)):
        e = q - p
        a = np.array([e[1], -e[0]])
        rows.append(a)
        rhs.append(a @ p)
    return HPolytope(np.array(rows), np.array(rhs))


def disc(x, y, r=1.0):
    return Ellipsoid.ball([x, y], r)


def core_family(n, seed=0, spread=1.0):
    rng = np.random.default_rng(seed)
    lo = -1 - spread * rng.random((n, 2))
    hi = 1 + spread * rng.random((n, 2))
    return ConvexFamily(tuple(box(a, b) for a, b in zip(lo, hi)), 2)


@pytest.fixture
def unit_square():
    return box([-1, -1], [1, 1])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


PI = math.pi


ACCEPTANCE: list = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[0][1:])):
        terminalreporter.write_line(line)
