from __future__ import annotations

import math

import numpy as np
import pytest

from outdeg1.geometry import Window
from outdeg1.process import Configuration, RngSpec


def random_config(seed: int, n_max: int = 12, side: float = 10.0) -> Configuration:
    """Uniform configuration with a uniform number of points in 0..n_max."""
    gen = np.random.default_rng(seed)
    n = int(gen.integers(0, n_max + 1))
    germs = gen.random((n, 2)) * side
    marks = gen.random(n)
    return Configuration(germs, marks, Window.square(side))


def pinwheel() -> Configuration:
    """Germs at 0, 120, 240 degrees on the unit circle, each turned 160
    degrees from its radius so the three rays chase each other."""
    pts = []
    for deg in (0.0, 120.0, 240.0):
        t = math.radians(deg)
        pts.append((math.cos(t), math.sin(t), (deg + 160.0) / 360.0 % 1.0))
    return Configuration.from_points(pts)


TWO_POINT = [(0.0, 0.0, 0.0), (2.0, -1.0, 0.25)]
CHAIN = [(0.0, 0.0, 0.0), (2.0, -1.0, 0.25), (3.0, 1.0, 0.5)]


@pytest.fixture
def two_point() -> Configuration:
    return Configuration.from_points(TWO_POINT)


@pytest.fixture
def chain() -> Configuration:
    return Configuration.from_points(CHAIN)


@pytest.fixture
def rng() -> RngSpec:
    return RngSpec(12345)


ACCEPTANCE_LINES: list[str] = []


def report(criterion: int, ok: bool, detail: str) -> None:
    line = f"criterion {criterion:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
