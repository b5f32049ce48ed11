"""Marked Poisson configurations in a rectangular window."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .geometry import Point2, Window, unit_vectors

MarkSampler = Callable[[np.random.Generator, int], np.ndarray]


class CoincidentGermError(ValueError):
    """Two germs of a configuration share a location."""


class MarkedPoint(NamedTuple):
    id: int
    germ: Point2
    mark: float


@dataclass(frozen=True)
class RngSpec:
    """Address of an independent random stream.

    Every variate is a function of ``(master_seed, stream, sub, draw index)``:
    the stream is a Philox counter generator keyed by a SeedSequence, so
    replicates need no shared state.
    """

    master_seed: int
    stream: int = 0
    sub: tuple[int, ...] = ()

    def __post_init__(self):
        if self.stream < 0 or any(s < 0 for s in self.sub):
            raise ValueError("stream indices must be non-negative")
        if not (0 <= self.master_seed < 2**64):
            raise ValueError("master_seed must be a 64-bit unsigned integer")

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.master_seed, spawn_key=(self.stream, *self.sub))
        return np.random.Generator(np.random.Philox(ss))

    def child(self, k: int) -> "RngSpec":
        return RngSpec(self.master_seed, self.stream, (*self.sub, k))


@dataclass(frozen=True, eq=False)
class Configuration:
    """Finite marked configuration; point ``i`` has id ``i``."""

    germs: np.ndarray
    marks: np.ndarray
    window: Window
    _checked: bool = field(default=True, repr=False)

    def __post_init__(self):
        germs = np.asarray(self.germs, dtype=float).reshape(-1, 2)
        marks = np.asarray(self.marks, dtype=float).reshape(-1)
        if len(germs) != len(marks):
            raise ValueError("germs and marks differ in length")
        germs.setflags(write=False)
        marks.setflags(write=False)
        object.__setattr__(self, "germs", germs)
        object.__setattr__(self, "marks", marks)
        if not self._checked:
            return
        if not np.all(np.isfinite(germs)):
            raise ValueError("germs must be finite")
        if len(marks) and not np.all((marks >= 0.0) & (marks < 1.0)):
            raise ValueError("marks must lie in [0, 1)")
        w = self.window
        inside = (
            (germs[:, 0] >= w.lo.x) & (germs[:, 0] <= w.hi.x) & (germs[:, 1] >= w.lo.y) & (germs[:, 1] <= w.hi.y)
        )
        if not np.all(inside):
            raise ValueError("all germs must lie in the window")
        if len(germs) > 1 and len(np.unique(germs, axis=0)) != len(germs):
            raise CoincidentGermError("configuration has coincident germs")

    @classmethod
    def empty(cls, window: Window) -> "Configuration":
        return cls(np.zeros((0, 2)), np.zeros(0), window)

    @classmethod
    def from_points(cls, points: Sequence, window: Window | None = None) -> "Configuration":
        """Build from ``[(x, y, mark), ...]``; the window defaults to a padded bounding box."""
        arr = np.asarray(points, dtype=float).reshape(-1, 3)
        if window is None:
            if len(arr):
                lo = arr[:, :2].min(axis=0) - 1.0
                hi = arr[:, :2].max(axis=0) + 1.0
            else:
                lo, hi = np.array([-1.0, -1.0]), np.array([1.0, 1.0])
            window = Window(Point2(*lo), Point2(*hi))
        return cls(arr[:, :2], arr[:, 2], window)

    def __len__(self) -> int:
        return len(self.marks)

    @property
    def n(self) -> int:
        return len(self.marks)

    @cached_property
    def directions(self) -> np.ndarray:
        """Unit growth/cone directions, computed once per configuration."""
        return unit_vectors(self.marks)

    @property
    def points(self) -> list[MarkedPoint]:
        return [MarkedPoint(i, Point2(float(g[0]), float(g[1])), float(m)) for i, (g, m) in enumerate(zip(self.germs, self.marks))]

    def point(self, i: int) -> MarkedPoint:
        g = self.germs[i]
        return MarkedPoint(i, Point2(float(g[0]), float(g[1])), float(self.marks[i]))

    def with_points(self, added: Sequence[tuple[Point2, float]], window: Window | None = None) -> "Configuration":
        """A new configuration with extra (germ, mark) pairs appended (ids n, n+1, ...)."""
        if not added:
            return self
        g = np.array([p for p, _ in added], dtype=float).reshape(-1, 2)
        m = np.array([u for _, u in added], dtype=float)
        return Configuration(np.vstack([self.germs, g]), np.concatenate([self.marks, m]), window or self.window)

    def restricted(self, mask: np.ndarray, window: Window | None = None) -> tuple["Configuration", np.ndarray]:
        """Sub-configuration of masked points (renumbered) and the original ids kept."""
        idx = np.flatnonzero(mask)
        sub = Configuration(self.germs[idx], self.marks[idx], window or self.window, _checked=False)
        return sub, idx

    def same_as(self, other: "Configuration") -> bool:
        return (
            self.window == other.window
            and np.array_equal(self.germs, other.germs)
            and np.array_equal(self.marks, other.marks)
        )


def uniform_marks(gen: np.random.Generator, n: int) -> np.ndarray:
    return gen.random(n)


def sample_ppp(
    window: Window,
    intensity: float,
    rng: RngSpec,
    mark_sampler: MarkSampler = uniform_marks,
) -> Configuration:
    """Homogeneous Poisson process of the given intensity in ``window`` with
    i.i.d. marks from ``mark_sampler`` (uniform on [0, 1) by default)."""
    if not math.isfinite(intensity) or intensity <= 0:
        raise ValueError("intensity must be a finite positive number")
    gen = rng.generator()
    n = int(gen.poisson(intensity * window.area))
    xs = window.lo.x + window.width * gen.random(n)
    ys = window.lo.y + window.height * gen.random(n)
    marks = np.asarray(mark_sampler(gen, n), dtype=float)
    return Configuration(np.stack([xs, ys], axis=1), marks, window)


def add_typical(config: Configuration, at, rng: RngSpec) -> tuple[Configuration, MarkedPoint]:
    """Insert a point at ``at`` with a fresh uniform mark; existing ids are kept."""
    at = Point2(float(at[0]), float(at[1]))
    if not config.window.contains(at, strict=True):
        raise ValueError("typical point must lie strictly inside the window")
    if len(config) and np.any(np.all(config.germs == np.array(at), axis=1)):
        raise CoincidentGermError("typical point coincides with an existing germ")
    mark = float(rng.generator().random())
    new = config.with_points([(at, mark)])
    return new, MarkedPoint(len(config), at, mark)


def translate(config: Configuration, v) -> Configuration:
    """Shift every germ (and the window) by ``v``; marks and ids unchanged."""
    v = np.asarray(v, dtype=float)
    return Configuration(config.germs + v, config.marks, config.window.translated(Point2(float(v[0]), float(v[1]))))
