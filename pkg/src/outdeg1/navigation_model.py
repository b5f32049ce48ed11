"""Cone navigation graph: every point links to the nearest germ inside its
open cone of half-angle epsilon around the mark direction."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import cone_angle
from .process import Configuration

CENSORED = -1


@dataclass
class NavigationSolution:
    target: np.ndarray
    dist: np.ndarray
    degenerate: list[set] = field(default_factory=list)

    @property
    def n(self) -> int:
        return len(self.target)

    def censored(self) -> np.ndarray:
        return self.target == CENSORED

    def is_degenerate(self) -> bool:
        return any(self.degenerate)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(NAVIGATION_CSV_HEADER)
        for i in range(self.n):
            deg = ";".join(str(t) for t in sorted(self.degenerate[i])) if self.degenerate else ""
            if self.target[i] == CENSORED:
                w.writerow([i, "censored", "", deg])
            else:
                w.writerow([i, int(self.target[i]), repr(float(self.dist[i])), deg])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "NavigationSolution":
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or rows[0] != NAVIGATION_CSV_HEADER:
            raise ValueError("not a navigation solution CSV")
        n = len(rows) - 1
        target = np.full(n, CENSORED, dtype=np.int64)
        dist = np.full(n, np.inf)
        deg: list[set] = [set() for _ in range(n)]
        for row in rows[1:]:
            i = int(row[0])
            if row[1] != "censored":
                target[i] = int(row[1])
                dist[i] = float(row[2])
            if row[3]:
                deg[i] = {int(t) for t in row[3].split(";")}
        return cls(target, dist, deg)


NAVIGATION_CSV_HEADER = ["id", "target_id", "dist", "degenerate"]


def _check_eps(epsilon: float) -> None:
    if not (0.0 < epsilon <= math.pi):
        raise ValueError("epsilon must lie in (0, pi]")


def _pick(i: int, cand: np.ndarray, germs, dirs, epsilon):
    """Nearest in-cone candidate of point i: (target, dist, tied ids)."""
    cand = cand[cand != i]
    if len(cand) == 0:
        return CENSORED, math.inf, ()
    inside = cone_angle(germs[i], dirs[i], germs[cand]) < epsilon
    cand = cand[inside]
    if len(cand) == 0:
        return CENSORED, math.inf, ()
    d = np.hypot(germs[cand, 0] - germs[i, 0], germs[cand, 1] - germs[i, 1])
    dmin = d.min()
    best = cand[d == dmin]
    t = int(best.min())
    return t, float(dmin), tuple(int(b) for b in best) if len(best) > 1 else ()


def solve_navigation_reference(config: Configuration, epsilon: float) -> NavigationSolution:
    """Linear scan over all germs for every point."""
    _check_eps(epsilon)
    n = len(config)
    germs, dirs = config.germs, config.directions
    target = np.full(n, CENSORED, dtype=np.int64)
    dist = np.full(n, np.inf)
    deg: list[set] = [set() for _ in range(n)]
    allidx = np.arange(n)
    for i in range(n):
        t, d, tied = _pick(i, allidx, germs, dirs, epsilon)
        target[i], dist[i] = t, d
        deg[i].update(tied)
    return NavigationSolution(target, dist, deg)


class UniformGrid:
    """Bucket index of germs on a square grid of side ``cell``."""

    def __init__(self, germs: np.ndarray, cell: float):
        self.germs = germs
        self.cell = cell
        self.origin = germs.min(axis=0) if len(germs) else np.zeros(2)
        ij = np.floor((germs - self.origin) / cell).astype(np.int64)
        self.shape = (ij.max(axis=0) + 1) if len(germs) else np.array([1, 1])
        self.ij = ij
        flat = ij[:, 0] * self.shape[1] + ij[:, 1]
        order = np.argsort(flat, kind="stable")
        self.order = order
        ncell = int(self.shape[0] * self.shape[1])
        self.starts = np.searchsorted(flat[order], np.arange(ncell + 1))

    def bucket(self, a: int, b: int) -> np.ndarray:
        k = a * self.shape[1] + b
        return self.order[self.starts[k] : self.starts[k + 1]]

    def ring(self, a0: int, b0: int, k: int) -> np.ndarray:
        """Germ ids in cells at Chebyshev index distance exactly k from (a0, b0)."""
        na, nb = int(self.shape[0]), int(self.shape[1])
        out = []
        if k == 0:
            return self.bucket(a0, b0)
        for a in range(max(a0 - k, 0), min(a0 + k, na - 1) + 1):
            if abs(a - a0) == k:
                for b in range(max(b0 - k, 0), min(b0 + k, nb - 1) + 1):
                    out.append(self.bucket(a, b))
            else:
                for b in (b0 - k, b0 + k):
                    if 0 <= b < nb:
                        out.append(self.bucket(a, b))
        return np.concatenate(out) if out else np.zeros(0, dtype=np.int64)

    def outside_square(self, a0: int, b0: int, k: int) -> np.ndarray:
        """Germ ids in cells at Chebyshev index distance > k."""
        far = np.maximum(np.abs(self.ij[:, 0] - a0), np.abs(self.ij[:, 1] - b0)) > k
        return np.flatnonzero(far)


# rings scanned cell by cell before falling back to one vectorised sweep
_MAX_RINGS = 6


def solve_navigation(config: Configuration, epsilon: float, cell: float | None = None) -> NavigationSolution:
    """Grid search expanding ring by ring around each germ.

    Ring k holds germs at distance >= (k - 1) * cell, so the search stops once
    that bound exceeds the best in-cone distance found. Points still open
    after a few rings (typically the censored ones near the window edge)
    get all remaining germs in a single sweep.
    """
    _check_eps(epsilon)
    n = len(config)
    germs, dirs = config.germs, config.directions
    target = np.full(n, CENSORED, dtype=np.int64)
    dist = np.full(n, np.inf)
    deg: list[set] = [set() for _ in range(n)]
    if n == 0:
        return NavigationSolution(target, dist, deg)
    if cell is None:
        cell = 1.0 / math.sqrt(n / config.window.area)
    grid = UniformGrid(germs, cell)
    kmax = int(max(grid.shape))
    for i in range(n):
        a0, b0 = int(grid.ij[i, 0]), int(grid.ij[i, 1])
        best_t, best_d, best_tied = CENSORED, math.inf, ()
        k = 0
        while k <= kmax and (k - 1) * cell <= best_d:
            if k > _MAX_RINGS:
                cand = grid.outside_square(a0, b0, k - 1)
                k = kmax + 1
            else:
                cand = grid.ring(a0, b0, k)
                k += 1
            if len(cand) == 0:
                continue
            t, d, tied = _pick(i, cand, germs, dirs, epsilon)
            if t == CENSORED:
                continue
            if d < best_d:
                best_t, best_d, best_tied = t, d, tied
            elif d == best_d:
                ids = set(best_tied or (best_t,)) | set(tied or (t,))
                best_t, best_tied = min(ids), tuple(sorted(ids))
        target[i], dist[i] = best_t, best_d
        deg[i].update(best_tied)
    return NavigationSolution(target, dist, deg)
