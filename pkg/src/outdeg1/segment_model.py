"""Line-segment stopping model.

Every germ grows a segment at unit speed in the direction of its mark; a
segment freezes as soon as its tip touches the body of another segment,
which keeps growing. Segment ``i`` stopped by ``j`` at distance ``a`` from
``i``'s germ, the contact point lying at distance ``b`` from ``j``'s germ,
requires ``b <= a`` (``j`` got there first) and ``b <= stop_len(j)``.

Two solvers compute the same object: :func:`solve_fixed_point` iterates the
defining equations to their fixed point, :func:`solve_event_driven` replays
the growth in time order. The second one is the production path.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .geometry import (
    PARALLEL_TOL,
    HexCell,
    Point2,
    Window,
    hex_distance,
    hex_locate_many,
    hexagon_vertices,
    point_segment_distance,
    ray_params,
)
from .process import Configuration

CENSORED = -1
# |a - b| below this (relative) marks a simultaneous arrival at a crossing
TIE_TOL = 1e-12


class SolverDegeneracy(RuntimeError):
    """The configuration sits on a measure-zero set the solvers do not resolve."""


@dataclass
class SegmentSolution:
    """Per-point outcome of the stopping dynamics.

    ``target[i] == CENSORED`` means nothing in the window ever stops ``i``;
    then ``stop_len[i]`` is ``inf`` and ``impact[i]`` is NaN.
    """

    target: np.ndarray
    stop_len: np.ndarray
    impact: np.ndarray
    degenerate: list[set] = field(default_factory=list)
    rounds: int = 0

    @property
    def n(self) -> int:
        return len(self.target)

    def censored(self) -> np.ndarray:
        return self.target == CENSORED

    def is_degenerate(self) -> bool:
        return any(self.degenerate)

    def segment_ends(self, germs: np.ndarray, directions: np.ndarray, ray_length: float) -> np.ndarray:
        """Far endpoints of the realized segments; censored rays are cut at ``ray_length``."""
        ends = np.array(self.impact, dtype=float, copy=True).reshape(-1, 2)
        cen = self.censored()
        ends[cen] = germs[cen] + ray_length * directions[cen]
        return ends

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(SEGMENT_CSV_HEADER)
        for i in range(self.n):
            deg = ";".join(f"{a}-{b}" for a, b in sorted(self.degenerate[i])) if self.degenerate else ""
            if self.target[i] == CENSORED:
                w.writerow([i, "censored", "", "", "", deg])
            else:
                w.writerow(
                    [i, int(self.target[i]), repr(float(self.impact[i, 0])), repr(float(self.impact[i, 1])),
                     repr(float(self.stop_len[i])), deg]
                )
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "SegmentSolution":
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or rows[0] != SEGMENT_CSV_HEADER:
            raise ValueError("not a segment solution CSV")
        body = rows[1:]
        n = len(body)
        target = np.full(n, CENSORED, dtype=np.int64)
        stop = np.full(n, np.inf)
        impact = np.full((n, 2), np.nan)
        deg: list[set] = [set() for _ in range(n)]
        for row in body:
            i = int(row[0])
            if row[1] != "censored":
                target[i] = int(row[1])
                impact[i] = float(row[2]), float(row[3])
                stop[i] = float(row[4])
            if row[5]:
                deg[i] = {tuple(int(v) for v in item.split("-")) for item in row[5].split(";")}
        return cls(target, stop, impact, deg)


SEGMENT_CSV_HEADER = ["id", "target_id", "impact_x", "impact_y", "stop_len", "degenerate"]


def _empty_solution() -> SegmentSolution:
    return SegmentSolution(np.zeros(0, dtype=np.int64), np.zeros(0), np.zeros((0, 2)), [])


def pair_events(germs: np.ndarray, dirs: np.ndarray, hit: np.ndarray, by: np.ndarray):
    """Candidate stopping events for hitter ``hit[k]`` against body ``by[k]``.

    Returns ``(a, b, ok)``: ``a`` is the travel of the hitter to the crossing,
    ``b`` the travel of the other ray, ``ok`` marks crossings ahead of both
    germs with ``b <= a``. Collinear overlapping rays raise.
    """
    a, b, par = ray_params(germs[hit], dirs[hit], germs[by], dirs[by])
    if np.any(par):
        k = np.flatnonzero(par)
        d = germs[by[k]] - germs[hit[k]]
        u = dirs[hit[k]]
        off = np.abs(d[:, 0] * u[:, 1] - d[:, 1] * u[:, 0])
        coll = off < PARALLEL_TOL * np.maximum(1.0, np.linalg.norm(d, axis=1))
        if np.any(coll):
            same = np.sum(u * dirs[by[k]], axis=1) > 0
            ahead = np.sum(d * u, axis=1) > 0
            if np.any(coll & (same | ahead)):
                raise SolverDegeneracy("collinear overlapping rays")
    with np.errstate(invalid="ignore"):
        ok = ~par & (a > 0.0) & (b >= 0.0) & (b <= a)
    return a, b, ok


def _tie_flag(a: float, b: float) -> bool:
    return abs(a - b) <= TIE_TOL * max(1.0, a)


# ---------------------------------------------------------------------------
# fixed-point oracle


def _fixed_point(germs: np.ndarray, dirs: np.ndarray, caps: np.ndarray | None = None):
    """Iterate s <- F(s) from s = inf, where
    F(s)_i = min(cap_i, min{a_ij : j admissible given s_j}).

    F is antitone, so even and odd iterates bracket the unique fixed point
    and meet after finitely many rounds.
    """
    n = len(germs)
    I, J = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    off = I != J
    A = np.full((n, n), np.inf)
    B = np.full((n, n), np.inf)
    if n > 1:
        a, b, ok = pair_events(germs, dirs, I[off], J[off])
        A[off] = np.where(ok, a, np.inf)
        B[off] = np.where(ok, b, np.inf)
    valid = np.isfinite(A)
    cap = np.full(n, np.inf) if caps is None else np.asarray(caps, dtype=float)
    s = np.full(n, np.inf)
    max_rounds = 2 * n + 3
    for rnd in range(1, max_rounds + 1):
        adm = valid & (B <= s[None, :])
        Am = np.where(adm, A, np.inf)
        j = np.argmin(Am, axis=1) if n else np.zeros(0, dtype=np.int64)
        best = Am[np.arange(n), j] if n else np.zeros(0)
        new = np.minimum(best, cap)
        if np.array_equal(new, s):
            break
        s = new
    else:
        raise SolverDegeneracy(f"fixed-point iteration did not settle after {max_rounds} rounds")
    stopped = np.isfinite(best) & (best < cap) if caps is not None else np.isfinite(best)
    target = np.where(stopped, j, CENSORED).astype(np.int64)
    deg: list[set] = [set() for _ in range(n)]
    for i in np.flatnonzero(stopped):
        tied = np.flatnonzero(Am[i] == best[i])
        if len(tied) > 1:
            deg[i].update((int(i), int(t)) for t in tied)
        if _tie_flag(A[i, j[i]], B[i, j[i]]):
            deg[i].add((int(min(i, j[i])), int(max(i, j[i]))))
    return target, s, stopped, deg, rnd


def solve_fixed_point(config: Configuration) -> SegmentSolution:
    """Reference solver: Jacobi relaxation of the stopping equations."""
    n = len(config)
    if n == 0:
        return _empty_solution()
    germs, dirs = config.germs, config.directions
    target, s, stopped, deg, rounds = _fixed_point(germs, dirs)
    stop = np.where(stopped, s, np.inf)
    impact = np.full((n, 2), np.nan)
    impact[stopped] = germs[stopped] + stop[stopped, None] * dirs[stopped]
    return SegmentSolution(target, stop, impact, deg, rounds)


# ---------------------------------------------------------------------------
# event-driven solver


def solve_event_driven(config: Configuration) -> SegmentSolution:
    """Replay the growth in time order.

    A pair (i, j) cannot produce an event before ``|xi_i - xi_j| / 2``, so
    candidate pairs are generated in stages: at horizon ``T`` only germ pairs
    at distance ``<= 2T`` whose hitter is still growing are examined, then
    the horizon doubles. Events are processed in increasing time with ties
    broken by (hitter id, target id).
    """
    n = len(config)
    if n == 0:
        return _empty_solution()
    germs, dirs = config.germs, config.directions
    stopped = np.zeros(n, dtype=bool)
    s = np.full(n, np.inf)
    target = np.full(n, CENSORED, dtype=np.int64)
    deg: list[set] = [set() for _ in range(n)]
    if n == 1:
        return SegmentSolution(target, s, np.full((1, 2), np.nan), deg)

    tree = cKDTree(germs)
    extent = float(np.linalg.norm(germs.max(axis=0) - germs.min(axis=0)))
    area = max(config.window.area, 1e-300)
    horizon = 1.0 / math.sqrt(len(germs) / area)
    prev_radius = -1.0
    pend_a = np.zeros(0)
    pend_b = np.zeros(0)
    pend_i = np.zeros(0, dtype=np.int64)
    pend_j = np.zeros(0, dtype=np.int64)
    stage = 0
    while True:
        stage += 1
        final = 2.0 * horizon >= extent
        radius = 2.0 * horizon
        hitters = np.flatnonzero(~stopped)
        if len(hitters):
            if final:
                I = np.repeat(hitters, n)
                J = np.tile(np.arange(n), len(hitters))
            else:
                lists = tree.query_ball_point(germs[hitters], r=radius, return_sorted=False)
                lens = np.fromiter((len(x) for x in lists), dtype=np.int64, count=len(lists))
                I = np.repeat(hitters, lens)
                J = np.fromiter((j for x in lists for j in x), dtype=np.int64, count=int(lens.sum()))
            keep = I != J
            I, J = I[keep], J[keep]
            if prev_radius >= 0.0 and len(I):
                d = germs[J] - germs[I]
                far = np.hypot(d[:, 0], d[:, 1]) > prev_radius
                I, J = I[far], J[far]
            if len(I):
                a, b, ok = pair_events(germs, dirs, I, J)
                pend_a = np.concatenate([pend_a, a[ok]])
                pend_b = np.concatenate([pend_b, b[ok]])
                pend_i = np.concatenate([pend_i, I[ok]])
                pend_j = np.concatenate([pend_j, J[ok]])

        live = ~stopped[pend_i]
        pend_a, pend_b, pend_i, pend_j = pend_a[live], pend_b[live], pend_i[live], pend_j[live]
        order = np.lexsort((pend_j, pend_i, pend_a))
        pend_a, pend_b, pend_i, pend_j = pend_a[order], pend_b[order], pend_i[order], pend_j[order]
        cut = len(pend_a) if final else int(np.searchsorted(pend_a, horizon, side="right"))
        _process(pend_a[:cut].tolist(), pend_b[:cut].tolist(), pend_i[:cut].tolist(), pend_j[:cut].tolist(),
                 stopped, s, target, deg)
        pend_a, pend_b, pend_i, pend_j = pend_a[cut:], pend_b[cut:], pend_i[cut:], pend_j[cut:]
        if final:
            break
        prev_radius = radius
        horizon *= 2.0

    impact = np.full((n, 2), np.nan)
    impact[stopped] = germs[stopped] + s[stopped, None] * dirs[stopped]
    return SegmentSolution(target, s, impact, deg, stage)


def _process(A, B, I, J, stopped, s, target, deg) -> None:
    m = len(A)
    for k in range(m):
        i = I[k]
        if stopped[i]:
            continue
        j = J[k]
        b = B[k]
        if stopped[j] and s[j] < b:
            continue
        a = A[k]
        stopped[i] = True
        s[i] = a
        target[i] = j
        if _tie_flag(a, b):
            deg[i].add((min(i, j), max(i, j)))
        q = k + 1
        while q < m and A[q] == a and I[q] == i:
            jq = J[q]
            if not (stopped[jq] and s[jq] < B[q]):
                deg[i].update({(i, j), (i, jq)})
            q += 1


# ---------------------------------------------------------------------------
# locally determined partial segments


class Region:
    """Bounded region Lambda used by :func:`partial_solve`."""

    def contains(self, pts: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def ball_inside(self, centers: np.ndarray, radii: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    @property
    def diameter(self) -> float:
        raise NotImplementedError


@dataclass(frozen=True)
class DiskRegion(Region):
    center: Point2
    radius: float

    def contains(self, pts):
        pts = np.atleast_2d(pts)
        return np.hypot(pts[:, 0] - self.center[0], pts[:, 1] - self.center[1]) <= self.radius

    def ball_inside(self, centers, radii):
        d = np.hypot(centers[:, 0] - self.center[0], centers[:, 1] - self.center[1])
        return d + radii <= self.radius

    @property
    def diameter(self):
        return 2.0 * self.radius


@dataclass(frozen=True)
class RectRegion(Region):
    window: Window

    def contains(self, pts):
        w = self.window
        pts = np.atleast_2d(pts)
        return (pts[:, 0] >= w.lo.x) & (pts[:, 0] <= w.hi.x) & (pts[:, 1] >= w.lo.y) & (pts[:, 1] <= w.hi.y)

    def ball_inside(self, centers, radii):
        w = self.window
        return (
            (centers[:, 0] - radii >= w.lo.x)
            & (centers[:, 0] + radii <= w.hi.x)
            & (centers[:, 1] - radii >= w.lo.y)
            & (centers[:, 1] + radii <= w.hi.y)
        )

    @property
    def diameter(self):
        return self.window.diameter


class HexUnionRegion(Region):
    """Union of lattice hexagons H(c) + offset for the given cells."""

    def __init__(self, cells, offset=(0.0, 0.0)):
        self.cells = frozenset(HexCell(*c) for c in cells)
        if not self.cells:
            raise ValueError("empty hexagon union")
        self.offset = np.asarray(offset, dtype=float)
        starts, ends = [], []
        nbr_dirs = [(1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1)]  # normals at 30, 90, ..., 330 deg
        for c in self.cells:
            verts = hexagon_vertices(np.array(c.center) + self.offset)
            for k, (da, db) in enumerate(nbr_dirs):
                if HexCell(c.a + da, c.b + db) not in self.cells:
                    starts.append(verts[k])
                    ends.append(verts[(k + 1) % 6])
        self._starts = np.array(starts)
        self._ends = np.array(ends)
        allv = np.vstack([hexagon_vertices(np.array(c.center) + self.offset) for c in self.cells])
        self._diam = float(np.linalg.norm(allv.max(axis=0) - allv.min(axis=0)))

    @classmethod
    def hexagon(cls, center=(0.0, 0.0)) -> "HexUnionRegion":
        """The single hexagon H(0) + center."""
        return cls([HexCell(0, 0)], offset=center)

    def contains(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        if len(pts) == 0:
            return np.zeros(0, dtype=bool)
        cells = hex_locate_many(pts - self.offset)
        inside = np.array([HexCell(int(a), int(b)) in self.cells for a, b in cells])
        # points on the outer boundary may locate to an excluded neighbour
        dist = point_segment_distance(pts[:, None, :], self._starts[None], self._ends[None]).min(axis=1)
        return inside | (dist <= 1e-12)

    def ball_inside(self, centers, radii):
        centers = np.atleast_2d(centers)
        cells = hex_locate_many(centers - self.offset)
        inside = np.array([HexCell(int(a), int(b)) in self.cells for a, b in cells])
        dist = point_segment_distance(centers[:, None, :], self._starts[None], self._ends[None]).min(axis=1)
        return inside & (dist >= radii)

    @property
    def diameter(self):
        return self._diam


@dataclass
class PartialSegments:
    """What the configuration inside ``region`` alone says about each segment.

    ``ids`` are the original ids of the points inside the region. For a
    decided point the frontier is its true impact; otherwise it is the far
    end of the longest segment the region certifies.
    """

    region: Region
    ids: np.ndarray
    germs: np.ndarray
    frontier: np.ndarray
    decided: np.ndarray
    reach: np.ndarray  # r(x, Lambda)
    target: np.ndarray  # original ids; CENSORED when undecided

    def segments(self) -> tuple[np.ndarray, np.ndarray]:
        return self.germs, self.frontier


def decision_radius(region: Region, germs: np.ndarray, dirs: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """r(x, Lambda) = sup{r >= 0 : B(xi + r u, r) in Lambda}, by bisection.

    The balls are nested in r, so the predicate is monotone.
    """
    m = len(germs)
    lo = np.zeros(m)
    hi = np.full(m, region.diameter)
    if m == 0:
        return lo
    while np.any(hi - lo > tol):
        mid = 0.5 * (lo + hi)
        ok = region.ball_inside(germs + mid[:, None] * dirs, mid)
        lo = np.where(ok, mid, lo)
        hi = np.where(ok, hi, mid)
    return lo


def partial_solve(config: Configuration, region: Region) -> PartialSegments:
    """Capped relaxation over the points of ``region``.

    Each segment grows no further than its decision radius; a point is
    decided when the capped dynamics stops it strictly before that radius.
    """
    mask = region.contains(config.germs) if len(config) else np.zeros(0, dtype=bool)
    ids = np.flatnonzero(mask)
    germs = config.germs[ids]
    dirs = config.directions[ids]
    m = len(ids)
    if m == 0:
        z = np.zeros((0, 2))
        return PartialSegments(region, ids, z, z, np.zeros(0, dtype=bool), np.zeros(0), np.zeros(0, dtype=np.int64))
    reach = decision_radius(region, germs, dirs)
    target, s, stopped, _deg, _ = _fixed_point(germs, dirs, caps=reach)
    frontier = germs + s[:, None] * dirs
    tgt = np.where(stopped, ids[np.maximum(target, 0)], CENSORED)
    return PartialSegments(region, ids, germs, frontier, stopped, reach, tgt)
