"""Planar primitives: points, directions, rays, cones, segment clipping and the
triangular-lattice hexagon tessellation.

Scalar helpers operate on small value types; the ``*_many`` / array helpers
are the ones the solvers use, so that every solver compares bit-identical
floating point numbers for the same pair of rays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np

TWO_PI = 2.0 * math.pi
SQRT3 = math.sqrt(3.0)

# |cross(u1, u2)| below this (unit directions) counts as parallel.
PARALLEL_TOL = 1e-12


class DegenerateGeometry(ValueError):
    """Raised for measure-zero configurations the primitives refuse to resolve."""


class Point2(NamedTuple):
    x: float
    y: float

    def __add__(self, other):  # type: ignore[override]
        return Point2(self.x + other[0], self.y + other[1])

    def __sub__(self, other):
        return Point2(self.x - other[0], self.y - other[1])

    def scale(self, k: float) -> "Point2":
        return Point2(self.x * k, self.y * k)

    def norm(self) -> float:
        return math.hypot(self.x, self.y)


@dataclass(frozen=True)
class Direction:
    """A direction encoded as a mark in turns: angle = 2*pi*u."""

    u: float

    def __post_init__(self):
        if not (0.0 <= self.u < 1.0):
            raise ValueError(f"direction mark must lie in [0, 1), got {self.u!r}")

    @classmethod
    def from_angle(cls, angle: float) -> "Direction":
        return cls((angle / TWO_PI) % 1.0)

    @property
    def angle(self) -> float:
        return TWO_PI * self.u

    @property
    def vector(self) -> Point2:
        a = self.angle
        return Point2(math.cos(a), math.sin(a))


@dataclass(frozen=True)
class Ray:
    origin: Point2
    dir: Direction


class RayHit(NamedTuple):
    p: Point2
    a: float  # distance along the first ray
    b: float  # distance along the second ray


@dataclass(frozen=True)
class Window:
    """Axis-aligned rectangle [lo.x, hi.x] x [lo.y, hi.y]."""

    lo: Point2
    hi: Point2

    def __post_init__(self):
        vals = (self.lo[0], self.lo[1], self.hi[0], self.hi[1])
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("window corners must be finite")
        if not (self.lo[0] < self.hi[0] and self.lo[1] < self.hi[1]):
            raise ValueError(f"degenerate window {self.lo} .. {self.hi}")
        object.__setattr__(self, "lo", Point2(float(self.lo[0]), float(self.lo[1])))
        object.__setattr__(self, "hi", Point2(float(self.hi[0]), float(self.hi[1])))

    @classmethod
    def square(cls, side: float, lo: float = 0.0) -> "Window":
        return cls(Point2(lo, lo), Point2(lo + side, lo + side))

    @property
    def width(self) -> float:
        return self.hi.x - self.lo.x

    @property
    def height(self) -> float:
        return self.hi.y - self.lo.y

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def center(self) -> Point2:
        return Point2(0.5 * (self.lo.x + self.hi.x), 0.5 * (self.lo.y + self.hi.y))

    @property
    def diameter(self) -> float:
        return math.hypot(self.width, self.height)

    def contains(self, p, strict: bool = False) -> bool:
        if strict:
            return self.lo.x < p[0] < self.hi.x and self.lo.y < p[1] < self.hi.y
        return self.lo.x <= p[0] <= self.hi.x and self.lo.y <= p[1] <= self.hi.y

    def shrink(self, margin: float) -> "Window | None":
        """The window with ``margin`` removed on every side, or None if empty."""
        lo = Point2(self.lo.x + margin, self.lo.y + margin)
        hi = Point2(self.hi.x - margin, self.hi.y - margin)
        if lo.x >= hi.x or lo.y >= hi.y:
            return None
        return Window(lo, hi)

    def translated(self, v) -> "Window":
        return Window(self.lo + v, self.hi + v)


# ---------------------------------------------------------------------------
# rays and cones


def unit_vectors(marks) -> np.ndarray:
    """(n, 2) array of unit vectors for marks given in turns."""
    ang = TWO_PI * np.asarray(marks, dtype=float)
    return np.stack([np.cos(ang), np.sin(ang)], axis=-1)


def ray_params(o1, u1, o2, u2):
    """Intersection parameters of the lines o1 + a*u1 and o2 + b*u2.

    Broadcasts over leading dimensions. Returns ``(a, b, parallel)`` where
    ``a``/``b`` are NaN wherever ``parallel`` is set. Directions must be unit.
    """
    o1 = np.asarray(o1, dtype=float)
    o2 = np.asarray(o2, dtype=float)
    u1 = np.asarray(u1, dtype=float)
    u2 = np.asarray(u2, dtype=float)
    dx = o2[..., 0] - o1[..., 0]
    dy = o2[..., 1] - o1[..., 1]
    c = u1[..., 0] * u2[..., 1] - u1[..., 1] * u2[..., 0]
    parallel = np.abs(c) < PARALLEL_TOL
    with np.errstate(divide="ignore", invalid="ignore"):
        safe = np.where(parallel, 1.0, c)
        a = (dx * u2[..., 1] - dy * u2[..., 0]) / safe
        b = (dx * u1[..., 1] - dy * u1[..., 0]) / safe
    a = np.where(parallel, np.nan, a)
    b = np.where(parallel, np.nan, b)
    return a, b, parallel


def ray_intersection(r1: Ray, r2: Ray) -> RayHit | None:
    """Crossing point of two rays, or None when they do not meet ahead of both
    origins. Collinear rays that overlap raise :class:`DegenerateGeometry`."""
    if tuple(r1.origin) == tuple(r2.origin):
        raise ValueError("rays must have distinct origins")
    u1 = np.array(r1.dir.vector)
    u2 = np.array(r2.dir.vector)
    a, b, par = ray_params(np.array(r1.origin), u1, np.array(r2.origin), u2)
    if par:
        d = np.array(r2.origin, dtype=float) - np.array(r1.origin, dtype=float)
        off = abs(d[0] * u1[1] - d[1] * u1[0])
        if off < PARALLEL_TOL * max(1.0, float(np.hypot(*d))):
            same_way = float(u1 @ u2) > 0
            ahead = float(d @ u1) > 0
            if same_way or ahead:
                raise DegenerateGeometry("collinear overlapping rays")
        return None
    a = float(a)
    b = float(b)
    if a < 0.0 or b < 0.0:
        return None
    p = Point2(r1.origin.x + a * float(u1[0]), r1.origin.y + a * float(u1[1]))
    return RayHit(p, a, b)


def cone_angle(apex, direction, q) -> np.ndarray:
    """Absolute angle between ``q - apex`` and the unit vector ``direction``."""
    apex = np.asarray(apex, dtype=float)
    direction = np.asarray(direction, dtype=float)
    q = np.asarray(q, dtype=float)
    dx = q[..., 0] - apex[..., 0]
    dy = q[..., 1] - apex[..., 1]
    cr = direction[..., 0] * dy - direction[..., 1] * dx
    dt = direction[..., 0] * dx + direction[..., 1] * dy
    return np.abs(np.arctan2(cr, dt))


def point_in_cone(apex, dir: Direction, half_angle: float, q) -> bool:
    """Strict membership of ``q`` in the open cone of the given half-angle."""
    if not (0.0 < half_angle <= math.pi):
        raise ValueError("half_angle must lie in (0, pi]")
    if tuple(q) == tuple(apex):
        raise ValueError("query point coincides with the apex")
    return bool(cone_angle(apex, np.array(dir.vector), q) < half_angle)


# ---------------------------------------------------------------------------
# segments


def point_segment_distance(p, a, b) -> np.ndarray:
    """Distance from points ``p`` to closed segments [a, b] (broadcasting)."""
    p = np.asarray(p, dtype=float)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    ab = b - a
    ap = p - a
    den = np.sum(ab * ab, axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(den > 0, np.sum(ap * ab, axis=-1) / np.where(den > 0, den, 1.0), 0.0)
    t = np.clip(t, 0.0, 1.0)
    closest = a + t[..., None] * ab
    return np.linalg.norm(p - closest, axis=-1)


def point_ray_distance(p, o, u) -> np.ndarray:
    """Distance from points ``p`` to rays o + t*u, t >= 0 (u unit)."""
    p = np.asarray(p, dtype=float)
    o = np.asarray(o, dtype=float)
    u = np.asarray(u, dtype=float)
    op = p - o
    t = np.maximum(np.sum(op * u, axis=-1), 0.0)
    return np.linalg.norm(op - t[..., None] * u, axis=-1)


def segments_cross_params(p1, q1, p2, q2):
    """Parameters (t, s) of the crossing of the supporting lines of [p1, q1]
    and [p2, q2], as fractions of each segment. NaN where parallel."""
    p1 = np.asarray(p1, dtype=float)
    q1 = np.asarray(q1, dtype=float)
    p2 = np.asarray(p2, dtype=float)
    q2 = np.asarray(q2, dtype=float)
    d1 = q1 - p1
    d2 = q2 - p2
    c = d1[..., 0] * d2[..., 1] - d1[..., 1] * d2[..., 0]
    w = p2 - p1
    scale = np.linalg.norm(d1, axis=-1) * np.linalg.norm(d2, axis=-1)
    parallel = np.abs(c) <= PARALLEL_TOL * np.maximum(scale, 1e-300)
    with np.errstate(divide="ignore", invalid="ignore"):
        safe = np.where(parallel, 1.0, c)
        t = (w[..., 0] * d2[..., 1] - w[..., 1] * d2[..., 0]) / safe
        s = (w[..., 0] * d1[..., 1] - w[..., 1] * d1[..., 0]) / safe
    return np.where(parallel, np.nan, t), np.where(parallel, np.nan, s)


def clip_segments_convex(p, q, normals: np.ndarray, offsets: np.ndarray):
    """Liang-Barsky clip of segments p + t*(q - p), t in [0, 1], against the
    convex polygon {x : normals @ x <= offsets}.

    Returns ``(t0, t1)``; the clipped part is empty where ``t0 > t1``.
    """
    p = np.atleast_2d(np.asarray(p, dtype=float))
    q = np.atleast_2d(np.asarray(q, dtype=float))
    d = q - p
    t0 = np.zeros(len(p))
    t1 = np.ones(len(p))
    for nrm, off in zip(normals, offsets):
        num = off - p @ nrm
        den = d @ nrm
        with np.errstate(divide="ignore", invalid="ignore"):
            t = num / den
        # den == 0: inside iff num >= 0
        outside = (den == 0) & (num < 0)
        t0 = np.where(den < 0, np.maximum(t0, t), t0)
        t1 = np.where(den > 0, np.minimum(t1, t), t1)
        t1 = np.where(outside, -1.0, t1)
    return t0, t1


# ---------------------------------------------------------------------------
# hexagonal tessellation

# lattice basis: i = sqrt3 * (cos pi/6, sin pi/6) = (3/2, sqrt3/2), j = (0, sqrt3)
LATTICE_I = (1.5, SQRT3 / 2.0)
LATTICE_J = (0.0, SQRT3)
HEX_NEIGHBOURS = ((1, 0), (-1, 0), (0, 1), (0, -1), (1, -1), (-1, 1))
HEX_APOTHEM = SQRT3 / 2.0
# outward edge normals of H(0); each edge is the bisector towards a neighbour
HEX_NORMALS = np.array(
    [(math.cos(math.pi / 6 + k * math.pi / 3), math.sin(math.pi / 6 + k * math.pi / 3)) for k in range(6)]
)


class HexCell(NamedTuple):
    a: int
    b: int

    @property
    def center(self) -> Point2:
        return Point2(self.a * LATTICE_I[0] + self.b * LATTICE_J[0], self.a * LATTICE_I[1] + self.b * LATTICE_J[1])


def hex_distance(a, b=None) -> np.ndarray | int:
    """Lattice graph distance from cell (0, 0); with two cells, between them."""
    if b is not None:
        a = (a[0] - b[0], a[1] - b[1])
        return int(max(abs(a[0]), abs(a[1]), abs(a[0] + a[1])))
    arr = np.asarray(a)
    return np.maximum(np.maximum(np.abs(arr[..., 0]), np.abs(arr[..., 1])), np.abs(arr[..., 0] + arr[..., 1]))


def hex_locate_many(points) -> np.ndarray:
    """Nearest lattice cell (a, b) of every point; ties go to the lexicographically
    smallest (a, b). Returns an (n, 2) integer array."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    fa = pts[:, 0] / LATTICE_I[0]
    fb = (pts[:, 1] - fa * LATTICE_I[1]) / LATTICE_J[1]
    base_a = np.floor(fa).astype(np.int64)
    base_b = np.floor(fb).astype(np.int64)
    offs = np.array([(da, db) for da in (-1, 0, 1, 2) for db in (-1, 0, 1, 2)])  # lexicographic
    ca = base_a[:, None] + offs[None, :, 0]
    cb = base_b[:, None] + offs[None, :, 1]
    cx = ca * LATTICE_I[0] + cb * LATTICE_J[0]
    cy = ca * LATTICE_I[1] + cb * LATTICE_J[1]
    d2 = (pts[:, 0:1] - cx) ** 2 + (pts[:, 1:2] - cy) ** 2
    dmin = d2.min(axis=1, keepdims=True)
    near = d2 <= dmin + 1e-12 * np.maximum(1.0, dmin)
    k = np.argmax(near, axis=1)
    rows = np.arange(len(pts))
    return np.stack([ca[rows, k], cb[rows, k]], axis=1)


def hex_locate(p) -> HexCell:
    a, b = hex_locate_many([p])[0]
    return HexCell(int(a), int(b))


def hex_complex(z: HexCell, n: int) -> set[HexCell]:
    """All cells within lattice distance n of z."""
    if n < 0:
        raise ValueError("n must be non-negative")
    out = set()
    for da in range(-n, n + 1):
        for db in range(max(-n, -n - da), min(n, n - da) + 1):
            out.add(HexCell(z.a + da, z.b + db))
    return out


def hex_ring(z: HexCell, n: int) -> set[HexCell]:
    """Cells at lattice distance exactly n from z (the ring C_n)."""
    if n == 0:
        return {z}
    return hex_complex(z, n) - hex_complex(z, n - 1)


def hexagon_vertices(center=(0.0, 0.0), scale: float = 1.0) -> np.ndarray:
    """Vertices (counter-clockwise) of center + scale * H(0)."""
    ang = np.arange(6) * (math.pi / 3)
    return np.stack([center[0] + scale * np.cos(ang), center[1] + scale * np.sin(ang)], axis=1)


def hexagon_halfplanes(center=(0.0, 0.0), scale: float = 1.0):
    """(normals, offsets) with center + scale*H(0) = {x : normals @ x <= offsets}."""
    c = np.asarray(center, dtype=float)
    return HEX_NORMALS, HEX_NORMALS @ c + scale * HEX_APOTHEM


def in_hexagon(points, center=(0.0, 0.0), scale: float = 1.0, slack: float = 0.0) -> np.ndarray:
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    normals, offsets = hexagon_halfplanes(center, scale)
    return np.all(pts @ normals.T <= offsets + slack, axis=1)


def in_hex_complex(points, eta, n: int) -> np.ndarray:
    """Membership of points in H^n(eta) = H^n(0) + eta."""
    pts = np.atleast_2d(np.asarray(points, dtype=float)) - np.asarray(eta, dtype=float)
    if len(pts) == 0:
        return np.zeros(0, dtype=bool)
    return hex_distance(hex_locate_many(pts)) <= n


def segments_meet_hex_complex(p, q, eta, n: int, slack: float = 0.0) -> np.ndarray:
    """Whether each closed segment [p, q] meets H^n(eta)."""
    p = np.atleast_2d(np.asarray(p, dtype=float))
    q = np.atleast_2d(np.asarray(q, dtype=float))
    hit = np.zeros(len(p), dtype=bool)
    eta = np.asarray(eta, dtype=float)
    for cell in hex_complex(HexCell(0, 0), n):
        normals, offsets = hexagon_halfplanes(eta + np.array(cell.center), 1.0)
        t0, t1 = clip_segments_convex(p, q, normals, offsets + slack)
        hit |= t0 <= t1
    return hit


def cells_centers(cells: Iterable[HexCell]) -> np.ndarray:
    return np.array([c.center for c in cells], dtype=float).reshape(-1, 2)
