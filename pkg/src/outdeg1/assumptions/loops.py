"""Loop-break witnesses and their verification by re-solving.

A witness is a small set of extra points that, added near an anchor x,
turns x's forward orbit into a loop through the added points while leaving
every other point's out-edge alone (or redirecting it into x's new loop).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..geometry import TWO_PI, Point2, Window, point_ray_distance, point_segment_distance
from ..graph import CENSORED, OutdegreeGraph, backward, clusters, forward
from ..models import Model, NavigationModel, SegmentModel
from ..navigation_model import NavigationSolution
from ..process import Configuration, MarkedPoint, RngSpec
from ..segment_model import SegmentSolution, SolverDegeneracy


class LoopBreakError(ValueError):
    """No witness exists for this anchor; ``degenerate`` marks float coincidences."""

    def __init__(self, msg: str, degenerate: bool = False):
        super().__init__(msg)
        self.degenerate = degenerate


@dataclass(frozen=True)
class LoopBreakWitness:
    anchor: int
    added: tuple[MarkedPoint, ...]
    ball_center: tuple[tuple[float, float, float], ...]  # (x, y, mark) per added point
    ball_radius: float
    center: Point2  # w for the triangle, the new germ for navigation
    scale: float  # r' (segment) or distance to the new germ (navigation)

    @property
    def k(self) -> int:
        return len(self.added)

    def pairs(self) -> list[tuple[Point2, float]]:
        return [(p.germ, p.mark) for p in self.added]


def _window_with(config: Configuration, pts: np.ndarray) -> Window:
    w = config.window
    if len(pts) == 0:
        return w
    lo = np.minimum([w.lo.x, w.lo.y], pts.min(axis=0))
    hi = np.maximum([w.hi.x, w.hi.y], pts.max(axis=0))
    return Window(Point2(float(lo[0]), float(lo[1])), Point2(float(hi[0]), float(hi[1])))


def extend(config: Configuration, added: Sequence) -> Configuration:
    """``config`` plus the added (germ, mark) pairs, growing the window if needed."""
    pairs = [(p.germ, p.mark) if isinstance(p, MarkedPoint) else (Point2(*p[0]), float(p[1])) for p in added]
    pts = np.array([g for g, _ in pairs], dtype=float).reshape(-1, 2)
    return config.with_points(pairs, window=_window_with(config, pts))


# ---------------------------------------------------------------------------
# constructions


def _triangle(w: np.ndarray, rho: float, psi: float) -> list[tuple[Point2, float]]:
    """Three germs whose segments close an equilateral triangle of
    circumradius rho around w: segment k runs along the side V_k -> V_{k+1}
    and stops on segment k+1, which passes through V_{k+1} earlier."""
    verts = [w + rho * np.array([math.cos(psi + TWO_PI * k / 3), math.sin(psi + TWO_PI * k / 3)]) for k in range(3)]
    delta = rho / 2.0
    out = []
    for k in range(3):
        d = verts[(k + 1) % 3] - verts[k]
        d = d / np.linalg.norm(d)
        g = verts[k] - delta * d
        mark = (math.atan2(d[1], d[0]) / TWO_PI) % 1.0
        out.append((Point2(float(g[0]), float(g[1])), 0.0 if mark >= 1.0 else mark))
    return out


def construct_segment_loop_break(config: Configuration, solution: SegmentSolution, x: int) -> LoopBreakWitness:
    n = len(config)
    if solution.target[x] == CENSORED:
        raise LoopBreakError(f"point {x} is censored")
    germs, dirs = config.germs, config.directions
    xi, u = germs[x], dirs[x]
    s_x = float(solution.stop_len[x])
    h = solution.impact[x]
    if not s_x > 0:
        raise LoopBreakError("zero-length segment", degenerate=True)

    # empty stretch of x's segment just before its impact point
    back_inv = np.flatnonzero(solution.target == x)
    r = s_x / 2.0
    if len(back_inv):
        along = (solution.impact[back_inv] - xi) @ u
        gap = float((s_x - along).min())
        if gap <= 1e-12 * max(1.0, s_x):
            raise LoopBreakError("impact of a stopped point sits on the tip", degenerate=True)
        r = min(r, 0.5 * gap)
    w = h - 0.5 * r * u

    # ball around w clear of every other realized segment
    others = np.array([y for y in range(n) if y != x], dtype=np.int64)
    d_min = math.inf
    if len(others):
        cens = solution.target[others] == CENSORED
        d = np.empty(len(others))
        if np.any(~cens):
            o = others[~cens]
            d[~cens] = point_segment_distance(w, germs[o], solution.impact[o])
        if np.any(cens):
            o = others[cens]
            d[cens] = point_ray_distance(w, germs[o], dirs[o])
        d_min = float(d.min())
    r2 = min(0.5 * d_min, 0.5 * r, float(np.linalg.norm(xi - w)) / 3.0)
    if not r2 > 1e-12 * max(1.0, s_x):
        raise LoopBreakError("no room around the tip", degenerate=True)

    rho = r2 / 2.0
    psi = math.atan2(u[1], u[0]) + 0.3
    tri = _triangle(w, rho, psi)
    added = tuple(MarkedPoint(n + k, g, m) for k, (g, m) in enumerate(tri))
    # keeps the three crossings on the germ side of each stop with slack
    radius = min(0.05 * rho, 0.005)
    return LoopBreakWitness(
        anchor=x,
        added=added,
        ball_center=tuple((p.germ.x, p.germ.y, p.mark) for p in added),
        ball_radius=radius,
        center=Point2(float(w[0]), float(w[1])),
        scale=r2,
    )


def construct_navigation_loop_break(
    config: Configuration, solution: NavigationSolution, x: int, epsilon: float
) -> LoopBreakWitness:
    """One point on x's cone axis, nearer to x than any germ, looking back at x."""
    n = len(config)
    xi = config.germs[x]
    u = config.directions[x]
    others = np.delete(config.germs, x, axis=0)
    d_x = float(np.hypot(*(others - xi).T).min()) if len(others) else math.inf
    d_t = float(solution.dist[x]) if solution.target[x] != CENSORED else math.inf
    rho = 0.45 * min(d_x, d_t)
    if not math.isfinite(rho):
        rho = 1.0
    if not rho > 0:
        raise LoopBreakError("coincident germs", degenerate=True)
    eta = xi + rho * u
    mark = (float(config.marks[x]) + 0.5) % 1.0
    y = MarkedPoint(n, Point2(float(eta[0]), float(eta[1])), mark)
    radius = min(0.1 * rho, rho * epsilon / 4.0, epsilon / (8.0 * math.pi))
    return LoopBreakWitness(
        anchor=x,
        added=(y,),
        ball_center=((y.germ.x, y.germ.y, y.mark),),
        ball_radius=radius,
        center=y.germ,
        scale=rho,
    )


def construct_loop_break(model: Model, config: Configuration, solution, x: int) -> LoopBreakWitness:
    if isinstance(model, SegmentModel):
        return construct_segment_loop_break(config, solution, x)
    return construct_navigation_loop_break(config, solution, x, model.epsilon)


# ---------------------------------------------------------------------------
# verification


@dataclass(frozen=True)
class LoopingReport:
    anchor: int
    cond_i: bool
    cond_ii: bool
    cond_iii: bool
    backward_preserved: bool
    backward_inclusion: bool  # Back(x) before is a subset of Back(x) after
    degenerate: bool
    back_before: int
    back_after: int

    @property
    def passed(self) -> bool:
        return self.cond_i and self.cond_ii and self.cond_iii and self.backward_preserved

    def as_dict(self) -> dict:
        return {
            "anchor": self.anchor,
            "cond_i": self.cond_i,
            "cond_ii": self.cond_ii,
            "cond_iii": self.cond_iii,
            "backward_preserved": self.backward_preserved,
            "backward_inclusion": self.backward_inclusion,
            "degenerate": self.degenerate,
            "back_before": self.back_before,
            "back_after": self.back_after,
        }


def _forward_set(g: OutdegreeGraph, v: int) -> set[int] | None:
    f = forward(g, v)
    return None if f.censored else set(f.path)


def verify_k_looping(config: Configuration, x: int, added: Sequence, model: Model, before=None) -> LoopingReport:
    """Re-solve with and without ``added`` and check the loop conditions at x.

    ``before`` may carry an existing solution of ``config`` to skip one solve.
    """
    n = len(config)
    sol0 = model.solve(config) if before is None else before
    new = extend(config, added)
    sol1 = model.solve(new)
    g0 = OutdegreeGraph(sol0.target)
    g1 = OutdegreeGraph(sol1.target)
    S = {x, *range(n, len(new))}

    fx = _forward_set(g1, x)
    cond_i = fx is not None and fx <= S

    decomp = clusters(g1)
    cond_ii = True
    for a in range(n, len(new)):
        fa = _forward_set(g1, a)
        if fa is None or not fa <= S or decomp.component[a] != decomp.component[x]:
            cond_ii = False

    rev1 = g1.reverse()
    back1 = backward(g1, x, rev1)
    back0 = backward(g0, x)
    changed = np.flatnonzero(sol0.target != sol1.target[:n])
    allowed = back1 & S
    cond_iii = all(int(sol1.target[y]) in allowed for y in changed if y != x)

    return LoopingReport(
        anchor=x,
        cond_i=cond_i,
        cond_ii=cond_ii,
        cond_iii=cond_iii,
        backward_preserved=len(back1) >= len(back0),
        backward_inclusion=back0 <= back1,
        degenerate=sol0.is_degenerate() or sol1.is_degenerate(),
        back_before=len(back0),
        back_after=len(back1),
    )


# ---------------------------------------------------------------------------
# almost-looping points


@dataclass(frozen=True)
class AlmostLoopingParams:
    """(r, R, K, A) with A an open ball in (R^2 x [0,1])^k, written relative
    to the anchor's germ: ``center`` holds (dx, dy, mark) per added point."""

    r: float
    R: float
    K: int
    center: tuple[tuple[float, float, float], ...]
    radius: float
    samples: int = 100

    def __post_init__(self):
        if not (0 < self.r < self.R):
            raise ValueError("need 0 < r < R")
        if self.K < 0 or self.samples < 0 or not self.radius > 0:
            raise ValueError("K, samples must be non-negative and radius positive")
        for dx, dy, _ in self.center:
            if math.hypot(dx, dy) + self.radius >= self.r:
                raise ValueError("A must sit inside B(0, r) in every position coordinate")

    @property
    def k(self) -> int:
        return len(self.center)

    @classmethod
    def from_witness(cls, config: Configuration, witness: LoopBreakWitness, samples: int = 100) -> "AlmostLoopingParams":
        xi = config.germs[witness.anchor]
        rel = tuple((gx - xi[0], gy - xi[1], m) for gx, gy, m in witness.ball_center)
        r = max(math.hypot(dx, dy) for dx, dy, _ in rel) + 2.0 * witness.ball_radius
        R = 2.0 * r
        K = int(np.sum(np.hypot(*(config.germs - xi).T) < R))
        return cls(r=r, R=R, K=K, center=rel, radius=witness.ball_radius, samples=samples)


@dataclass(frozen=True)
class AlmostLoopingReport:
    count_ok: bool
    count: int
    sampled_fraction_passing: float
    samples: int
    failures: list[int] = field(default_factory=list)


def _sample_ball(gen: np.random.Generator, center: np.ndarray, radius: float) -> np.ndarray:
    z = gen.standard_normal(len(center))
    z /= np.linalg.norm(z)
    return center + radius * gen.random() ** (1.0 / len(center)) * z


def verify_almost_looping(
    config: Configuration, x: int, params: AlmostLoopingParams, model: Model, rng: RngSpec = RngSpec(0)
) -> AlmostLoopingReport:
    """Item (i) exactly; item (ii) on ``params.samples`` uniform draws from A.

    Marks are read modulo 1, so A may wrap around the mark circle.
    """
    xi = config.germs[x]
    count = int(np.sum(np.hypot(*(config.germs - xi).T) < params.R)) if len(config) else 0
    sol0 = model.solve(config)
    back0 = backward(OutdegreeGraph(sol0.target), x)
    gen = rng.generator()
    c = np.array(params.center, dtype=float).reshape(-1)
    n = len(config)
    ok = 0
    failures = []
    for t in range(params.samples):
        v = _sample_ball(gen, c, params.radius).reshape(-1, 3)
        added = [(Point2(float(xi[0] + a), float(xi[1] + b)), float(m % 1.0)) for a, b, m in v]
        try:
            sol1 = model.solve(extend(config, added))
        except (SolverDegeneracy, ValueError):
            failures.append(t)
            continue
        g1 = OutdegreeGraph(sol1.target)
        fx = _forward_set(g1, x)
        good = fx is not None and fx <= {x, *range(n, n + len(added))}
        good = good and len(backward(g1, x)) >= len(back0)
        if good:
            ok += 1
        else:
            failures.append(t)
    frac = ok / params.samples if params.samples else 1.0
    return AlmostLoopingReport(count <= params.K, count, frac, params.samples, failures)
