"""Shield diagnostics: epsilon-shield hexagons, m-shielded points and the
subsquare occupancy event used for navigation."""

from __future__ import annotations

import math
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.stats import binomtest

from ..geometry import (
    SQRT3,
    TWO_PI,
    HexCell,
    Point2,
    Window,
    clip_segments_convex,
    hex_complex,
    hexagon_halfplanes,
    hexagon_vertices,
    in_hex_complex,
    segments_cross_params,
    segments_meet_hex_complex,
)
from ..graph import CENSORED
from ..process import Configuration, RngSpec, sample_ppp
from ..segment_model import HexUnionRegion, SegmentSolution, partial_solve

TOUCH_TOL = 1e-9
WINDING_TOL = 1e-6 * TWO_PI


class ShieldCheck(NamedTuple):
    barrier_found: bool
    chord_pass: bool


def _annulus_pieces(p: np.ndarray, q: np.ndarray, center: np.ndarray, epsilon: float):
    """Parts of the segments inside H(center) but outside the open inner hexagon."""
    n_out, o_out = hexagon_halfplanes(center, 1.0)
    n_in, o_in = hexagon_halfplanes(center, epsilon)
    t0, t1 = clip_segments_convex(p, q, n_out, o_out)
    s0, s1 = clip_segments_convex(p, q, n_in, o_in)
    starts, ends = [], []
    for k in range(len(p)):
        if t0[k] > t1[k]:
            continue
        ranges = [(t0[k], t1[k])]
        if s0[k] < s1[k]:
            ranges = [(t0[k], min(t1[k], s0[k])), (max(t0[k], s1[k]), t1[k])]
        d = q[k] - p[k]
        for a, b in ranges:
            if b > a:
                starts.append(p[k] + a * d)
                ends.append(p[k] + b * d)
    return np.array(starts).reshape(-1, 2), np.array(ends).reshape(-1, 2)


def winding_circuit(starts: np.ndarray, ends: np.ndarray, center) -> bool:
    """Whether the union of the segments holds a closed circuit winding
    around ``center``, which none of the segments may pass through.

    The segments form a planar graph (nodes at endpoints and crossings).
    Angles around the center are lifted along a BFS tree; a non-tree edge
    whose lifted endpoints disagree by a nonzero multiple of 2*pi closes a
    circuit of that winding number.
    """
    m = len(starts)
    if m < 3:
        return False
    c = np.asarray(center, dtype=float)
    lens = np.linalg.norm(ends - starts, axis=1)
    t, s = segments_cross_params(starts[:, None], ends[:, None], starts[None], ends[None])
    slack_t = TOUCH_TOL / lens[:, None]
    slack_s = TOUCH_TOL / lens[None, :]
    with np.errstate(invalid="ignore"):
        meet = (t >= -slack_t) & (t <= 1 + slack_t) & (s >= -slack_s) & (s <= 1 + slack_s)
    np.fill_diagonal(meet, False)
    # per segment: sorted list of (param, node id); node 2k / 2k+1 are the ends
    coords = [starts[k] for k in range(m)] + [ends[k] for k in range(m)]
    on_seg: list[list[tuple[float, int]]] = [[(0.0, k), (1.0, m + k)] for k in range(m)]
    ii, jj = np.nonzero(np.triu(meet, 1))
    for a, b in zip(ii.tolist(), jj.tolist()):
        ta = float(np.clip(t[a, b], 0.0, 1.0))
        tb = float(np.clip(s[a, b], 0.0, 1.0))
        node = len(coords)
        coords.append(starts[a] + ta * (ends[a] - starts[a]))
        on_seg[a].append((ta, node))
        on_seg[b].append((tb, node))
    pts = np.array(coords)
    ang = np.arctan2(pts[:, 1] - c[1], pts[:, 0] - c[0])
    adj: list[list[tuple[int, float]]] = [[] for _ in range(len(pts))]
    for lst in on_seg:
        lst.sort()
        for (_, u), (_, v) in zip(lst, lst[1:]):
            if u == v:
                continue
            d = (ang[v] - ang[u] + math.pi) % TWO_PI - math.pi
            adj[u].append((v, d))
            adj[v].append((u, -d))
    lifted = np.full(len(pts), np.nan)
    for root in range(len(pts)):
        if not np.isnan(lifted[root]) or not adj[root]:
            continue
        lifted[root] = ang[root]
        queue = deque([root])
        while queue:
            u = queue.popleft()
            for v, d in adj[u]:
                want = lifted[u] + d
                if np.isnan(lifted[v]):
                    lifted[v] = want
                    queue.append(v)
                elif abs(lifted[v] - want) > 0.5 * math.pi:
                    k = round((lifted[v] - want) / TWO_PI)
                    if k != 0 and abs(lifted[v] - want - k * TWO_PI) < WINDING_TOL:
                        return True
    return False


def _boundary_points(center: np.ndarray, scale: float, count: int) -> np.ndarray:
    """``count`` points spaced evenly by arc length on center + scale*H(0)."""
    v = hexagon_vertices(center, scale)
    t = np.arange(count) * (6.0 / count)
    k = np.floor(t).astype(int) % 6
    f = (t - np.floor(t))[:, None]
    return v[k] + f * (v[(k + 1) % 6] - v[k])


def chords_blocked(starts: np.ndarray, ends: np.ndarray, center, epsilon: float, resolution: int) -> bool:
    """Every sampled open chord from outside H(center) to the inner hexagon
    boundary meets one of the closed segments."""
    c = np.asarray(center, dtype=float)
    if len(starts) == 0:
        return False
    outer = c + (_boundary_points(c, 1.0, resolution) - c) * (1.0 + 1e-9)
    inner = _boundary_points(c, epsilon, resolution)
    a = np.repeat(outer, resolution, axis=0)
    b = np.tile(inner, (resolution, 1))
    t, s = segments_cross_params(a[:, None], b[:, None], starts[None], ends[None])
    with np.errstate(invalid="ignore"):
        hit = (t > 0) & (t < 1) & (s >= -1e-12) & (s <= 1 + 1e-12)
    return bool(np.all(hit.any(axis=1)))


def is_epsilon_shield(config: Configuration, center, epsilon: float, chord_resolution: int = 16) -> ShieldCheck:
    if not (0.0 < epsilon < 1.0):
        raise ValueError("epsilon must lie in (0, 1)")
    if chord_resolution < 8:
        raise ValueError("chord_resolution must be at least 8")
    c = np.asarray(center, dtype=float)
    part = partial_solve(config, HexUnionRegion.hexagon(c))
    p, q = part.segments()
    keep = np.linalg.norm(q - p, axis=1) > 0
    p, q = p[keep], q[keep]
    a, b = _annulus_pieces(p, q, c, epsilon)
    return ShieldCheck(winding_circuit(a, b, c), chords_blocked(p, q, c, epsilon, chord_resolution))


# ---------------------------------------------------------------------------
# p_epsilon


@dataclass(frozen=True)
class ShieldReport:
    epsilon: float
    intensity: float
    trials: int
    successes: int
    p_hat: float
    ci95: tuple[float, float]

    def __post_init__(self):
        if not (0 <= self.successes <= self.trials):
            raise ValueError("successes out of range")

    def as_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "intensity": self.intensity,
            "trials": self.trials,
            "successes": self.successes,
            "p_hat": self.p_hat,
            "ci95": list(self.ci95),
        }


def wilson_interval(successes: int, trials: int, level: float = 0.95) -> tuple[float, float]:
    ci = binomtest(successes, trials).proportion_ci(confidence_level=level, method="wilson")
    return float(ci.low), float(ci.high)


# bounding box of H(0)
_HEX_BOX = Window(Point2(-1.0, -SQRT3 / 2.0), Point2(1.0, SQRT3 / 2.0))


def shield_trial(epsilon: float, intensity: float, rng: RngSpec) -> bool:
    config = sample_ppp(_HEX_BOX, intensity, rng)
    part = partial_solve(config, HexUnionRegion.hexagon((0.0, 0.0)))
    p, q = part.segments()
    keep = np.linalg.norm(q - p, axis=1) > 0
    a, b = _annulus_pieces(p[keep], q[keep], np.zeros(2), epsilon)
    return winding_circuit(a, b, (0.0, 0.0))


def estimate_p_epsilon(
    epsilon: float, intensity: float, trials: int, rng: RngSpec, threads: int = 1
) -> ShieldReport:
    """Monte Carlo estimate of P[H(0) is an epsilon-shield], counting a
    trial as a success only when a winding barrier is found."""
    if trials < 1:
        raise ValueError("trials must be at least 1")
    if not (0.0 < epsilon < 1.0):
        raise ValueError("epsilon must lie in (0, 1)")
    specs = [rng.child(t) for t in range(trials)]
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            hits = list(ex.map(lambda r: shield_trial(epsilon, intensity, r), specs))
    else:
        hits = [shield_trial(epsilon, intensity, r) for r in specs]
    k = int(sum(hits))
    return ShieldReport(epsilon, intensity, trials, k, k / trials, wilson_interval(k, trials))


# ---------------------------------------------------------------------------
# m-shielded points and the subsquare event


class MShieldCheck(NamedTuple):
    club: bool  # no segment from outside H^{2m} meets H^m
    spade: bool  # every segment from inside H^m ends inside H^{2m}


def check_m_shielded(config: Configuration, solution: SegmentSolution, eta, m: int, slack: float = TOUCH_TOL) -> MShieldCheck:
    """Censored segments count as infinite rays for the first test and as
    violations for the second."""
    if m < 1:
        raise ValueError("m must be a positive integer")
    if len(config) == 0:
        return MShieldCheck(True, True)
    eta = np.asarray(eta, dtype=float)
    germs, dirs = config.germs, config.directions
    cens = solution.target == CENSORED
    inner = in_hex_complex(germs, eta, m)
    outer = in_hex_complex(germs, eta, 2 * m)

    far = np.flatnonzero(~outer)
    ends = solution.impact[far].copy()
    reach = np.hypot(*(germs[far] - eta).T) + 4.0 * (m + 1)
    open_ = cens[far]
    ends[open_] = germs[far][open_] + reach[open_, None] * dirs[far][open_]
    club = not np.any(segments_meet_hex_complex(germs[far], ends, eta, m, slack)) if len(far) else True

    near = np.flatnonzero(inner)
    spade = True
    if len(near):
        if np.any(cens[near]):
            spade = False
        else:
            spade = bool(np.all(in_hex_complex(solution.impact[near], eta, 2 * m)))
    return MShieldCheck(club, spade)


def check_navigation_shield_event(config: Configuration, m: int | float) -> bool:
    """Every one of the (2 floor(sqrt m))^2 congruent subsquares of
    [-m, m]^2 holds a germ."""
    if m <= 0:
        raise ValueError("m must be positive")
    w = config.window
    if w.lo.x > -m or w.lo.y > -m or w.hi.x < m or w.hi.y < m:
        raise ValueError("window must contain [-m, m]^2")
    side = 2 * math.isqrt(int(m)) if float(m).is_integer() else 2 * int(math.floor(math.sqrt(m)))
    if side == 0:
        return True
    g = config.germs
    inside = np.all(np.abs(g) <= m, axis=1)
    idx = np.floor((g[inside] + m) / (2.0 * m) * side).astype(np.int64)
    idx = np.minimum(idx, side - 1)
    occupied = np.zeros((side, side), dtype=bool)
    occupied[idx[:, 0], idx[:, 1]] = True
    return bool(occupied.all())
