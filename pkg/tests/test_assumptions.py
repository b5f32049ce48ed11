import math

import numpy as np
import pytest

from conftest import CHAIN, TWO_POINT
from outdeg1.assumptions import (
    AlmostLoopingParams,
    LoopBreakError,
    check_m_shielded,
    check_navigation_shield_event,
    construct_navigation_loop_break,
    construct_segment_loop_break,
    estimate_p_epsilon,
    extend,
    is_epsilon_shield,
    verify_almost_looping,
    verify_k_looping,
    wilson_interval,
)
from outdeg1.geometry import Point2, Window, in_hex_complex
from outdeg1.graph import OutdegreeGraph, backward, forward
from outdeg1.models import NavigationModel, SegmentModel
from outdeg1.process import Configuration, RngSpec, sample_ppp
from outdeg1.segment_model import solve_event_driven

SEG = SegmentModel()


def ring_points(k, rho, delta, center=(0.0, 0.0)):
    """k segments closing a regular k-gon of circumradius rho; each germ sits
    ``delta`` before its vertex so the previous side stops on it."""
    c = np.asarray(center, dtype=float)
    verts = [c + rho * np.array([math.cos(2 * math.pi * i / k), math.sin(2 * math.pi * i / k)]) for i in range(k)]
    pts = []
    for i in range(k):
        d = verts[(i + 1) % k] - verts[i]
        d /= np.linalg.norm(d)
        g = verts[i] - delta * d
        m = (math.atan2(d[1], d[0]) / (2 * math.pi)) % 1.0
        pts.append((g[0], g[1], 0.0 if m >= 1.0 else m))
    return pts


# ---------------------------------------------------------------------------
# segment witnesses


def test_segment_witness_two_point():
    c = Configuration.from_points(TWO_POINT)
    s = solve_event_driven(c)
    w = construct_segment_loop_break(c, s, 0)
    assert w.k == 3 and w.anchor == 0
    # empty Back^-1: r = stop_len / 2 = 1, so w = (2 - 1/2, 0)
    assert w.center == pytest.approx((1.5, 0.0))
    for p in w.added:
        assert math.dist(p.germ, w.center) < w.scale
    s1 = solve_event_driven(extend(c, w.added))
    f = forward(OutdegreeGraph(s1.target), 0)
    assert set(f.path) <= {0, 2, 3, 4} and f.loop is not None
    rep = verify_k_looping(c, 0, w.added, SEG)
    assert rep.passed and rep.backward_inclusion


def test_segment_witness_chain_anchor():
    c = Configuration.from_points(CHAIN)
    s = solve_event_driven(c)
    w = construct_segment_loop_break(c, s, 1)
    # x2's segment runs from (2, -1) up to (2, 1)
    assert w.center.x == pytest.approx(2.0) and 0.0 < w.center.y < 1.0
    rep = verify_k_looping(c, 1, w.added, SEG)
    assert rep.passed and rep.back_before == 2
    g1 = OutdegreeGraph(solve_event_driven(extend(c, w.added)).target)
    assert backward(g1, 1) >= {0, 1}


def test_segment_witness_rejects_censored():
    c = Configuration.from_points(TWO_POINT)
    with pytest.raises(LoopBreakError):
        construct_segment_loop_break(c, solve_event_driven(c), 1)


def test_segment_witness_random():
    c = sample_ppp(Window.square(20), 1.0, RngSpec(42))
    s = solve_event_driven(c)
    anchors = np.flatnonzero(s.target >= 0)[:25]
    for x in anchors:
        w = construct_segment_loop_break(c, s, int(x))
        rep = verify_k_looping(c, int(x), w.added, SEG, before=s)
        assert rep.passed and rep.backward_inclusion, rep


def test_far_point_is_negative_control():
    c = Configuration.from_points(CHAIN)
    rep = verify_k_looping(c, 0, [(Point2(30.0, 30.0), 0.1)], SEG)
    assert not rep.cond_i


# ---------------------------------------------------------------------------
# navigation witnesses


def test_navigation_witness_mutual_pair():
    c = Configuration.from_points([(0.0, 0.0, 0.0), (1.0, 0.0, 0.5)])
    model = NavigationModel(math.pi / 3)
    s = model.solve(c)
    w = construct_navigation_loop_break(c, s, 0, model.epsilon)
    (y,) = w.added
    assert 0.0 < y.germ.x < 1.0 and y.germ.y == pytest.approx(0.0)
    s1 = model.solve(extend(c, w.added))
    assert s1.target[0] == 2 and s1.target[2] == 0
    assert verify_k_looping(c, 0, w.added, model).passed


def test_navigation_witness_isolated_censored():
    c = Configuration.from_points([(0.0, 0.0, 0.0)])
    model = NavigationModel(math.pi / 2)
    w = construct_navigation_loop_break(c, model.solve(c), 0, model.epsilon)
    assert w.added[0].germ == pytest.approx((1.0, 0.0))
    assert forward(OutdegreeGraph(model.solve(extend(c, w.added)).target), 0).loop == [0, 1]


def test_navigation_witness_random():
    model = NavigationModel(1.0)
    c = sample_ppp(Window.square(7), 1.0, RngSpec(50))
    assert len(c) >= 40
    s = model.solve(c)
    for x in range(len(c)):
        w = construct_navigation_loop_break(c, s, x, model.epsilon)
        rep = verify_k_looping(c, x, w.added, model, before=s)
        assert rep.passed and rep.backward_inclusion
        s1 = model.solve(extend(c, w.added))
        assert set(forward(OutdegreeGraph(s1.target), x).path) == {x, len(c)}


# ---------------------------------------------------------------------------
# almost-looping


def test_almost_looping_from_witness():
    c = sample_ppp(Window.square(12), 1.0, RngSpec(61))
    s = solve_event_driven(c)
    x = int(np.flatnonzero(s.target >= 0)[3])
    w = construct_segment_loop_break(c, s, x)
    params = AlmostLoopingParams.from_witness(c, w, samples=100)
    rep = verify_almost_looping(c, x, params, SEG, RngSpec(1))
    assert rep.count_ok
    assert rep.sampled_fraction_passing == 1.0


def test_almost_looping_navigation_witness():
    model = NavigationModel(math.pi / 2)
    c = sample_ppp(Window.square(8), 1.0, RngSpec(62))
    w = construct_navigation_loop_break(c, model.solve(c), 5, model.epsilon)
    params = AlmostLoopingParams.from_witness(c, w, samples=100)
    assert verify_almost_looping(c, 5, params, model, RngSpec(2)).sampled_fraction_passing == 1.0


def test_almost_looping_count_bound():
    c = Configuration.from_points(TWO_POINT)
    s = solve_event_driven(c)
    w = construct_segment_loop_break(c, s, 0)
    p = AlmostLoopingParams.from_witness(c, w, samples=5)
    p0 = AlmostLoopingParams(r=p.r, R=p.R, K=0, center=p.center, radius=p.radius, samples=5)
    assert not verify_almost_looping(c, 0, p0, SEG).count_ok


def test_almost_looping_adversarial_ball():
    c = sample_ppp(Window.square(12), 1.0, RngSpec(61))
    s = solve_event_driven(c)
    x = int(np.flatnonzero(s.target >= 0)[3])
    w = construct_segment_loop_break(c, s, x)
    # the same triangle moved onto a distant segment: x's orbit is untouched
    far = int(np.flatnonzero(s.target >= 0)[-1])
    shift = (c.germs[far] + 0.5 * (s.impact[far] - c.germs[far])) - np.array(w.center)
    xi = c.germs[x]
    moved = tuple((gx + shift[0] - xi[0], gy + shift[1] - xi[1], m) for gx, gy, m in w.ball_center)
    r = max(math.hypot(a, b) for a, b, _ in moved) + 1.0
    params = AlmostLoopingParams(r=r, R=2 * r, K=len(c), center=moved, radius=w.ball_radius, samples=20)
    assert verify_almost_looping(c, x, params, SEG).sampled_fraction_passing < 1.0


def test_almost_looping_param_validation():
    with pytest.raises(ValueError):
        AlmostLoopingParams(r=1.0, R=0.5, K=1, center=((0.1, 0.0, 0.3),), radius=0.1)
    with pytest.raises(ValueError):
        AlmostLoopingParams(r=1.0, R=2.0, K=1, center=((0.95, 0.0, 0.3),), radius=0.1)


# ---------------------------------------------------------------------------
# epsilon-shields


def test_empty_hexagon_is_not_a_shield():
    c = Configuration.empty(Window.square(4, lo=-2))
    assert is_epsilon_shield(c, (0.0, 0.0), 0.3, 16) == (False, False)


def test_constructed_ring_is_a_shield():
    c = Configuration.from_points(ring_points(6, 0.38, 0.03))
    for res in (8, 16, 64):
        chk = is_epsilon_shield(c, (0.0, 0.0), 0.3, res)
        assert chk.barrier_found and chk.chord_pass


def test_shield_ring_off_centre():
    c = Configuration.from_points(ring_points(6, 0.38, 0.03, center=(5.0, -2.0)))
    assert is_epsilon_shield(c, (5.0, -2.0), 0.3).barrier_found
    # the ring does not surround a different centre
    assert not is_epsilon_shield(c, (5.3, -2.0), 0.1).barrier_found


def test_open_ring_is_not_a_barrier():
    pts = ring_points(6, 0.38, 0.03)[:-1]
    assert not is_epsilon_shield(Configuration.from_points(pts), (0.0, 0.0), 0.3).barrier_found


def test_one_short_segment():
    c = Configuration.from_points([(0.5, 0.0, 0.25)])
    chk = is_epsilon_shield(c, (0.0, 0.0), 0.3, 16)
    assert not chk.barrier_found and not chk.chord_pass


def test_barrier_implies_chord_pass():
    found = 0
    for k in range(400):
        c = sample_ppp(Window(Point2(-1, -1), Point2(1, 1)), 20.0, RngSpec(71, k))
        chk = is_epsilon_shield(c, (0.0, 0.0), 0.02, 8)
        if chk.barrier_found:
            found += 1
            for res in (8, 24, 48):
                assert is_epsilon_shield(c, (0.0, 0.0), 0.02, res).chord_pass
    assert found >= 1


def test_shield_argument_validation():
    c = Configuration.empty(Window.square(1))
    with pytest.raises(ValueError):
        is_epsilon_shield(c, (0.0, 0.0), 1.0)
    with pytest.raises(ValueError):
        is_epsilon_shield(c, (0.0, 0.0), 0.3, chord_resolution=4)


def test_p_epsilon_low_intensity():
    r = estimate_p_epsilon(0.3, 1e-6, 50, RngSpec(3))
    assert r.successes == 0 and r.p_hat == 0.0 and r.ci95[0] == 0.0


def test_p_epsilon_reproducible():
    a = estimate_p_epsilon(0.02, 20.0, 40, RngSpec(8))
    b = estimate_p_epsilon(0.02, 20.0, 40, RngSpec(8), threads=4)
    assert a == b


def test_wilson_width_scaling():
    lo1, hi1 = wilson_interval(30, 1000)
    lo2, hi2 = wilson_interval(60, 2000)
    assert (hi2 - lo2) / (hi1 - lo1) == pytest.approx(1 / math.sqrt(2), rel=0.05)
    lo, hi = wilson_interval(0, 10)
    assert lo == 0.0 and 0 < hi < 1


# ---------------------------------------------------------------------------
# m-shielded points


def test_m_shielded_empty():
    c = Configuration.empty(Window.square(20, lo=-10))
    s = solve_event_driven(c)
    assert check_m_shielded(c, s, (0.0, 0.0), 1) == (True, True)


def test_m_shielded_long_crossing_segment():
    c = Configuration.from_points([(-9.0, 0.0, 0.0), (9.0, -5.0, 0.25)])
    s = solve_event_driven(c)
    assert s.target[0] == 1
    assert not check_m_shielded(c, s, (0.0, 0.0), 1).club


def test_m_shielded_censored_inside_violates_spade():
    c = Configuration.from_points([(0.0, 0.0, 0.1)])
    s = solve_event_driven(c)
    assert not check_m_shielded(c, s, (0.0, 0.0), 1).spade


def test_m_shielded_far_field_edits():
    m = 2
    w = Window(Point2(-11, -11), Point2(11, 11))
    base = sample_ppp(w, 5.0, RngSpec(500))
    s = solve_event_driven(base)
    assert check_m_shielded(base, s, (0.0, 0.0), m) == (True, True)
    keep = in_hex_complex(base.germs, (0.0, 0.0), 2 * m)
    kept, idx = base.restricted(keep)
    inner = in_hex_complex(kept.germs, (0.0, 0.0), m)
    for k in range(3):
        fresh = sample_ppp(w, 5.0, RngSpec(501, k))
        out = ~in_hex_complex(fresh.germs, (0.0, 0.0), 2 * m)
        edited = Configuration(
            np.vstack([kept.germs, fresh.germs[out]]), np.concatenate([kept.marks, fresh.marks[out]]), w
        )
        s2 = solve_event_driven(edited)
        for j in np.flatnonzero(inner):
            assert idx[s2.target[j]] == s.target[idx[j]]
            assert s2.impact[j] == pytest.approx(s.impact[idx[j]], abs=1e-9)


# ---------------------------------------------------------------------------
# navigation subsquares


def test_subsquares_quadrants():
    w = Window.square(4, lo=-2)
    c = Configuration.from_points([(0.5, 0.5, 0), (-0.5, 0.5, 0), (-0.5, -0.5, 0), (0.5, -0.5, 0)], window=w)
    assert check_navigation_shield_event(c, 1)
    c3 = Configuration.from_points([(0.5, 0.5, 0), (-0.5, 0.5, 0), (-0.5, -0.5, 0)], window=w)
    assert not check_navigation_shield_event(c3, 1)


def test_subsquares_window_precondition():
    with pytest.raises(ValueError):
        check_navigation_shield_event(Configuration.empty(Window.square(1)), 1)


def test_subsquare_event_probability_increases():
    w = Window.square(2, lo=-1)
    grid = np.linspace(0.5, 4.5, 11)
    probs = []
    for level, z in enumerate(grid):
        hits = sum(check_navigation_shield_event(sample_ppp(w, z, RngSpec(81, t, (level,))), 1) for t in range(2000))
        probs.append(hits / 2000)
    steps = np.diff(probs)
    assert np.sum(steps > 0) >= 9
    # exact law for one germ per unit quadrant
    assert probs[5] == pytest.approx((1 - math.exp(-grid[5])) ** 4, abs=0.04)
