import numpy as np
import pytest
from scipy import stats

from outdeg1.geometry import Point2, Window
from outdeg1.process import (
    CoincidentGermError,
    Configuration,
    RngSpec,
    add_typical,
    sample_ppp,
    translate,
)


def test_near_empty_intensity():
    counts = [len(sample_ppp(Window.square(1), 1e-9, RngSpec(1, k))) for k in range(50)]
    assert sum(counts) == 0


@pytest.mark.parametrize("bad", [0.0, -1.0, float("inf"), float("nan")])
def test_intensity_validation(bad):
    with pytest.raises(ValueError):
        sample_ppp(Window.square(1), bad, RngSpec(1))


def test_mean_count():
    counts = np.array([len(sample_ppp(Window.square(10), 1.0, RngSpec(7, k))) for k in range(1000)])
    assert abs(counts.mean() - 100) <= 3 * np.sqrt(100 / 1000) * 3


def test_sampling_is_deterministic():
    a = sample_ppp(Window.square(5), 2.0, RngSpec(99, 3))
    b = sample_ppp(Window.square(5), 2.0, RngSpec(99, 3))
    assert a.same_as(b)
    c = sample_ppp(Window.square(5), 2.0, RngSpec(99, 4))
    assert not a.same_as(c)


def test_marks_and_germs_in_range():
    c = sample_ppp(Window(Point2(-3, 1), Point2(2, 4)), 5.0, RngSpec(5))
    assert np.all((c.marks >= 0) & (c.marks < 1))
    assert np.all(c.germs[:, 0] >= -3) and np.all(c.germs[:, 1] <= 4)


def test_count_distribution_is_poisson():
    # intensity * area = 20 over 10^4 replicates
    w = Window.square(2)
    counts = np.array([len(sample_ppp(w, 5.0, RngSpec(2024, k))) for k in range(10_000)])
    edges = np.arange(8, 34)
    observed = np.array([np.sum(counts < edges[0])] + [np.sum(counts == k) for k in edges[:-1]] + [np.sum(counts >= edges[-1])])
    cdf = stats.poisson.cdf(edges - 1, 20)
    pmf = stats.poisson.pmf(edges[:-1], 20)
    expected = np.concatenate([[cdf[0]], pmf, [1 - cdf[-1]]]) * len(counts)
    assert stats.chisquare(observed, expected).pvalue > 0.001


def test_quadrants_exchangeable():
    w = Window.square(2)
    q = np.zeros(4)
    for k in range(2000):
        g = sample_ppp(w, 5.0, RngSpec(31, k)).germs
        idx = (g[:, 0] >= 1).astype(int) * 2 + (g[:, 1] >= 1).astype(int)
        q += np.bincount(idx, minlength=4)
    assert stats.chisquare(q).pvalue > 0.001


def test_add_typical_examples():
    w = Window.square(4)
    c, p = add_typical(Configuration.empty(w), w.center, RngSpec(1))
    assert len(c) == 1 and p.id == 0 and p.germ == w.center

    base = sample_ppp(w, 2.0, RngSpec(8))
    c2, p2 = add_typical(base, (1.2345, 2.5), RngSpec(1))
    assert len(c2) == len(base) + 1 and p2.id == len(base)
    assert np.array_equal(c2.germs[: len(base)], base.germs)
    _, p3 = add_typical(base, (1.2345, 2.5), RngSpec(1))
    assert p3.mark == p2.mark


def test_add_typical_errors():
    w = Window.square(4)
    c = Configuration.from_points([(1.0, 1.0, 0.2)], window=w)
    with pytest.raises(CoincidentGermError):
        add_typical(c, (1.0, 1.0), RngSpec(0))
    with pytest.raises(ValueError):
        add_typical(c, (0.0, 2.0), RngSpec(0))


def test_configuration_invariants():
    w = Window.square(1)
    with pytest.raises(CoincidentGermError):
        Configuration.from_points([(0.5, 0.5, 0.1), (0.5, 0.5, 0.2)], window=w)
    with pytest.raises(ValueError):
        Configuration.from_points([(0.5, 0.5, 1.0)], window=w)
    with pytest.raises(ValueError):
        Configuration.from_points([(1.5, 0.5, 0.0)], window=w)


def test_translate_examples():
    c = sample_ppp(Window.square(3), 3.0, RngSpec(4))
    assert translate(c, (0, 0)).same_as(c)
    back = translate(translate(c, (0.37, -1.9)), (-0.37, 1.9))
    assert np.allclose(back.germs, c.germs, atol=1e-12)
    one = translate(Configuration.from_points([(1.0, 2.0, 0.3)]), (3, -1))
    assert tuple(one.germs[0]) == (4.0, 1.0) and one.marks[0] == 0.3


def test_rngspec_validation():
    with pytest.raises(ValueError):
        RngSpec(-1)
    with pytest.raises(ValueError):
        RngSpec(1, -2)
    assert RngSpec(1, 2).child(3) == RngSpec(1, 2, (3,))
