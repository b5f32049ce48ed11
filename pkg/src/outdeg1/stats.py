"""Estimators over solved configurations: loop-cell counts, cluster sizes,
and the expanding-window percolation diagnostic."""

from __future__ import annotations

import csv
import io
import math
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields
from typing import Sequence

import numpy as np

from .geometry import Window
from .graph import CENSORED, ClusterDecomposition, OutdegreeGraph, clusters
from .models import Model
from .process import Configuration, RngSpec, sample_ppp


@dataclass(frozen=True)
class QCellCounts:
    counts: dict[tuple[int, int], int]  # every core cell, zeros included
    total: int
    n_cells: int

    @property
    def mean(self) -> float:
        return self.total / self.n_cells


def core_cells(window: Window, core_margin: float) -> tuple[range, range]:
    """Integer cells z with z + [-1/2, 1/2)^2 inside the shrunken window."""
    if core_margin < 0:
        raise ValueError("core_margin must be non-negative")
    core = window.shrink(core_margin)
    if core is None:
        raise ValueError("core region is empty")
    xs = range(math.ceil(core.lo.x + 0.5), math.floor(core.hi.x - 0.5) + 1)
    ys = range(math.ceil(core.lo.y + 0.5), math.floor(core.hi.y - 0.5) + 1)
    if len(xs) == 0 or len(ys) == 0:
        raise ValueError("core region holds no whole unit cell")
    return xs, ys


def q_cell_counts(config: Configuration, decomposition: ClusterDecomposition, core_margin: float) -> QCellCounts:
    """Per unit cell, the number of vertices whose loop's center of mass
    lies in that cell (cells are half-open, [z - 1/2, z + 1/2)^2)."""
    xs, ys = core_cells(config.window, core_margin)
    counts = {(a, b): 0 for a in xs for b in ys}
    for comp in decomposition.components:
        if comp.loop_center is None:
            continue
        cell = (math.floor(comp.loop_center[0] + 0.5), math.floor(comp.loop_center[1] + 0.5))
        if cell in counts:
            counts[cell] += comp.size
    return QCellCounts(counts, sum(counts.values()), len(counts))


@dataclass(frozen=True)
class SizeHistogram:
    determined: dict[int, int]
    undetermined: int  # number of components left open by the window


def cluster_size_distribution(decomposition: ClusterDecomposition) -> SizeHistogram:
    sizes = Counter(c.size for c in decomposition.components if c.determined)
    und = sum(1 for c in decomposition.components if not c.determined)
    return SizeHistogram(dict(sorted(sizes.items())), und)


def loop_size_histogram(decomposition: ClusterDecomposition) -> dict[int, int]:
    """Loop size -> number of determined components with a loop of that size."""
    return dict(sorted(Counter(len(c.loop) for c in decomposition.components if c.loop).items()))


# ---------------------------------------------------------------------------
# run summaries


@dataclass(frozen=True)
class RunSummary:
    replicate: int
    side: float
    intensity: float
    n_points: int
    n_censored: int
    n_components: int
    n_determined: int
    max_cluster: int
    mean_cluster: float
    q0_estimate: float

    @staticmethod
    def header() -> list[str]:
        return [f.name for f in fields(RunSummary)]

    def row(self) -> list[str]:
        return [_fmt(getattr(self, f.name)) for f in fields(self)]


RUN_SUMMARY_HEADER = RunSummary.header()


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def summaries_to_csv(rows: Sequence[RunSummary]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RUN_SUMMARY_HEADER)
    for r in rows:
        w.writerow(r.row())
    return buf.getvalue()


def summarize(
    config: Configuration, target: np.ndarray, replicate: int, side: float, intensity: float, core_margin: float
) -> tuple[RunSummary, ClusterDecomposition]:
    dec = clusters(OutdegreeGraph(target, config.germs))
    det = [c.size for c in dec.components if c.determined]
    try:
        q0 = q_cell_counts(config, dec, core_margin).mean
    except ValueError:
        q0 = math.nan
    summary = RunSummary(
        replicate=replicate,
        side=float(side),
        intensity=float(intensity),
        n_points=len(config),
        n_censored=int(np.sum(target == CENSORED)),
        n_components=dec.n_components,
        n_determined=len(det),
        max_cluster=max(det, default=0),
        mean_cluster=float(np.mean(det)) if det else 0.0,
        q0_estimate=q0,
    )
    return summary, dec


def replicate_rng(seed: int, replicate: int, level: int = 0) -> RngSpec:
    """Stream of replicate ``replicate`` in the experiment at index ``level``."""
    return RngSpec(seed, replicate, (level,))


def q0_experiment(
    model: Model, intensity: float, side: float, core_margin: float, replicates: int, seed: int, threads: int = 1
) -> tuple[float, float, np.ndarray]:
    """(mean, standard error, per-replicate means) of the loop-cell count."""
    window = Window.square(side)

    def one(r: int) -> float:
        config = sample_ppp(window, intensity, replicate_rng(seed, r))
        sol = model.solve(config)
        dec = clusters(OutdegreeGraph(sol.target, config.germs))
        return q_cell_counts(config, dec, core_margin).mean

    vals = np.array(_map(one, range(replicates), threads))
    se = float(vals.std(ddof=1) / math.sqrt(len(vals))) if len(vals) > 1 else math.inf
    return float(vals.mean()), se, vals


def _map(fn, items, threads: int):
    items = list(items)
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            return list(ex.map(fn, items))
    return [fn(i) for i in items]


# ---------------------------------------------------------------------------
# expanding windows


@dataclass(frozen=True)
class PercolationPoint:
    side: float
    largest_fraction: float
    censored_fraction: float
    replicates: int


PERCOLATION_CSV_HEADER = ["side", "largest_fraction", "censored_fraction", "replicates"]


def largest_core_fraction(config: Configuration, decomposition: ClusterDecomposition, core: Window | None) -> float:
    """Largest share of the core's points held by a single determined cluster."""
    if core is None or len(config) == 0:
        return 0.0
    g = config.germs
    incore = (g[:, 0] >= core.lo.x) & (g[:, 0] < core.hi.x) & (g[:, 1] >= core.lo.y) & (g[:, 1] < core.hi.y)
    total = int(incore.sum())
    if total == 0:
        return 0.0
    best = 0
    for comp in decomposition.components:
        if comp.determined:
            best = max(best, int(incore[comp.vertices].sum()))
    return best / total


def percolation_curve(
    model: Model,
    intensity: float,
    sides: Sequence[float],
    replicates: int,
    seed: int,
    core_frac: float = 0.2,
    threads: int = 1,
) -> list[PercolationPoint]:
    if any(b <= a for a, b in zip(sides, sides[1:])):
        raise ValueError("sides must be increasing")
    out = []
    for level, side in enumerate(sides):
        window = Window.square(side)
        core = window.shrink(core_frac * side)

        def one(r: int) -> tuple[float, float]:
            config = sample_ppp(window, intensity, replicate_rng(seed, r, level))
            sol = model.solve(config)
            dec = clusters(OutdegreeGraph(sol.target, config.germs))
            cens = float(np.mean(sol.target == CENSORED)) if len(config) else 0.0
            return largest_core_fraction(config, dec, core), cens

        res = np.array(_map(one, range(replicates), threads)).reshape(-1, 2)
        out.append(PercolationPoint(float(side), float(res[:, 0].mean()), float(res[:, 1].mean()), replicates))
    return out


def percolation_to_csv(points: Sequence[PercolationPoint]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(PERCOLATION_CSV_HEADER)
    for p in points:
        w.writerow([repr(p.side), repr(p.largest_fraction), repr(p.censored_fraction), p.replicates])
    return buf.getvalue()
