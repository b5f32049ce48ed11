"""Uniform handle on the two graph models for code that re-solves configurations."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .graph import OutdegreeGraph
from .navigation_model import NavigationSolution, solve_navigation
from .process import Configuration
from .segment_model import SegmentSolution, solve_event_driven


@dataclass(frozen=True)
class SegmentModel:
    name = "segment"
    k = 3  # points needed to break a forward branch

    def solve(self, config: Configuration) -> SegmentSolution:
        return solve_event_driven(config)

    def impacts(self, config: Configuration, solution: SegmentSolution) -> np.ndarray:
        return solution.impact


@dataclass(frozen=True)
class NavigationModel:
    epsilon: float
    name = "navigation"
    k = 1

    def __post_init__(self):
        if not (0.0 < self.epsilon <= math.pi):
            raise ValueError("epsilon must lie in (0, pi]")

    def solve(self, config: Configuration) -> NavigationSolution:
        return solve_navigation(config, self.epsilon)

    def impacts(self, config: Configuration, solution: NavigationSolution) -> np.ndarray:
        out = np.full((len(config), 2), np.nan)
        ok = ~solution.censored()
        out[ok] = config.germs[solution.target[ok]]
        return out


Model = SegmentModel | NavigationModel


def make_model(name: str, epsilon: float | None = None) -> Model:
    if name == "segment":
        return SegmentModel()
    if name == "navigation":
        if epsilon is None:
            raise ValueError("the navigation model needs epsilon")
        return NavigationModel(float(epsilon))
    raise ValueError(f"unknown model {name!r}")


def solve_graph(model: Model, config: Configuration):
    sol = model.solve(config)
    return sol, OutdegreeGraph(sol.target, config.germs)
