"""Outdegree-one graphs on marked Poisson configurations: the line-segment
stopping model, cone navigation, and diagnostics around their clusters."""

from .geometry import Point2, Window
from .graph import OutdegreeGraph, clusters, forward, backward
from .models import NavigationModel, SegmentModel, make_model
from .navigation_model import solve_navigation, solve_navigation_reference
from .process import Configuration, RngSpec, sample_ppp
from .segment_model import solve_event_driven, solve_fixed_point

__version__ = "0.1.0"
