"""SVG 1.1 drawings of solved configurations."""

from __future__ import annotations

import math

import numpy as np

from .geometry import Window
from .graph import CENSORED, OutdegreeGraph, clusters
from .process import Configuration

_STYLE = """\
.frame{fill:none;stroke:#000;stroke-width:0.5}
.germ{fill:#000}
.edge{stroke:#333;stroke-width:0.6;fill:none}
.loop{stroke:#c0392b;stroke-width:1.2;fill:none}
.open{stroke:#777;stroke-width:0.6;stroke-dasharray:3,2;fill:none}"""


def _f(v: float) -> str:
    s = f"{v:.6f}".rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


def ray_exit(window: Window, origin: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Point where the ray origin + t*u leaves the window."""
    ts = []
    for k, (lo, hi) in enumerate(((window.lo.x, window.hi.x), (window.lo.y, window.hi.y))):
        if u[k] > 0:
            ts.append((hi - origin[k]) / u[k])
        elif u[k] < 0:
            ts.append((lo - origin[k]) / u[k])
    t = max(0.0, min(ts)) if ts else 0.0
    return origin + t * u


def render_svg(config: Configuration, target: np.ndarray, ends: np.ndarray | None = None, scale: float = 20.0) -> str:
    """``ends[i]`` is where i's line stops (impact point for segments);
    by default the target's germ. Censored points get a dashed ray."""
    w = config.window
    width, height = w.width * scale, w.height * scale

    def X(p):
        return _f((p[0] - w.lo.x) * scale)

    def Y(p):
        return _f((w.hi.y - p[1]) * scale)

    germs, dirs = config.germs, config.directions
    in_loop = clusters(OutdegreeGraph(target)).in_loop() if len(config) else np.zeros(0, dtype=bool)
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{_f(width)}" height="{_f(height)}" '
        f'viewBox="0 0 {_f(width)} {_f(height)}">',
        f"<style>\n{_STYLE}\n</style>",
        f'<rect class="frame" x="0" y="0" width="{_f(width)}" height="{_f(height)}"/>',
    ]
    for i in range(len(config)):
        g = germs[i]
        if target[i] == CENSORED:
            e, cls = ray_exit(w, g, dirs[i]), "open"
        else:
            e = ends[i] if ends is not None else germs[target[i]]
            cls = "loop" if in_loop[i] else "edge"
        lines.append(f'<line class="{cls}" x1="{X(g)}" y1="{Y(g)}" x2="{X(e)}" y2="{Y(e)}"/>')
    r = _f(max(1.0, 0.08 * scale))
    for g in germs:
        lines.append(f'<circle class="germ" cx="{X(g)}" cy="{Y(g)}" r="{r}"/>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
