"""Outdegree-one graph analytics: forward orbits, backward trees, clusters."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Sequence

import numpy as np

CENSORED = -1


@dataclass(frozen=True)
class OutdegreeGraph:
    """``out[v]`` is the target of v, or CENSORED when the window leaves it open."""

    out: np.ndarray
    germs: np.ndarray | None = None

    def __post_init__(self):
        out = np.asarray(self.out, dtype=np.int64).reshape(-1)
        n = len(out)
        if np.any(out == np.arange(n)):
            raise ValueError("a vertex cannot point to itself")
        if np.any((out < CENSORED) | (out >= n)):
            raise ValueError("targets out of range")
        object.__setattr__(self, "out", out)
        if self.germs is not None:
            object.__setattr__(self, "germs", np.asarray(self.germs, dtype=float).reshape(n, 2))

    @classmethod
    def from_solution(cls, solution, germs=None) -> "OutdegreeGraph":
        return cls(solution.target, germs)

    @classmethod
    def from_mapping(cls, n: int, edges: dict[int, int | None]) -> "OutdegreeGraph":
        out = np.full(n, CENSORED, dtype=np.int64)
        for v, w in edges.items():
            out[v] = CENSORED if w is None else w
        return cls(out)

    @property
    def n(self) -> int:
        return len(self.out)

    def reverse(self) -> list[list[int]]:
        rev: list[list[int]] = [[] for _ in range(self.n)]
        for v, w in enumerate(self.out.tolist()):
            if w != CENSORED:
                rev[w].append(v)
        return rev


@dataclass(frozen=True)
class Forward:
    path: list[int]
    loop: list[int] | None  # None: the orbit runs into a censored vertex

    @property
    def censored(self) -> bool:
        return self.loop is None


def forward(g: OutdegreeGraph, v: int) -> Forward:
    seen: dict[int, int] = {}
    path: list[int] = []
    out = g.out
    while True:
        seen[v] = len(path)
        path.append(v)
        w = int(out[v])
        if w == CENSORED:
            return Forward(path, None)
        if w in seen:
            return Forward(path, path[seen[w]:])
        v = w


def backward(g: OutdegreeGraph, v: int, rev: Sequence[Sequence[int]] | None = None) -> set[int]:
    """All vertices whose forward orbit visits v (v included)."""
    rev = g.reverse() if rev is None else rev
    out = {v}
    stack = [v]
    while stack:
        w = stack.pop()
        for y in rev[w]:
            if y not in out:
                out.add(y)
                stack.append(y)
    return out


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))
        self.rank = [0] * n

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, x: int, y: int) -> None:
        rx, ry = self.find(x), self.find(y)
        if rx == ry:
            return
        if self.rank[rx] < self.rank[ry]:
            rx, ry = ry, rx
        self.parent[ry] = rx
        if self.rank[rx] == self.rank[ry]:
            self.rank[rx] += 1


@dataclass
class Component:
    vertices: list[int]
    loop: list[int] | None  # None: undetermined (contains a censored vertex)
    loop_center: tuple[float, float] | None

    @property
    def determined(self) -> bool:
        return self.loop is not None

    @property
    def size(self) -> int:
        return len(self.vertices)


@dataclass
class ClusterDecomposition:
    component: np.ndarray
    components: list[Component]

    @property
    def n_components(self) -> int:
        return len(self.components)

    def determined(self) -> list[Component]:
        return [c for c in self.components if c.determined]

    def in_loop(self) -> np.ndarray:
        mask = np.zeros(len(self.component), dtype=bool)
        for c in self.components:
            if c.loop:
                mask[c.loop] = True
        return mask

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CLUSTER_CSV_HEADER)
        loop_mask = self.in_loop()
        for v, cid in enumerate(self.component.tolist()):
            comp = self.components[cid]
            size = len(comp.loop) if comp.loop else "undetermined"
            w.writerow([v, cid, int(loop_mask[v]), size])
        return buf.getvalue()


CLUSTER_CSV_HEADER = ["vertex", "component", "in_loop", "loop_size"]


def clusters(g: OutdegreeGraph) -> ClusterDecomposition:
    """Weak components; each holds one loop, or is a tree hanging from a censored vertex."""
    n = g.n
    uf = _UnionFind(n)
    out = g.out.tolist()
    for v, w in enumerate(out):
        if w != CENSORED:
            uf.union(v, w)
    roots: dict[int, int] = {}
    comp = np.empty(n, dtype=np.int64)
    members: list[list[int]] = []
    for v in range(n):
        r = uf.find(v)
        if r not in roots:
            roots[r] = len(members)
            members.append([])
        comp[v] = roots[r]
        members[roots[r]].append(v)
    components = []
    for verts in members:
        if any(out[v] == CENSORED for v in verts):
            components.append(Component(verts, None, None))
            continue
        loop = forward(g, verts[0]).loop
        center = None
        if g.germs is not None:
            cx, cy = g.germs[loop].mean(axis=0)
            center = (float(cx), float(cy))
        components.append(Component(verts, loop, center))
    return ClusterDecomposition(comp, components)
