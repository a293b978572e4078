"""Metric graphs: edges with lengths glued at vertices, plus the named graph zoo.

Half-lines are stored truncated: their far end is a synthetic node carrying a
homogeneous Dirichlet value, never a graph vertex.  The same mechanism
(``head=None``) is used for the Dirichlet rail stubs closing a ladder window.
"""

from __future__ import annotations

import math
import re
from collections import deque
from dataclasses import dataclass, field
from typing import Sequence

BOUNDED = "bounded"
HALFLINE = "halfline"

DEFAULT_TRUNCATION = 40.0


class GraphError(ValueError):
    """Invalid graph description."""


@dataclass(frozen=True)
class Edge:
    """One edge from ``tail`` to ``head``.

    ``head`` is ``None`` when the far end is a Dirichlet node outside the
    vertex set (always the case for half-lines).  For half-lines ``length``
    is the truncation length.
    """

    id: int
    tail: int
    head: int | None
    length: float
    kind: str = BOUNDED

    @property
    def is_loop(self) -> bool:
        return self.head is not None and self.head == self.tail

    @property
    def is_halfline(self) -> bool:
        return self.kind == HALFLINE

    @property
    def truncation(self) -> float | None:
        return self.length if self.is_halfline else None


@dataclass(frozen=True)
class MetricGraph:
    n_vertices: int
    edges: tuple[Edge, ...]
    name: str = "custom"
    adjacency: tuple[tuple[tuple[int, int], ...], ...] = field(
        init=False, repr=False, compare=False
    )

    def __post_init__(self):
        if self.n_vertices < 1:
            raise GraphError("graph needs at least one vertex")
        if not self.edges:
            raise GraphError("graph needs at least one edge")
        adj: list[list[tuple[int, int]]] = [[] for _ in range(self.n_vertices)]
        for i, e in enumerate(self.edges):
            if e.id != i:
                raise GraphError(f"edge ids must be dense 0..E-1, got {e.id} at position {i}")
            if not (e.length > 0 and math.isfinite(e.length)):
                raise GraphError(f"edge {e.id}: length must be positive, got {e.length}")
            if e.kind not in (BOUNDED, HALFLINE):
                raise GraphError(f"edge {e.id}: unknown kind {e.kind!r}")
            if e.kind == HALFLINE and e.head is not None:
                raise GraphError(f"edge {e.id}: a half-line attaches to exactly one vertex")
            for end, v in ((0, e.tail), (1, e.head)):
                if v is None:
                    continue
                if not 0 <= v < self.n_vertices:
                    raise GraphError(f"edge {e.id}: vertex {v} out of range")
                adj[v].append((e.id, end))
        object.__setattr__(self, "adjacency", tuple(tuple(a) for a in adj))
        if not self.is_connected():
            raise GraphError("graph is not connected")

    @property
    def vertices(self) -> range:
        return range(self.n_vertices)

    def degree(self, v: int) -> int:
        # a loop appears twice in the adjacency list of its vertex
        return len(self.adjacency[v])

    def is_connected(self) -> bool:
        seen = {0}
        queue = deque([0])
        while queue:
            v = queue.popleft()
            for eid, end in self.adjacency[v]:
                e = self.edges[eid]
                w = e.head if end == 0 else e.tail
                if w is not None and w not in seen:
                    seen.add(w)
                    queue.append(w)
        return len(seen) == self.n_vertices

    @property
    def total_length(self) -> float:
        return math.fsum(e.length for e in self.edges)

    @property
    def halflines(self) -> list[Edge]:
        return [e for e in self.edges if e.is_halfline]

    def with_truncation(self, truncation: float) -> "MetricGraph":
        """Same graph with every half-line truncated at ``truncation``."""
        if truncation <= 0:
            raise GraphError("truncation must be positive")
        edges = tuple(
            Edge(e.id, e.tail, e.head, truncation, e.kind) if e.is_halfline else e
            for e in self.edges
        )
        return MetricGraph(self.n_vertices, edges, self.name)


def has_pendant(g: MetricGraph) -> bool:
    """True iff some degree-1 vertex is the endpoint of a bounded edge."""
    for v in g.vertices:
        if g.degree(v) == 1:
            eid, _ = g.adjacency[v][0]
            if not g.edges[eid].is_halfline:
                return True
    return False


def is_compact(g: MetricGraph) -> bool:
    return not any(e.is_halfline for e in g.edges)


def scale(g: MetricGraph, factor: float) -> MetricGraph:
    """Dilate every edge (and half-line truncation) by ``factor``."""
    if not factor > 0:
        raise GraphError(f"scale factor must be positive, got {factor}")
    edges = tuple(Edge(e.id, e.tail, e.head, e.length * factor, e.kind) for e in g.edges)
    return MetricGraph(g.n_vertices, edges, g.name)


# ---------------------------------------------------------------------------
# named graphs


class _Builder:
    def __init__(self):
        self.edges: list[Edge] = []
        self.n = 0

    def vertex(self) -> int:
        self.n += 1
        return self.n - 1

    def edge(self, a: int, b: int | None, length: float, kind: str = BOUNDED) -> None:
        self.edges.append(Edge(len(self.edges), a, b, float(length), kind))

    def halfline(self, a: int, trunc: float) -> None:
        self.edge(a, None, trunc, HALFLINE)

    def build(self, name: str) -> MetricGraph:
        return MetricGraph(self.n, tuple(self.edges), name)


# name -> (number of bounded lengths, default lengths, number of half-lines)
_DEFAULTS: dict[str, tuple[float, ...]] = {
    "segment": (1.0,),
    "circle": (2.0,),
    "tadpole": (2 * math.pi,),
    "tgraph": (1.0,),
    "signpost": (2.0, 1.0),
    "fork2": (1.0, 1.0),
    "fork3": (1.0, 1.0, 1.0),
    "line": (),
    "halfline": (),
}
_HALFLINES = {"tadpole": 1, "tgraph": 2, "signpost": 2, "fork2": 1, "fork3": 1, "line": 2, "halfline": 1}

NAMED_GRAPHS = ("segment", "circle", "star", "tadpole", "tgraph", "signpost",
                "fork2", "fork3", "ladder", "line", "halfline")

_NAME_RE = re.compile(r"^\s*([a-z0-9]+)\s*(?:\(\s*(\d+)\s*\))?\s*$")


def parse_name(name: str) -> tuple[str, int | None]:
    m = _NAME_RE.match(name)
    if not m:
        raise GraphError(f"cannot parse graph name {name!r}")
    base, arg = m.group(1), m.group(2)
    return base, (int(arg) if arg is not None else None)


def build_named(name: str, params: Sequence[float] = (), trunc: float | None = None) -> MetricGraph:
    """Build one of the named graphs.

    ``name`` may carry an integer argument: ``star(3)``, ``ladder(200)``.
    ``params`` lists the bounded edge lengths in builder order; for graphs
    with half-lines one extra trailing entry is read as the truncation
    length, unless ``trunc`` is passed explicitly.

    >>> g = build_named("tadpole", [2 * math.pi, 40])
    >>> g.degree(0), len(g.edges)
    (3, 2)
    """
    base, arg = parse_name(name)
    params = [float(x) for x in params]
    if any(not (x > 0 and math.isfinite(x)) for x in params):
        raise GraphError(f"all lengths must be positive, got {params}")
    if trunc is not None and not trunc > 0:
        raise GraphError(f"truncation must be positive, got {trunc}")

    if base == "star":
        k = 3 if arg is None else arg
        if k < 1:
            raise GraphError("star(k) needs k >= 1")
        lengths = params or [1.0] * k
        if len(lengths) == 1:
            lengths = lengths * k
        if len(lengths) != k:
            raise GraphError(f"star({k}) takes 1 or {k} lengths, got {len(lengths)}")
        b = _Builder()
        c = b.vertex()
        for L in lengths:
            b.edge(c, b.vertex(), L)
        return b.build(f"star({k})")

    if base == "ladder":
        n = 10 if arg is None else arg
        if n < 1:
            raise GraphError("ladder(N) needs N >= 1")
        if params:
            raise GraphError("ladder(N) has unit edges and takes no lengths")
        return _ladder(n)

    if base not in _DEFAULTS:
        raise GraphError(f"unknown graph {name!r}; known: {', '.join(NAMED_GRAPHS)}")
    if arg is not None:
        raise GraphError(f"{base} takes no integer argument")

    n_len = len(_DEFAULTS[base])
    n_half = _HALFLINES.get(base, 0)
    if len(params) > n_len + (1 if n_half else 0):
        raise GraphError(f"{base} takes at most {n_len + (1 if n_half else 0)} parameters")
    lengths = list(params[:n_len]) + list(_DEFAULTS[base][len(params[:n_len]):])
    t = trunc
    if t is None:
        t = params[n_len] if len(params) > n_len else DEFAULT_TRUNCATION

    b = _Builder()
    if base == "segment":
        b.edge(b.vertex(), b.vertex(), lengths[0])
    elif base == "circle":
        v = b.vertex()
        b.edge(v, v, lengths[0])
    elif base == "tadpole":
        v = b.vertex()
        b.edge(v, v, lengths[0])
        b.halfline(v, t)
    elif base == "tgraph":
        j, tip = b.vertex(), b.vertex()
        b.edge(j, tip, lengths[0])
        b.halfline(j, t)
        b.halfline(j, t)
    elif base == "signpost":
        top, j = b.vertex(), b.vertex()
        b.edge(top, top, lengths[0])
        b.edge(top, j, lengths[1])
        b.halfline(j, t)
        b.halfline(j, t)
    elif base in ("fork2", "fork3"):
        j = b.vertex()
        for L in lengths:
            b.edge(j, b.vertex(), L)
        b.halfline(j, t)
    elif base == "line":
        v = b.vertex()
        b.halfline(v, t)
        b.halfline(v, t)
    elif base == "halfline":
        b.halfline(b.vertex(), t)
    return b.build(base)


def _ladder(n: int) -> MetricGraph:
    """Window of the unit ladder: rungs at k = 1..N, rails k = 0..N+1.

    Rail endpoints at k = 0 and k = N+1 are Dirichlet nodes, so the window
    has N rungs + 2(N+1) rails = 3N+2 unit edges and 2N vertices of degree 3.
    """
    b = _Builder()
    bottom = [b.vertex() for _ in range(n)]
    top = [b.vertex() for _ in range(n)]
    for rail in (bottom, top):
        b.edge(rail[0], None, 1.0)
        for k in range(n - 1):
            b.edge(rail[k], rail[k + 1], 1.0)
        b.edge(rail[-1], None, 1.0)
    for k in range(n):
        b.edge(bottom[k], top[k], 1.0)
    return b.build(f"ladder({n})")
