"""P1 discretization of a metric graph.

Every edge gets a uniform mesh; nodes sitting on a graph vertex share one
global degree of freedom, so continuity at vertices is structural and the
Kirchhoff condition comes out as the natural condition of the assembled
stiffness form.  Dirichlet far-field nodes carry no DOF.

Quadrature is the composite trapezoid rule, which makes the mass matrix
diagonal (lumped) and ``||u||_p^p = sum_i m_i |u_i|^p``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np
import scipy.sparse as sp

from .graph import MetricGraph


@dataclass(frozen=True)
class EdgeMesh:
    edge_id: int
    n_nodes: int
    h: float
    dofs: np.ndarray  # global index per local node, -1 for a Dirichlet node

    @property
    def arclength(self) -> np.ndarray:
        return self.h * np.arange(self.n_nodes)


class Mesh:
    """Per-edge uniform meshes with shared vertex DOFs."""

    def __init__(self, graph: MetricGraph, target_h: float):
        if not target_h > 0:
            raise ValueError(f"target_h must be positive, got {target_h}")
        self.graph = graph
        self.target_h = float(target_h)
        next_dof = graph.n_vertices
        edges = []
        for e in graph.edges:
            n = max(2, math.ceil(e.length / target_h - 1e-9) + 1)
            if e.is_loop:
                n = max(n, 3)
            dofs = np.empty(n, dtype=np.int64)
            dofs[0] = e.tail
            dofs[-1] = -1 if e.head is None else e.head
            dofs[1:-1] = np.arange(next_dof, next_dof + n - 2)
            next_dof += n - 2
            edges.append(EdgeMesh(e.id, n, e.length / (n - 1), dofs))
        self.edges: tuple[EdgeMesh, ...] = tuple(edges)
        self.n_dofs = next_dof
        self._assemble()

    def _assemble(self) -> None:
        rows, cols, vals = [], [], []
        mass = np.zeros(self.n_dofs)
        for em in self.edges:
            a, b = em.dofs[:-1], em.dofs[1:]
            k = 1.0 / em.h
            for (i, j, s) in ((a, a, k), (b, b, k), (a, b, -k), (b, a, -k)):
                keep = (i >= 0) & (j >= 0)
                rows.append(i[keep])
                cols.append(j[keep])
                vals.append(np.full(int(keep.sum()), s))
            w = np.full(em.n_nodes, em.h)
            w[0] = w[-1] = em.h / 2
            inside = em.dofs >= 0
            np.add.at(mass, em.dofs[inside], w[inside])
        A = sp.coo_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(self.n_dofs, self.n_dofs),
        )
        self.stiffness: sp.csr_matrix = A.tocsr()
        self.mass: np.ndarray = mass

    @property
    def hmax(self) -> float:
        return max(em.h for em in self.edges)

    @cached_property
    def node_graph(self) -> sp.csr_matrix:
        """Adjacency of the DOFs weighted by interval length (for distances)."""
        rows, cols, vals = [], [], []
        for em in self.edges:
            a, b = em.dofs[:-1], em.dofs[1:]
            keep = (a >= 0) & (b >= 0) & (a != b)
            rows.append(a[keep])
            cols.append(b[keep])
            vals.append(np.full(int(keep.sum()), em.h))
        r, c, v = np.concatenate(rows), np.concatenate(cols), np.concatenate(vals)
        G = sp.coo_matrix((np.r_[v, v], (np.r_[r, c], np.r_[c, r])), shape=(self.n_dofs,) * 2)
        return G.tocsr()

    def distances_from(self, dof: int) -> np.ndarray:
        """Graph distance from one DOF to every DOF."""
        from scipy.sparse.csgraph import dijkstra

        return dijkstra(self.node_graph, directed=False, indices=dof)

    def dof_at(self, edge_id: int, s: float) -> int:
        """DOF of the node closest to arclength ``s`` on an edge (Dirichlet nodes skipped)."""
        em = self.edges[edge_id]
        j = int(np.clip(round(s / em.h), 0, em.n_nodes - 1))
        if em.dofs[j] < 0:
            j -= 1
        return int(em.dofs[j])

    def function(self, values) -> "GraphFunction":
        return GraphFunction(self, np.asarray(values, dtype=float))

    def interpolate(self, f: Callable[[int, np.ndarray], np.ndarray]) -> "GraphFunction":
        """Sample ``f(edge_id, arclength)`` at the nodes.

        Shared vertex DOFs take the value of the last edge that touches them;
        ``f`` is expected to be continuous.
        """
        values = np.zeros(self.n_dofs)
        for em in self.edges:
            vals = np.asarray(f(em.edge_id, em.arclength), dtype=float)
            inside = em.dofs >= 0
            values[em.dofs[inside]] = vals[inside]
        return GraphFunction(self, values)


def build_mesh(g: MetricGraph, target_h: float) -> Mesh:
    return Mesh(g, target_h)


@dataclass
class GraphFunction:
    """Continuous piecewise-linear function; one value per global DOF."""

    mesh: Mesh
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.mesh.n_dofs,):
            raise ValueError(f"expected {self.mesh.n_dofs} values, got {self.values.shape}")

    def __mul__(self, c: float) -> "GraphFunction":
        return GraphFunction(self.mesh, self.values * c)

    __rmul__ = __mul__

    def __add__(self, other: "GraphFunction") -> "GraphFunction":
        return GraphFunction(self.mesh, self.values + other.values)

    def edge_values(self, edge_id: int) -> np.ndarray:
        """Nodal values along one edge, Dirichlet ends included as 0."""
        em = self.mesh.edges[edge_id]
        out = np.zeros(em.n_nodes)
        inside = em.dofs >= 0
        out[inside] = self.values[em.dofs[inside]]
        return out

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["edge_id", "arclength", "value"])
            for em in self.mesh.edges:
                for s, v in zip(em.arclength, self.edge_values(em.edge_id)):
                    w.writerow([em.edge_id, repr(float(s)), repr(float(v))])


# ---------------------------------------------------------------------------
# norms


def norm_L2_sq(u: GraphFunction) -> float:
    v = u.values
    return float(u.mesh.mass @ (v * v))


def norm_Lp_p(u: GraphFunction, p: float) -> float:
    if not p > 2:
        raise ValueError(f"p must exceed 2, got {p}")
    return float(u.mesh.mass @ np.abs(u.values) ** p)


def seminorm_H1_sq(u: GraphFunction) -> float:
    v = u.values
    return float(v @ (u.mesh.stiffness @ v))


def norm_Linf(u: GraphFunction) -> float:
    return float(np.max(np.abs(u.values))) if u.values.size else 0.0


@dataclass(frozen=True)
class Residual:
    interior_inf_norm: float
    kirchhoff_inf_norm: float


def nlse_residual(u: GraphFunction, lam: float, p: float) -> Residual:
    """Strong-form residual of u'' + |u|^{p-2}u = lam*u with Kirchhoff vertices.

    Interior: centered second differences.  Kirchhoff: sum over incident
    edges of second-order one-sided outgoing derivatives.
    """
    mesh = u.mesh
    interior = 0.0
    flux = np.zeros(mesh.graph.n_vertices)
    for em in mesh.edges:
        w = u.edge_values(em.edge_id)
        h = em.h
        if em.n_nodes >= 3:
            mid = w[1:-1]
            r = (w[:-2] - 2 * mid + w[2:]) / h**2 + np.abs(mid) ** (p - 2) * mid - lam * mid
            interior = max(interior, float(np.max(np.abs(r))))
        e = mesh.graph.edges[em.edge_id]
        flux[e.tail] += _one_sided(w, h)
        if e.head is not None:
            flux[e.head] += _one_sided(w[::-1], h)
    return Residual(interior, float(np.max(np.abs(flux))))


def _one_sided(w: np.ndarray, h: float) -> float:
    if w.size >= 3:
        return (-3 * w[0] + 4 * w[1] - w[2]) / (2 * h)
    return (w[1] - w[0]) / h
