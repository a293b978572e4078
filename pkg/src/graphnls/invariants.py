"""Algebraic and variational identities checked on random test functions.

Used by the ``verify`` command and the test-suite.  Every check returns an
:class:`InvariantResult`; nothing here raises on a failed identity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import functionals as F
from . import rearrange
from .graph import MetricGraph, build_named
from .mesh import GraphFunction, Mesh, norm_L2_sq, norm_Lp_p, seminorm_H1_sq

# named graphs with short truncations: the identities do not care about tails
VERIFY_GRAPHS = (
    "segment", "circle", "star(3)", "tadpole", "tgraph", "signpost",
    "fork2", "fork3", "ladder(4)", "line", "halfline",
)
VERIFY_POWERS = (3.0, 4.0, 5.5, 6.0)


@dataclass(frozen=True)
class InvariantResult:
    name: str
    graph: str
    p: float
    error: float
    tol: float

    @property
    def ok(self) -> bool:
        return bool(self.error <= self.tol)


def random_bumps(mesh: Mesh, rng: np.random.Generator, n_bumps: int = 3) -> GraphFunction:
    """Positive sum of Gaussian bumps at random nodes, widths O(1)."""
    x = np.zeros(mesh.n_dofs)
    for _ in range(n_bumps):
        c = int(rng.integers(mesh.n_dofs))
        w = rng.uniform(0.3, 1.5)
        x += rng.uniform(0.5, 1.5) * np.exp(-(mesh.distances_from(c) / w) ** 2)
    return GraphFunction(mesh, x)


def _rel(a: float, b: float) -> float:
    return abs(a - b) / max(abs(a), abs(b), 1e-300)


def check_all(
    g: MetricGraph,
    p: float,
    h: float = 0.05,
    seed: int = 0,
    lam: float = 1.0,
) -> list[InvariantResult]:
    mesh = Mesh(g, h)
    rng = np.random.default_rng([seed, int(round(p * 1000))])
    u = random_bumps(mesh, rng)
    name = g.name
    out: list[InvariantResult] = []

    # Nehari projection is exact to round-off
    w = F.nehari_project(u, p, lam)
    scale = seminorm_H1_sq(w) + lam * norm_L2_sq(w)
    out.append(InvariantResult("nehari_projection", name, p, abs(F.nehari_residual(w, p, lam)) / scale, 1e-10))

    # action on the Nehari manifold, both closed forms
    c = 0.5 - 1 / p
    j = F.action(w, p, lam)
    err = max(_rel(j, c * norm_Lp_p(w, p)), _rel(j, c * scale))
    out.append(InvariantResult("action_on_nehari", name, p, err, 1e-8))

    # multiplier identity lam_hat * mu = (1 - 2/p) ||u||_p^p - 2 E
    lam_hat = F.lagrange_lambda(u, p)
    lhs = lam_hat * norm_L2_sq(u)
    rhs = (1 - 2 / p) * norm_Lp_p(u, p) - 2 * F.energy(u, p)
    out.append(InvariantResult("multiplier_identity", name, p, abs(lhs - rhs) / max(abs(rhs), norm_L2_sq(u)), 1e-10))

    # gradients against central differences in a random direction
    v = GraphFunction(mesh, rng.standard_normal(mesh.n_dofs) * u.values.max())
    eps = 1e-5
    errs = []
    for grad, fun in (
        (F.grad_energy(u, p), lambda z: F.energy(z, p)),
        (F.grad_action(u, p, lam), lambda z: F.action(z, p, lam)),
    ):
        fd = (fun(u + v * eps) - fun(u + v * -eps)) / (2 * eps)
        errs.append(_rel(F.inner(grad, v), fd))
    out.append(InvariantResult("gradient_fd", name, p, max(errs), 1e-6))

    # rearrangements keep every L^q norm and the distribution function
    mono = rearrange.monotone_rearrangement(u)
    sym = rearrange.symmetric_rearrangement(u)
    err = 0.0
    for q in (2.0, 4.0, 6.0, p):
        ref = rearrange.p1_norm_p_p(u, q)
        err = max(err, _rel(ref, mono.norm_p_p(q)), _rel(ref, sym.norm_p_p(q)))
    err = max(err, rearrange.distribution_mismatch(u, mono) / g.total_length)
    out.append(InvariantResult("equimeasurability", name, p, err, 1e-3))

    # Polya-Szego: monotone kind always; symmetric kind when u takes a.e. value twice
    ps = [rearrange.polya_szego_check(u, rearrange.MONOTONE)]
    if rearrange.attains_twice(u):
        ps.append(rearrange.polya_szego_check(u, rearrange.SYMMETRIC))
    excess = max(max(r.lhs - r.rhs, 0.0) / max(r.rhs, 1e-300) for r in ps)
    out.append(InvariantResult("polya_szego", name, p, excess, 1e-9))
    return out


def verify_graph(name: str, powers=VERIFY_POWERS, h: float = 0.05, seed: int = 0, trunc: float = 10.0):
    g = build_named(name, trunc=trunc) if not name.startswith("ladder") else build_named(name)
    results = []
    for p in powers:
        results += check_all(g, p, h, seed)
    return results
