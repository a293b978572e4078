"""Deterministic and seeded initial guesses for multistart runs."""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .graph import is_compact
from .mesh import Mesh


def bump_centers(mesh: Mesh, limit: int) -> list[tuple[str, int]]:
    """Every vertex and every edge midpoint, thinned evenly to ``limit`` entries."""
    g = mesh.graph
    centers = [(f"vertex{v}", v) for v in g.vertices]
    for e in g.edges:
        centers.append((f"edge{e.id}", mesh.dof_at(e.id, e.length / 2)))
    if len(centers) > limit:
        idx = np.unique(np.linspace(0, len(centers) - 1, limit).round().astype(int))
        centers = [centers[i] for i in idx]
    return centers


def initial_family(
    mesh: Mesh,
    profile: Callable[[np.ndarray], np.ndarray] | Sequence[Callable[[np.ndarray], np.ndarray]],
    max_bumps: int,
    restarts: int,
    seed: int,
) -> list[tuple[str, np.ndarray]]:
    """Constant (compact graphs), centred bumps, then seeded random positive fields.

    ``profile(distance)`` shapes each bump; amplitudes are irrelevant because
    the solvers rescale onto their constraint set.  A list of profiles puts
    one bump of each width at every centre (random starts use the first).
    """
    profiles = list(profile) if isinstance(profile, (list, tuple)) else [profile]
    profile = profiles[0]
    out: list[tuple[str, np.ndarray]] = []
    g = mesh.graph
    if is_compact(g) and all(e.head is not None for e in g.edges):
        out.append(("constant", np.ones(mesh.n_dofs)))
    for label, dof in bump_centers(mesh, max_bumps):
        d = mesh.distances_from(dof)
        for k, prof in enumerate(profiles):
            out.append((label if k == 0 else f"{label}w{k}", prof(d)))
    for k in range(restarts):
        rng = np.random.default_rng([seed, k])
        n_bumps = int(rng.integers(1, 4))
        x = np.zeros(mesh.n_dofs)
        for _ in range(n_bumps):
            c = int(rng.integers(mesh.n_dofs))
            x += rng.uniform(0.3, 1.0) * profile(mesh.distances_from(c))
        x *= 1 + 0.05 * rng.uniform(-1, 1, mesh.n_dofs)
        out.append((f"random{k}", x))
    return out
