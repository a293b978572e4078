"""NLS energy and action functionals, the multiplier formula and the Nehari scaling.

Gradients are Riesz representatives in the lumped L^2 inner product
``<f, g> = sum_i m_i f_i g_i``, so a gradient step is mesh independent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import GraphFunction, norm_L2_sq, norm_Lp_p, seminorm_H1_sq


class NehariError(ValueError):
    """The Nehari scaling is undefined (non-positive quadratic part)."""


@dataclass(frozen=True)
class FunctionalValue:
    energy: float
    action: float
    mass: float
    lp_norm_p: float
    h1_seminorm_sq: float


def evaluate(u: GraphFunction, p: float, lam: float = 0.0) -> FunctionalValue:
    d = seminorm_H1_sq(u)
    m = norm_L2_sq(u)
    q = norm_Lp_p(u, p)
    energy = 0.5 * d - q / p
    return FunctionalValue(energy, energy + 0.5 * lam * m, m, q, d)


def energy(u: GraphFunction, p: float) -> float:
    return 0.5 * seminorm_H1_sq(u) - norm_Lp_p(u, p) / p


def action(u: GraphFunction, p: float, lam: float) -> float:
    return 0.5 * seminorm_H1_sq(u) + 0.5 * lam * norm_L2_sq(u) - norm_Lp_p(u, p) / p


def lagrange_lambda(u: GraphFunction, p: float) -> float:
    """(||u||_p^p - ||u'||^2) / ||u||^2."""
    m = norm_L2_sq(u)
    if m <= 0:
        raise ValueError("multiplier undefined for a function of zero mass")
    return (norm_Lp_p(u, p) - seminorm_H1_sq(u)) / m


def sigma(u: GraphFunction, p: float, lam: float) -> float:
    """Factor s > 0 with s*u on the Nehari manifold."""
    num = seminorm_H1_sq(u) + lam * norm_L2_sq(u)
    if not num > 0:
        raise NehariError(f"||u'||^2 + lambda ||u||^2 = {num} is not positive")
    den = norm_Lp_p(u, p)
    if not den > 0:
        raise NehariError("||u||_p vanishes")
    return (num / den) ** (1 / (p - 2))


def nehari_project(u: GraphFunction, p: float, lam: float) -> GraphFunction:
    return u * sigma(u, p, lam)


def nehari_residual(u: GraphFunction, p: float, lam: float) -> float:
    return seminorm_H1_sq(u) + lam * norm_L2_sq(u) - norm_Lp_p(u, p)


def nonlinearity(values: np.ndarray, p: float) -> np.ndarray:
    return np.abs(values) ** (p - 2) * values


def grad_energy(u: GraphFunction, p: float) -> GraphFunction:
    m = u.mesh
    g = (m.stiffness @ u.values) / m.mass - nonlinearity(u.values, p)
    return GraphFunction(m, g)


def grad_action(u: GraphFunction, p: float, lam: float) -> GraphFunction:
    g = grad_energy(u, p)
    g.values += lam * u.values
    return g


def inner(u: GraphFunction, v: GraphFunction) -> float:
    """Lumped L^2 inner product."""
    return float(u.mesh.mass @ (u.values * v.values))
