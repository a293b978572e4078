"""Closed-form reference objects: solitons, critical masses, explicit levels."""

from __future__ import annotations

import math

import numpy as np
from scipy.special import beta as beta_fn

from .graph import MetricGraph, has_pendant, is_compact
from .mesh import GraphFunction, Mesh

MU_R = math.sqrt(3) * math.pi / 2
MU_RPLUS = MU_R / 2

# critical masses of the noncompact named graphs at p = 6 (threshold below
# which the critical energy level is 0 and not attained; see the zoo)
_NONCOMPACT_CRITICAL = {
    "tadpole": MU_RPLUS,
    "tgraph": MU_RPLUS,
    "fork2": MU_RPLUS,
    "fork3": MU_RPLUS,
    "line": MU_R,
    "halfline": MU_RPLUS,
}


def phi1(x):
    """Positive solution of u'' + u^5 = u on the line, peaked at 0."""
    e = np.exp(-2 * np.abs(np.asarray(x, dtype=float)))
    return np.sqrt(math.sqrt(3) * 2 * e / (1 + e * e))


def phi1_second_derivative(x):
    """Hand-differentiated phi1'' (for checking the ODE pointwise)."""
    x = np.asarray(x, dtype=float)
    c = np.cosh(2 * x)
    t = np.tanh(2 * x)
    # phi1 = 3^{1/4} sech(2x)^{1/2}; phi1' = -3^{1/4} sech^{1/2} tanh
    # phi1'' = 3^{1/4} sech^{1/2} (t^2 - 2 sech^2)
    return 3**0.25 * c**-0.5 * (t * t - 2 / (c * c))


def soliton(lam: float, x):
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    return lam**0.25 * phi1(math.sqrt(lam) * np.asarray(x, dtype=float))


def half_soliton(lam: float, x):
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("half-soliton is defined on x >= 0")
    return soliton(lam, x)


def soliton_p(p: float, lam: float, x):
    """Positive solution of u'' + |u|^{p-2}u = lam*u on the line, for any p > 2."""
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    x = np.asarray(x, dtype=float)
    y = np.abs((p - 2) / 2 * math.sqrt(lam) * x)
    # sech written with decaying exponentials so far tails underflow to 0
    e = np.exp(-y)
    sech = 2 * e / (1 + e * e)
    return (p / 2 * lam * sech**2) ** (1 / (p - 2))


def soliton_mass_p(p: float, lam: float) -> float:
    """||soliton_p(p, lam)||_2^2 in closed form."""
    q = 2 / (p - 2)
    a = (p - 2) / 2 * math.sqrt(lam)
    # int sech^{2q}(a x) dx = B(q, 1/2) / a
    return (p / 2 * lam) ** q * beta_fn(q, 0.5) / a


def lambda_for_soliton_mass(p: float, mu: float) -> float:
    """Frequency of the line soliton with mass mu (p < 6)."""
    if p >= 6:
        raise ValueError("soliton mass does not determine lambda at p >= 6")
    m1 = soliton_mass_p(p, 1.0)
    return (mu / m1) ** (2 * (p - 2) / (6 - p))


def critical_mass(g: MetricGraph) -> float:
    if is_compact(g):
        return MU_RPLUS if has_pendant(g) else MU_R
    base = g.name.split("(")[0]
    if base in _NONCOMPACT_CRITICAL:
        return _NONCOMPACT_CRITICAL[base]
    raise ValueError(f"no critical mass known for noncompact graph {g.name!r}")


def j6_line(lam: float) -> float:
    return MU_R * lam / 2


def j6_halfline(lam: float) -> float:
    return MU_RPLUS * lam / 2


def phi_tilde(x):
    return phi1(math.sqrt(1.5) * np.asarray(x, dtype=float))


def ladder_limit_mass() -> float:
    return math.sqrt(6) * MU_R


def constant_state(mesh: Mesh, mu: float, p: float) -> tuple[GraphFunction, float]:
    """Constant function of mass mu on a compact graph and its energy."""
    g = mesh.graph
    if not is_compact(g) or any(e.head is None for e in g.edges):
        raise ValueError("constant states need a compact graph without Dirichlet ends")
    if not mu > 0:
        raise ValueError("mass must be positive")
    L = g.total_length
    kappa = math.sqrt(mu / L)
    energy = -(mu ** (p / 2)) / (p * L ** (p / 2 - 1))
    return mesh.function(np.full(mesh.n_dofs, kappa)), energy


def constants_table() -> dict[str, float]:
    return {
        "mu_R": MU_R,
        "mu_R+": MU_RPLUS,
        "phi1(0)": float(phi1(0.0)),
        "J6_R(1)": j6_line(1.0),
        "J6_R+(1)": j6_halfline(1.0),
        "ladder_limit_mass": ladder_limit_mass(),
        "phi_tilde_mass": math.sqrt(2 / 3) * MU_R,
    }
