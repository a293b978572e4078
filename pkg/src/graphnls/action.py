"""Action ground states at fixed frequency: descent of the Nehari-reduced action."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import baselines
from .config import SolverConfig
from .descent import Preconditioner, Step, descend
from .functionals import nonlinearity
from .graph import scale
from .mesh import GraphFunction, Mesh, nlse_residual
from .parallel import pmap
from .starts import initial_family


@dataclass
class ActionRecord:
    state: GraphFunction
    lam: float
    mass: float
    action: float
    lp_norm_p: float
    h1_seminorm_sq: float
    nlse_interior_residual: float
    kirchhoff_residual: float
    converged: bool
    iterations: int = 0
    stationarity: float = math.nan
    start: str = "given"
    history: list[float] = field(default_factory=list, repr=False)

    def summary(self) -> dict:
        return {
            "start": self.start,
            "lambda": self.lam,
            "mass": self.mass,
            "action": self.action,
            "lp_norm_p": self.lp_norm_p,
            "nlse_interior_residual": self.nlse_interior_residual,
            "kirchhoff_residual": self.kirchhoff_residual,
            "converged": self.converged,
            "iterations": self.iterations,
            "stationarity": self.stationarity,
        }


@dataclass
class ActionMultistart:
    records: list[ActionRecord]
    best: ActionRecord
    near_optimal: list[ActionRecord]
    m_minus: float
    m_plus: float

    @property
    def j_level(self) -> float:
        return self.best.action


class _NehariProblem:
    """Cached operator ``A + lam*M`` for one mesh and frequency."""

    def __init__(self, mesh: Mesh, p: float, lam: float):
        if not lam > 0:
            raise ValueError(
                f"lambda must be positive, got {lam}: the action level is 0 and not attained"
            )
        if not p > 2:
            raise ValueError(f"p must exceed 2, got {p}")
        self.mesh, self.p, self.lam = mesh, p, lam
        self.P = Preconditioner(mesh.stiffness, mesh.mass, lam)
        self.c = 0.5 - 1 / p

    def quad(self, v):
        return self.P.inner(v, v)

    def lp(self, v):
        return float(self.mesh.mass @ np.abs(v) ** self.p)

    def retract(self, v):
        num = self.quad(v)
        # cannot fail for lam > 0 and v != 0
        assert num > 0, "Nehari numerator must be positive for lambda > 0"
        return v * (num / self.lp(v)) ** (1 / (self.p - 2))

    def objective(self, x):
        # x is Nehari-exact, so J(x) = (1/2 - 1/p) ||x||_p^p
        return self.c * self.lp(x)

    def gradient(self, x):
        m = self.mesh.mass
        g = (self.P.matrix @ x) / m - nonlinearity(x, self.p)
        d = self.P.solve_mass(g)
        slope = max(float(m @ (g * d)), 0.0)
        return Step(g, d, slope, math.sqrt(slope / self.quad(x)))


def minimize_action(
    g,
    p: float,
    lam: float,
    cfg: SolverConfig = SolverConfig(),
    init: GraphFunction | np.ndarray | None = None,
    start: str = "given",
    _problem: _NehariProblem | None = None,
) -> ActionRecord:
    """Minimize the action on the Nehari manifold at frequency ``lam`` > 0."""
    if isinstance(init, GraphFunction):
        mesh = init.mesh
    elif _problem is not None:
        mesh = _problem.mesh
    else:
        mesh = g if isinstance(g, Mesh) else Mesh(g, cfg.target_h)
    prob = _problem if _problem is not None and _problem.mesh is mesh else _NehariProblem(mesh, p, lam)
    if init is None:
        x0 = initial_family(mesh, _profile(p, lam, mesh), 0, 1, cfg.seed)[-1][1]
        start = "random0"
    else:
        x0 = np.array(init.values if isinstance(init, GraphFunction) else init, dtype=float)
    if x0.max() < -x0.min():
        x0 = -x0
    x = prob.retract(x0)
    res = descend(x, prob.objective, prob.gradient, prob.retract, prob.P, cfg)
    x = res.x
    if x.max() < -x.min():
        x = -x
    u = GraphFunction(mesh, x)
    m = mesh.mass
    r = nlse_residual(u, lam, p)
    lp = prob.lp(x)
    return ActionRecord(
        state=u,
        lam=lam,
        mass=float(m @ (x * x)),
        action=prob.c * lp,
        lp_norm_p=lp,
        h1_seminorm_sq=float(x @ (mesh.stiffness @ x)),
        nlse_interior_residual=r.interior_inf_norm,
        kirchhoff_residual=r.kirchhoff_inf_norm,
        converged=res.converged,
        iterations=res.iterations,
        stationarity=res.stationarity,
        start=start,
        history=res.history,
    )


def _profile(p: float, lam: float, mesh: Mesh):
    return lambda d: baselines.soliton_p(p, lam, d)


def multistart_action(
    g,
    p: float,
    lam: float,
    cfg: SolverConfig = SolverConfig(),
    extra_starts: list[tuple[str, np.ndarray]] | None = None,
) -> ActionMultistart:
    mesh = g if isinstance(g, Mesh) else Mesh(g, cfg.target_h)
    prob = _NehariProblem(mesh, p, lam)
    starts = list(extra_starts or []) + initial_family(
        mesh, _profile(p, lam, mesh), cfg.max_bumps, cfg.restarts, cfg.seed
    )
    records = pmap(
        lambda item: minimize_action(mesh, p, lam, cfg, init=item[1], start=item[0], _problem=prob),
        starts,
    )
    return summarize_action(records, cfg)


def summarize_action(records: list[ActionRecord], cfg: SolverConfig) -> ActionMultistart:
    pool = [r for r in records if r.converged] or records
    best = min(pool, key=lambda r: r.action)
    near = [r for r in pool if r.action <= best.action * (1 + cfg.action_tol)]
    masses = [r.mass for r in near]
    return ActionMultistart(records, best, near, min(masses), max(masses))


def scaling_transport(u: GraphFunction, lam: float) -> GraphFunction:
    """u_lam(x) = lam^{-1/4} u(x / sqrt(lam)) on the dilated graph sqrt(lam)*G."""
    if not lam > 0:
        raise ValueError("lambda must be positive")
    s = math.sqrt(lam)
    src = u.mesh
    dst = Mesh(scale(src.graph, s), src.target_h * s)
    if dst.n_dofs == src.n_dofs and all(
        a.n_nodes == b.n_nodes for a, b in zip(src.edges, dst.edges)
    ):
        return GraphFunction(dst, lam**-0.25 * u.values)
    return dst.interpolate(
        lambda eid, t: lam**-0.25 * np.interp(t / s, src.edges[eid].arclength, u.edge_values(eid))
    )
