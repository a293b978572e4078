"""Energy ground states at prescribed mass: normalized gradient flow on the mass sphere."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import baselines
from .config import SolverConfig
from .descent import Preconditioner, Step, descend
from .functionals import action, energy, lagrange_lambda, nonlinearity
from .graph import MetricGraph
from .mesh import GraphFunction, Mesh, nlse_residual
from .parallel import pmap
from .starts import initial_family

log = logging.getLogger(__name__)


# states narrower than about two mesh cells (lam * h^2 above this) are lattice
# artefacts: near p = 6 the discrete energy has spikes with E ~ -1/h^2
RESOLUTION_LIMIT = 0.25


class UnboundedBelowError(RuntimeError):
    """Energy runs off to -infinity: mass above the critical threshold at p >= 6."""


@dataclass
class GroundStateRecord:
    state: GraphFunction
    mass: float
    lam: float
    energy: float
    action_at_lambda: float
    nlse_interior_residual: float
    kirchhoff_residual: float
    converged: bool
    iterations: int = 0
    stationarity: float = math.nan
    start: str = "given"
    restarts_used: int = 1
    history: list[float] = field(default_factory=list, repr=False)

    @property
    def resolved(self) -> bool:
        return self.lam * self.state.mesh.hmax**2 <= RESOLUTION_LIMIT

    def summary(self) -> dict:
        return {
            "start": self.start,
            "mass": self.mass,
            "lambda": self.lam,
            "energy": self.energy,
            "action_at_lambda": self.action_at_lambda,
            "nlse_interior_residual": self.nlse_interior_residual,
            "kirchhoff_residual": self.kirchhoff_residual,
            "converged": self.converged,
            "resolved": self.resolved,
            "iterations": self.iterations,
            "stationarity": self.stationarity,
        }


@dataclass
class EnergyMultistart:
    records: list[GroundStateRecord]
    best: GroundStateRecord
    near_optimal: list[GroundStateRecord]
    lambda_minus: float
    lambda_plus: float

    @property
    def energy(self) -> float:
        return self.best.energy


def _as_mesh(g: MetricGraph | Mesh, cfg: SolverConfig) -> Mesh:
    return g if isinstance(g, Mesh) else Mesh(g, cfg.target_h)


def _sign_normalize(x: np.ndarray) -> np.ndarray:
    return -x if x.max() < -x.min() else x


def minimize_energy(
    g: MetricGraph | Mesh,
    p: float,
    mu: float,
    cfg: SolverConfig = SolverConfig(),
    init: GraphFunction | np.ndarray | None = None,
    start: str = "given",
) -> GroundStateRecord:
    """Minimize the NLS energy over functions of mass ``mu``.

    Without ``init`` a seeded random positive field is used.  Raises
    :class:`UnboundedBelowError` when the energy collapses at p >= 6.
    """
    if not p > 2:
        raise ValueError(f"p must exceed 2, got {p}")
    if not mu > 0:
        raise ValueError(f"mass must be positive, got {mu}")
    if isinstance(init, GraphFunction):
        mesh = init.mesh
        x0 = init.values.copy()
    else:
        mesh = _as_mesh(g, cfg)
        if init is None:
            x0 = initial_family(mesh, _profile(p, mu, mesh), 0, 1, cfg.seed)[-1][1]
            start = "random0"
        else:
            x0 = np.asarray(init, dtype=float).copy()
    A, m = mesh.stiffness, mesh.mass

    def retract(x):
        return x * math.sqrt(mu / (m @ (x * x)))

    def objective(x):
        return 0.5 * (x @ (A @ x)) - (m @ np.abs(x) ** p) / p

    def lam_of(x):
        return ((m @ np.abs(x) ** p) - x @ (A @ x)) / (m @ (x * x))

    x = retract(_sign_normalize(x0))
    beta = max(lam_of(x), 0.1)

    def guard(x, f):
        if p >= 6 and f < -cfg.blowup_energy:
            raise UnboundedBelowError(
                f"energy {f:.3e} below -{cfg.blowup_energy:g} at mass {mu}: "
                "no ground state, level is -infinity"
            )

    iterations = 0
    history: list[float] = []
    for _phase in range(4):
        P = Preconditioner(A, m, beta)

        def gradient(x, P=P):
            g = (A @ x) / m - nonlinearity(x, p)
            Pg = P.solve_mass(g)
            Pu = P.solve_mass(x)
            d = Pg - (m @ (x * Pg)) / (m @ (x * Pu)) * Pu
            slope = max(float(m @ (g * d)), 0.0)
            return Step(g, d, slope, math.sqrt(slope / P.inner(x, x)))

        res = descend(x, objective, gradient, retract, P, cfg, guard)
        iterations += res.iterations
        history += res.history if not history else res.history[1:]
        x = res.x
        lam_now = lam_of(x)
        if res.converged or not (lam_now > 4 * beta or lam_now < beta / 4):
            break
        beta = max(lam_now, 0.1)

    u = GraphFunction(mesh, _sign_normalize(x))
    lam = lagrange_lambda(u, p)
    r = nlse_residual(u, lam, p)
    return GroundStateRecord(
        state=u,
        mass=float(m @ (u.values**2)),
        lam=lam,
        energy=energy(u, p),
        action_at_lambda=action(u, p, lam),
        nlse_interior_residual=r.interior_inf_norm,
        kirchhoff_residual=r.kirchhoff_inf_norm,
        converged=res.converged,
        iterations=iterations,
        stationarity=res.stationarity,
        start=start,
        history=history,
    )


def _profile(p: float, mu: float, mesh: Mesh):
    """Bump shapes for mass ``mu``.

    For p < 6 two widths: the line soliton of mass ``mu`` and the one of mass
    ``2*mu`` (a half-soliton of mass ``mu``, the shape at a pendant tip).
    """
    if p < 6:
        guesses = [baselines.lambda_for_soliton_mass(p, mu), baselines.lambda_for_soliton_mass(p, 2 * mu)]
    else:
        guesses = [1.0]
    L = mesh.graph.total_length
    lo, hi = (2.0 / L) ** 2, (0.2 / mesh.hmax) ** 2
    lams: list[float] = []
    for lam in guesses:
        lam = float(np.clip(lam, lo, hi))
        if not lams or lam > 2 * lams[-1]:
            lams.append(lam)
    return [lambda d, lam=lam: baselines.soliton_p(min(p, 6.0), lam, d) for lam in lams]


def multistart_energy(
    g: MetricGraph | Mesh,
    p: float,
    mu: float,
    cfg: SolverConfig = SolverConfig(),
    extra_starts: list[tuple[str, np.ndarray]] | None = None,
) -> EnergyMultistart:
    """Run the initial family (plus ``extra_starts``) and collect near-optimal minimizers."""
    mesh = _as_mesh(g, cfg)
    starts = list(extra_starts or []) + initial_family(
        mesh, _profile(p, mu, mesh), cfg.max_bumps, cfg.restarts, cfg.seed
    )

    def run(item):
        try:
            return minimize_energy(mesh, p, mu, cfg, init=item[1], start=item[0])
        except UnboundedBelowError as exc:
            return exc

    out = pmap(run, starts)
    blown = [r for r in out if isinstance(r, UnboundedBelowError)]
    if blown:
        # one collapsing start is enough: the level is -infinity
        raise blown[0]
    return summarize_energy(out, cfg)


def summarize_energy(records: list[GroundStateRecord], cfg: SolverConfig) -> EnergyMultistart:
    # unresolved spikes are excluded unless nothing else is available
    pool = (
        [r for r in records if r.converged and r.resolved]
        or [r for r in records if r.converged]
        or records
    )
    best = min(pool, key=lambda r: r.energy)
    near = [r for r in pool if r.energy <= best.energy + cfg.energy_tol]
    lams = [r.lam for r in near]
    for r in records:
        r.restarts_used = len(records)
    return EnergyMultistart(records, best, near, min(lams), max(lams))
