"""Branch tracing along frequency or mass grids, and detection of non-uniqueness.

Two signatures are searched for.  An inversion is a pair of frequencies
``lam1 < lam2`` with ``M^-(lam1) > M^+(lam2)``; at p = 6 it forces the
multiplier map of energy ground states to jump for p slightly below 6.
A Z-point is a mass carrying two energy ground states with different
multipliers; it is located by scanning the mass window for a jump of the
multiplier and then solving ``E_low(mu) = E_high(mu)`` between the two
branches by continuation.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .action import ActionMultistart, multistart_action
from .config import SolverConfig
from .energy import (
    EnergyMultistart,
    GroundStateRecord,
    UnboundedBelowError,
    minimize_energy,
    multistart_energy,
)
from .graph import MetricGraph
from .mesh import Mesh

log = logging.getLogger(__name__)

LAMBDA, MASS = "lambda", "mass"


@dataclass
class BranchPoint:
    """One grid point: level and the two ends of the branch map there."""

    x: float
    level: float
    minus: float
    plus: float
    converged: bool
    n_starts: int
    n_converged: int
    best_start: str = ""
    flag: str = ""
    level_lo: float = math.nan  # level at x*(1 - fd_delta), if requested
    level_hi: float = math.nan  # level at x*(1 + fd_delta)

    @property
    def ok(self) -> bool:
        return self.converged and not self.flag


@dataclass
class BranchTable:
    """Branch map on a grid.

    On the ``lambda`` axis the level is the action ground state level and
    ``minus``/``plus`` are M^-/M^+; on the ``mass`` axis the level is the
    energy and ``minus``/``plus`` are Lambda^-/Lambda^+.
    """

    axis: str
    p: float
    graph: str
    points: list[BranchPoint]
    cfg: SolverConfig
    fd_delta: float | None = None
    states: list[list[np.ndarray]] = field(default_factory=list, repr=False)

    def __post_init__(self):
        if self.axis not in (LAMBDA, MASS):
            raise ValueError(f"axis must be 'lambda' or 'mass', got {self.axis!r}")
        _check_grid([pt.x for pt in self.points])

    @property
    def grid(self) -> np.ndarray:
        return np.array([pt.x for pt in self.points])

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(pt, name) for pt in self.points], dtype=float)

    def rows(self) -> list[dict]:
        out = []
        for pt in self.points:
            row = asdict(pt)
            row[self.axis] = row.pop("x")
            out.append(row)
        return out

    def metadata(self) -> dict:
        return {
            "axis": self.axis,
            "p": self.p,
            "graph": self.graph,
            "fd_delta": self.fd_delta,
            "config": self.cfg.to_dict(),
        }

    def to_csv(self, path) -> Path:
        path = Path(path)
        rows = self.rows()
        with path.open("w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(rows[0]))
            w.writeheader()
            for r in rows:
                w.writerow({k: _fmt(v) for k, v in r.items()})
        return path


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return v


def _check_grid(grid: Sequence[float]):
    g = np.asarray(grid, dtype=float)
    if g.size == 0:
        raise ValueError("grid is empty")
    if np.any(~np.isfinite(g)) or np.any(g <= 0):
        raise ValueError("grid values must be positive and finite")
    if np.any(np.diff(g) <= 0):
        raise ValueError("grid must be strictly increasing")


@dataclass(frozen=True)
class InversionWitness:
    lambda1: float
    lambda2: float
    m_minus_at_1: float
    m_plus_at_2: float
    margin: float

    @property
    def gap(self) -> float:
        return self.m_minus_at_1 - self.m_plus_at_2

    def is_valid(self) -> bool:
        return 0 < self.lambda1 < self.lambda2 and self.gap >= self.margin > 0


@dataclass(frozen=True)
class ZPointWitness:
    p: float
    mass: float
    lambda_low: float
    lambda_high: float
    energy_gap: float
    energy_low: float = math.nan
    energy_high: float = math.nan
    h: float = math.nan

    def is_valid(self, cfg: SolverConfig) -> bool:
        return _distinct_lambda(self.lambda_low, self.lambda_high, cfg) and self.energy_gap < cfg.energy_tol


def _distinct_lambda(a: float, b: float, cfg: SolverConfig) -> bool:
    # relative tolerance, floored at 1 so that it is never looser than lambda_tol
    return b - a > cfg.lambda_tol * max(1.0, abs(a), abs(b))


# ---------------------------------------------------------------- tracing


def _mesh(g, cfg) -> Mesh:
    return g if isinstance(g, Mesh) else Mesh(g, cfg.target_h)


def _warm(states: list[np.ndarray]) -> list[tuple[str, np.ndarray]]:
    return [(f"warm{k}", s) for k, s in enumerate(states)]


def trace_action_branch(
    g: MetricGraph | Mesh,
    p: float,
    lambda_grid: Sequence[float],
    cfg: SolverConfig = SolverConfig(),
    fd_delta: float | None = None,
) -> BranchTable:
    """Action levels and M^-/M^+ along ``lambda_grid`` with continuation warm starts.

    With ``fd_delta`` the level is also computed at ``lam*(1 -+ fd_delta)``
    for local centred differences.
    """
    _check_grid(lambda_grid)
    mesh = _mesh(g, cfg)
    points, states = [], []
    prev: list[np.ndarray] = []
    for lam in map(float, lambda_grid):
        try:
            res = multistart_action(mesh, p, lam, cfg, extra_starts=_warm(prev))
        except Exception as exc:  # recorded, sweep continues
            log.warning("action solve failed at lambda=%g: %s", lam, exc)
            points.append(BranchPoint(lam, math.nan, math.nan, math.nan, False, 0, 0, flag=f"error: {exc}"))
            states.append([])
            continue
        pt = _action_point(lam, res)
        near = [r.state.values for r in res.near_optimal]
        if fd_delta:
            lo = multistart_action(mesh, p, lam * (1 - fd_delta), cfg, extra_starts=_warm(near))
            hi = multistart_action(mesh, p, lam * (1 + fd_delta), cfg, extra_starts=_warm(near))
            pt.level_lo, pt.level_hi = lo.j_level, hi.j_level
            if not (lo.best.converged and hi.best.converged):
                pt.flag = "fd_nonconverged"
        points.append(pt)
        states.append(near)
        prev = near
    return BranchTable(LAMBDA, p, mesh.graph.name, points, cfg, fd_delta, states)


def _action_point(lam: float, res: ActionMultistart) -> BranchPoint:
    return BranchPoint(
        x=lam,
        level=res.j_level,
        minus=res.m_minus,
        plus=res.m_plus,
        converged=res.best.converged,
        n_starts=len(res.records),
        n_converged=sum(r.converged for r in res.records),
        best_start=res.best.start,
    )


def trace_energy_branch(
    g: MetricGraph | Mesh,
    p: float,
    mass_grid: Sequence[float],
    cfg: SolverConfig = SolverConfig(),
) -> BranchTable:
    """Energy levels and Lambda^-/Lambda^+ along ``mass_grid``.

    Points where the energy is unbounded below (p = 6 above the threshold)
    are flagged ``unbounded_below`` with level ``-inf``.
    """
    _check_grid(mass_grid)
    mesh = _mesh(g, cfg)
    points, states = [], []
    prev: list[np.ndarray] = []
    for mu in map(float, mass_grid):
        try:
            res = multistart_energy(mesh, p, mu, cfg, extra_starts=_warm(prev))
        except UnboundedBelowError:
            points.append(BranchPoint(mu, -math.inf, math.nan, math.nan, False, 0, 0, flag="unbounded_below"))
            states.append([])
            continue
        except Exception as exc:
            log.warning("energy solve failed at mass=%g: %s", mu, exc)
            points.append(BranchPoint(mu, math.nan, math.nan, math.nan, False, 0, 0, flag=f"error: {exc}"))
            states.append([])
            continue
        pt = BranchPoint(
            x=mu,
            level=res.energy,
            minus=res.lambda_minus,
            plus=res.lambda_plus,
            converged=res.best.converged,
            n_starts=len(res.records),
            n_converged=sum(r.converged for r in res.records),
            best_start=res.best.start,
            flag="" if res.best.resolved else "unresolved",
        )
        near = [r.state.values for r in res.near_optimal]
        points.append(pt)
        states.append(near)
        prev = near
    return BranchTable(MASS, p, mesh.graph.name, points, cfg, None, states)


# ---------------------------------------------------------------- inversion


def find_inversion(table: BranchTable, margin: float | None = None) -> InversionWitness | None:
    """Pair ``i < j`` maximizing ``M^-(lam_i) - M^+(lam_j)``, if it reaches ``margin``.

    Only converged, unflagged points take part.  ``margin`` defaults to
    ``3 * mass_tol``.
    """
    if table.axis != LAMBDA:
        raise ValueError("find_inversion needs a table on the lambda axis")
    if margin is None:
        margin = 3 * table.cfg.mass_tol
    if not margin > 0:
        raise ValueError("margin must be positive")
    pts = [pt for pt in table.points if pt.ok]
    best = None
    for i, a in enumerate(pts):
        for b in pts[i + 1 :]:
            gap = a.minus - b.plus
            if gap >= margin and (best is None or gap > best[0]):
                best = (gap, a, b)
    if best is None:
        return None
    _, a, b = best
    return InversionWitness(a.x, b.x, a.minus, b.plus, margin)


def stable_inversion(
    g: MetricGraph | Mesh,
    p: float,
    lambda_grid: Sequence[float],
    cfg: SolverConfig = SolverConfig(),
    table: BranchTable | None = None,
) -> tuple[InversionWitness | None, InversionWitness | None]:
    """Inversion witness, and the one found again with every tolerance halved.

    Both must be non-None for the witness to count as stable.
    """
    table = table if table is not None else trace_action_branch(g, p, lambda_grid, cfg)
    first = find_inversion(table)
    if first is None:
        return None, None
    half = cfg.halved()
    again = find_inversion(trace_action_branch(g, p, lambda_grid, half))
    return first, again


def mass_window(table: BranchTable) -> tuple[float, float]:
    """Masses spanned by an action table: where the multiplier jump must be sought."""
    pts = [pt for pt in table.points if pt.ok]
    if not pts:
        raise ValueError("table has no converged points")
    return min(pt.minus for pt in pts), max(pt.plus for pt in pts)


# ---------------------------------------------------------------- Z-points


@dataclass
class _Probe:
    mu: float
    best: GroundStateRecord | None  # best resolved minimizer, None if all were unresolved
    res: EnergyMultistart

    @property
    def lam(self) -> float:
        return self.best.lam if self.best is not None else math.inf


def _probe(mesh, p, mu, cfg, warm: list[np.ndarray]) -> _Probe:
    res = multistart_energy(mesh, p, mu, cfg, extra_starts=_warm(warm))
    ok = [r for r in res.records if r.converged and r.resolved]
    return _Probe(mu, min(ok, key=lambda r: r.energy) if ok else None, res)


def _follow(mesh, p, mu, cfg, rec: GroundStateRecord) -> GroundStateRecord | None:
    """Continue one branch to mass ``mu`` from the state ``rec``."""
    r = minimize_energy(mesh, p, mu, cfg, init=rec.state.values, start=rec.start)
    return r if r.converged and r.resolved else None


def find_z_points(
    g: MetricGraph | Mesh,
    p: float,
    window: tuple[float, float],
    cfg: SolverConfig = SolverConfig(),
    n_scan: int = 17,
    max_steps: int = 60,
    masses: Sequence[float] | None = None,
    max_jumps: int = 3,
) -> list[ZPointWitness]:
    """Masses in ``window`` where two energy ground states have distinct multipliers.

    The window is scanned for a jump of the ground-state multiplier; the jump
    is bracketed by bisection (classifying each trial mass by whether its
    best state continues the low branch) and then located by solving
    ``E_low = E_high`` between the two continued branches.  Each witness is
    re-checked by a full multistart at its mass.  An empty list means no
    jump was found, which is an admissible outcome.

    ``masses`` adds scan points, typically the masses of an action table
    (see :func:`mass_window`): the action ground state at each grid
    frequency is a candidate energy ground state at exactly that mass.
    """
    if not 2 < p < 6:
        raise ValueError(f"Z-point search needs 2 < p < 6, got {p}")
    lo, hi = map(float, window)
    if not 0 < lo < hi:
        raise ValueError(f"mass window must satisfy 0 < lo < hi, got {window}")
    mesh = _mesh(g, cfg)
    probes: list[_Probe] = []
    warm: list[np.ndarray] = []
    scan = set(np.linspace(lo, hi, n_scan).tolist())
    scan.update(float(m) for m in (() if masses is None else masses) if lo <= m <= hi)
    for mu in sorted(scan):
        pr = _probe(mesh, p, float(mu), cfg, warm)
        log.info("z-scan mass=%.6g lambda=%.6g", mu, pr.lam)
        probes.append(pr)
        warm = [pr.best.state.values] if pr.best is not None else warm
    jumps = []
    for a, b in zip(probes, probes[1:]):
        if a.best is None:
            continue
        if b.best is None or _distinct_lambda(a.lam, b.lam, cfg):
            # relative size: steep but continuous growth along one branch ranks low
            jumps.append(((b.lam - a.lam) / max(1.0, abs(a.lam)), a, b))
    jumps.sort(key=lambda t: -t[0])
    witnesses: list[ZPointWitness] = []
    for _, a, b in jumps[:max_jumps]:
        w = _refine(mesh, p, a, b, cfg, max_steps)
        if w is not None and not any(abs(w.mass - v.mass) < 1e-6 * w.mass for v in witnesses):
            witnesses.append(w)
    return witnesses


def _refine(mesh, p, a: _Probe, b: _Probe, cfg, max_steps) -> ZPointWitness | None:
    low = a.best
    high = b.best
    mu_a, mu_b = a.mu, b.mu
    for _ in range(max_steps):
        if high is not None:
            w = _solve_crossing(mesh, p, mu_a, mu_b, low, high, cfg, max_steps)
            if w is not None:
                return w
        if mu_b - mu_a < 1e-9 * mu_b:
            break
        mid = 0.5 * (mu_a + mu_b)
        warm = [low.state.values] + ([high.state.values] if high is not None else [])
        pr = _probe(mesh, p, mid, cfg, warm)
        cont = _follow(mesh, p, mid, cfg, low)
        if pr.best is None:
            mu_b, high = mid, None
        elif cont is not None and not (
            pr.best.energy < cont.energy - cfg.energy_tol and _distinct_lambda(cont.lam, pr.best.lam, cfg)
        ):
            mu_a, low = mid, cont
        elif cont is None and not _distinct_lambda(low.lam, pr.best.lam, cfg):
            mu_a, low = mid, pr.best
        else:
            mu_b, high = mid, pr.best
    return None


def _solve_crossing(mesh, p, mu_a, mu_b, low, high, cfg, max_steps) -> ZPointWitness | None:
    """Root of E_low - E_high on [mu_a, mu_b] by the Illinois method."""
    high_a = _follow(mesh, p, mu_a, cfg, high)
    low_b = _follow(mesh, p, mu_b, cfg, low)
    if high_a is None or low_b is None:
        return None
    if not (_distinct_lambda(low.lam, high_a.lam, cfg) and _distinct_lambda(low_b.lam, high.lam, cfg)):
        return None
    fa = low.energy - high_a.energy
    fb = low_b.energy - high.energy
    if fa > 0 or fb < 0:
        return None
    sa = (low, high_a)
    sb = (low_b, high)
    side = 0
    for _ in range(max_steps):
        if fb - fa <= 0:
            return None
        mu = mu_a - fa * (mu_b - mu_a) / (fb - fa)
        lo_r = _follow(mesh, p, mu, cfg, sa[0])
        hi_r = _follow(mesh, p, mu, cfg, sb[1])
        if lo_r is None or hi_r is None or not _distinct_lambda(lo_r.lam, hi_r.lam, cfg):
            return None
        f = lo_r.energy - hi_r.energy
        if abs(f) < cfg.energy_tol / 4:
            return _verify(mesh, p, mu, lo_r, hi_r, cfg)
        if f < 0:
            mu_a, fa, sa = mu, f, (lo_r, hi_r)
            if side == -1:
                fb /= 2
            side = -1
        else:
            mu_b, fb, sb = mu, f, (lo_r, hi_r)
            if side == 1:
                fa /= 2
            side = 1
    return None


def _verify(mesh, p, mu, lo_r, hi_r, cfg) -> ZPointWitness | None:
    """Full multistart at ``mu`` seeded with both branch states."""
    pr = _probe(mesh, p, mu, cfg, [lo_r.state.values, hi_r.state.values])
    res = pr.res
    near = [r for r in res.near_optimal if r.resolved]
    if not near:
        return None
    l_lo = min(near, key=lambda r: r.lam)
    l_hi = max(near, key=lambda r: r.lam)
    w = ZPointWitness(
        p=p,
        mass=mu,
        lambda_low=l_lo.lam,
        lambda_high=l_hi.lam,
        energy_gap=abs(l_hi.energy - l_lo.energy),
        energy_low=l_lo.energy,
        energy_high=l_hi.energy,
        h=mesh.hmax,
    )
    return w if w.is_valid(cfg) else None


def z_point_refined(
    g: MetricGraph,
    witness: ZPointWitness,
    cfg: SolverConfig,
    rel_width: float = 0.05,
) -> ZPointWitness | None:
    """Search again around ``witness.mass`` on a mesh with half the spacing.

    Returns the witness found there, or None.  A stable witness reappears
    at a nearby mass with comparable multipliers.
    """
    fine = cfg.with_(target_h=cfg.target_h / 2)
    window = (witness.mass * (1 - rel_width), witness.mass * (1 + rel_width))
    found = find_z_points(g, witness.p, window, fine)
    if not found:
        return None
    return min(found, key=lambda w: abs(w.mass - witness.mass))


# ---------------------------------------------------------------- derivative


@dataclass
class DerivativeCheck:
    x: float
    slope: float
    band_lo: float
    band_hi: float
    tol: float
    ok: bool
    skipped: bool = False


@dataclass
class DerivativeReport:
    checks: list[DerivativeCheck]

    @property
    def violations(self) -> list[DerivativeCheck]:
        return [c for c in self.checks if not c.ok and not c.skipped]

    @property
    def ok(self) -> bool:
        return not self.violations and any(not c.skipped for c in self.checks)


def derivative_consistency(table: BranchTable, rel_tol: float = 0.02) -> DerivativeReport:
    """Centred differences of the action level against the band [M^-/2, M^+/2].

    Uses the ``fd_delta`` side levels when the table has them, otherwise
    the neighbouring grid points (interior points only).  Points that are
    not converged are reported as skipped.
    """
    if table.axis != LAMBDA:
        raise ValueError("derivative check needs a table on the lambda axis")
    pts = table.points
    if len(pts) < 3 and not table.fd_delta:
        raise ValueError("need at least 3 grid points")
    checks = []
    for i, pt in enumerate(pts):
        if table.fd_delta:
            d = table.fd_delta
            slope = (pt.level_hi - pt.level_lo) / (2 * d * pt.x)
            skipped = not pt.ok
        else:
            if i == 0 or i == len(pts) - 1:
                continue
            a, b = pts[i - 1], pts[i + 1]
            slope = (b.level - a.level) / (b.x - a.x)
            skipped = not (pt.ok and a.ok and b.ok)
        lo, hi = pt.minus / 2, pt.plus / 2
        tol = rel_tol * 0.5 * (lo + hi)
        ok = bool(lo - tol <= slope <= hi + tol)
        checks.append(DerivativeCheck(pt.x, float(slope), lo, hi, tol, ok, skipped))
    return DerivativeReport(checks)


def parse_grid(spec: str) -> np.ndarray:
    """``start:stop:count`` or ``start:stop:count:log`` into an increasing grid."""
    parts = spec.split(":")
    if len(parts) not in (3, 4) or (len(parts) == 4 and parts[3] not in ("log", "lin")):
        raise ValueError(f"grid must look like start:stop:count[:log], got {spec!r}")
    try:
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise ValueError(f"bad grid {spec!r}: {exc}") from None
    if count < 1:
        raise ValueError("grid count must be at least 1")
    if count == 1:
        grid = np.array([start])
    elif len(parts) == 4 and parts[3] == "log":
        if start <= 0 or stop <= 0:
            raise ValueError("log grid needs positive ends")
        grid = np.geomspace(start, stop, count)
    else:
        grid = np.linspace(start, stop, count)
    _check_grid(grid)
    return grid
