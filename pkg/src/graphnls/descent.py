"""Preconditioned Riemannian descent with Barzilai-Borwein steps and Armijo backtracking.

The two solvers differ only in their manifold (mass sphere vs Nehari
manifold) and hence in the projection and retraction passed in here.  The
preconditioner is a shifted stiffness ``P = A + beta*M``; search directions
are P-gradients, and BB step lengths use the P inner product.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .config import SolverConfig

log = logging.getLogger(__name__)

# below this relative stationarity an Armijo failure is a round-off stall
ROUNDOFF_STATIONARITY = 1e-6
ROUNDOFF = 1e-14


class Preconditioner:
    """Factorized ``A + beta*M`` for a lumped mass vector ``M``."""

    def __init__(self, stiffness: sp.spmatrix, mass: np.ndarray, beta: float):
        self.beta = float(beta)
        self.mass = mass
        self.matrix = (stiffness + sp.diags(beta * mass)).tocsc()
        self._lu = splu(self.matrix)

    def solve_mass(self, g: np.ndarray) -> np.ndarray:
        """P^{-1} M g: turns an L^2 gradient into a P-gradient."""
        return self._lu.solve(self.mass * g)

    def inner(self, a: np.ndarray, b: np.ndarray) -> float:
        return float(a @ (self.matrix @ b))


@dataclass
class Step:
    """Gradient information at one iterate."""

    grad: np.ndarray        # L^2 Riesz gradient of the objective on the manifold
    direction: np.ndarray   # P-gradient projected to the tangent space
    slope: float            # <grad, direction>_M, non-negative
    stationarity: float     # sqrt(slope) / ||x||_P


@dataclass
class DescentResult:
    x: np.ndarray
    value: float
    iterations: int
    converged: bool
    stationarity: float
    history: list[float] = field(default_factory=list)
    reason: str = ""


def descend(
    x0: np.ndarray,
    objective: Callable[[np.ndarray], float],
    gradient: Callable[[np.ndarray], Step],
    retract: Callable[[np.ndarray], np.ndarray],
    precond: Preconditioner,
    cfg: SolverConfig,
    guard: Callable[[np.ndarray, float], None] | None = None,
) -> DescentResult:
    x = x0
    f = objective(x)
    st = gradient(x)
    history = [f]
    tau = 1.0
    it = 0
    reason = "max_iters"
    converged = False
    for it in range(cfg.max_iters):
        if st.stationarity < cfg.grad_tol:
            converged, reason = True, "grad_tol"
            break
        accepted = False
        t = tau
        # f is a difference of terms of this size; round-off is relative to it
        scale = max(abs(f), precond.inner(x, x), np.finfo(float).tiny)
        for _ in range(cfg.max_backtracks):
            x_try = retract(x - t * st.direction)
            f_try = objective(x_try)
            if t * st.slope < ROUNDOFF * scale:
                # first-order gain is below the resolution of f
                break
            if np.isfinite(f_try) and f_try <= f - cfg.armijo_c * t * st.slope:
                accepted = True
                break
            t *= cfg.backtrack
        if not accepted:
            converged = st.stationarity < ROUNDOFF_STATIONARITY
            reason = "roundoff_stall" if converged else "line_search_failed"
            break
        if guard is not None:
            guard(x_try, f_try)
        st_new = gradient(x_try)
        s = x_try - x
        y = st_new.direction - st.direction
        sPs, sPy = precond.inner(s, s), precond.inner(s, y)
        if sPy > 0:
            if it % 2 == 0:
                tau = sPs / sPy
            else:
                yPy = precond.inner(y, y)
                tau = sPy / yPy if yPy > 0 else sPs / sPy
        else:
            tau = 2 * t
        tau = float(np.clip(tau, cfg.step_min, cfg.step_max))
        x, f, st = x_try, f_try, st_new
        history.append(f)
    else:
        it = cfg.max_iters
        converged = st.stationarity < cfg.grad_tol
        if converged:
            reason = "grad_tol"
    return DescentResult(x, f, it, converged, st.stationarity, history, reason)
