from __future__ import annotations

import os
from dataclasses import asdict, dataclass, fields, replace


@dataclass(frozen=True)
class SolverConfig:
    """Numerical knobs shared by the energy and action solvers.

    Distinctness tolerances: ``lambda_tol``, ``mass_tol`` and ``action_tol``
    are relative to the magnitude of the compared values; ``energy_tol`` is
    absolute (energy levels sit near 0 at the critical power).
    """

    target_h: float = 0.05
    grad_tol: float = 1e-8
    max_iters: int = 4000
    armijo_c: float = 1e-4
    backtrack: float = 0.5
    max_backtracks: int = 40
    step_min: float = 1e-8
    step_max: float = 1e4
    restarts: int = 3
    max_bumps: int = 16
    seed: int = 0
    lambda_tol: float = 1e-3
    mass_tol: float = 1e-3
    energy_tol: float = 1e-6
    action_tol: float = 1e-6
    blowup_energy: float = 1e3

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name == "seed":
                continue
            if not v > 0:
                raise ValueError(f"{f.name} must be positive, got {v}")
        if not 0 < self.backtrack < 1:
            raise ValueError("backtrack factor must lie in (0, 1)")

    def with_(self, **kw) -> "SolverConfig":
        return replace(self, **kw)

    def halved(self) -> "SolverConfig":
        """Same config with every distinctness tolerance halved."""
        return replace(
            self,
            lambda_tol=self.lambda_tol / 2,
            mass_tol=self.mass_tol / 2,
            energy_tol=self.energy_tol / 2,
            action_tol=self.action_tol / 2,
        )

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "SolverConfig":
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in known})


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get("GRAPHNLS_THREADS", "1")))
    except ValueError:
        return 1
