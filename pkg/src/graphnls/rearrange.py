"""Decreasing rearrangements of nonnegative piecewise-linear functions.

Test oracles only: the solvers never call these.  For a continuous P1
function the distribution ``d(t) = |{u > t}|`` is piecewise linear in ``t``
with breakpoints at the nodal values, so sampling the levels at the nodal
values gives the rearrangement exactly; a uniform level grid is available
through ``samples``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import GraphFunction, seminorm_H1_sq

MONOTONE, SYMMETRIC = "monotone", "symmetric"


@dataclass(frozen=True)
class RearrangedProfile:
    """Piecewise-linear profile through ``(abscissae[i], values[i])``."""

    abscissae: np.ndarray
    values: np.ndarray
    kind: str

    @property
    def length(self) -> float:
        return float(self.abscissae[-1] - self.abscissae[0])

    def __call__(self, x):
        return np.interp(x, self.abscissae, self.values)

    def _pieces(self):
        return self.values[:-1], self.values[1:], np.diff(self.abscissae)

    def norm_p_p(self, p: float) -> float:
        return _p1_integral(*self._pieces(), p)

    def dirichlet(self) -> float:
        a, b, h = self._pieces()
        keep = h > 0
        if np.any((~keep) & (a != b)):
            return float("inf")
        return float(np.sum((b[keep] - a[keep]) ** 2 / h[keep]))

    def distribution(self, t) -> np.ndarray:
        return _distribution(*self._pieces(), np.atleast_1d(np.asarray(t, dtype=float)))


@dataclass(frozen=True)
class PolyaSzego:
    lhs: float  # Dirichlet energy of the rearrangement
    rhs: float  # Dirichlet energy of the input
    holds: bool


def _elements(u) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-interval (left value, right value, length) of a P1 function or profile."""
    if isinstance(u, RearrangedProfile):
        return u._pieces()
    a, b, h = [], [], []
    for em in u.mesh.edges:
        v = u.edge_values(em.edge_id)
        a.append(v[:-1])
        b.append(v[1:])
        h.append(np.full(em.n_nodes - 1, em.h))
    return np.concatenate(a), np.concatenate(b), np.concatenate(h)


def _check_sign(a, b):
    vmax = max(float(np.max(a, initial=0.0)), float(np.max(b, initial=0.0)))
    vmin = min(float(np.min(a, initial=0.0)), float(np.min(b, initial=0.0)))
    if vmin < -1e-12 * max(vmax, 1e-300):
        raise ValueError(f"rearrangement needs u >= 0, found value {vmin:.3e}")
    return np.maximum(a, 0.0), np.maximum(b, 0.0)


def _distribution(a, b, h, t, strict: bool = True) -> np.ndarray:
    """|{u > t}| (or |{u >= t}| when ``strict`` is False) for each level in ``t``."""
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    flat = hi == lo
    span = np.where(flat, 1.0, hi - lo)
    out = np.empty(t.size)
    step = max(1, 2**22 // max(a.size, 1))  # bound the levels-by-intervals block
    for k in range(0, t.size, step):
        tk = t[k : k + step, None]
        frac = np.clip((hi - tk) / span, 0.0, 1.0)
        inside = lo > tk if strict else lo >= tk
        out[k : k + step] = np.where(flat, inside, frac) @ h
    return out


def _p1_integral(a, b, h, p) -> float:
    """Exact integral of |linear|^p over each interval, summed (a, b >= 0)."""
    a, b = np.abs(a), np.abs(b)
    d = b - a
    scale = np.maximum(np.maximum(a, b), 1e-300)
    near = np.abs(d) < 1e-6 * scale
    safe = np.where(near, 1.0, d)
    exact = (b ** (p + 1) - a ** (p + 1)) / ((p + 1) * safe)
    # Simpson is exact to O(d^2) where the closed form cancels
    approx = (a**p + 4 * ((a + b) / 2) ** p + b**p) / 6
    return float(np.sum(h * np.where(near, approx, exact)))


def p1_norm_p_p(u: GraphFunction | RearrangedProfile, p: float) -> float:
    """Exact integral of |u|^p for a piecewise-linear u (not the lumped rule)."""
    return _p1_integral(*_elements(u), p)


def _levels(a, b, samples: int | None) -> np.ndarray:
    vals = np.concatenate([a, b])
    top = float(vals.max())
    if samples is None:
        lev = np.unique(vals)
        # mirror-image nodes differ by round-off; such levels are one level
        lev = lev[np.r_[True, np.diff(lev) > 1e-12 * max(top, 1e-300)]]
    else:
        if samples < 2:
            raise ValueError("samples must be at least 2")
        lev = np.unique(np.r_[np.linspace(vals.min(), top, samples), top])
    return lev[::-1]  # from the maximum down


def _decreasing_points(u, samples):
    a, b, h = _elements(u)
    a, b = _check_sign(a, b)
    total = float(h.sum())
    lev = _levels(a, b, samples)
    s_open = _distribution(a, b, h, lev, strict=True)
    s_closed = _distribution(a, b, h, lev, strict=False)
    xs, vs = [], []
    for t, s0, s1 in zip(lev, s_open, s_closed):
        xs.append(s0)
        vs.append(t)
        if s1 > s0:
            xs.append(s1)
            vs.append(t)
    xs = np.clip(np.asarray(xs), 0.0, total)
    vs = np.asarray(vs)
    xs[0] = 0.0
    # monotone in x; tiny round-off reversals are flattened
    xs = np.maximum.accumulate(xs)
    if xs[-1] < total:
        xs, vs = np.r_[xs, total], np.r_[vs, vs[-1]]
    keep = np.r_[True, (np.diff(xs) > 0) | (np.diff(vs) != 0)]
    return xs[keep], vs[keep], total


def monotone_rearrangement(u: GraphFunction | RearrangedProfile, samples: int | None = None) -> RearrangedProfile:
    """Decreasing profile on [0, |G|] with the distribution function of ``u``."""
    xs, vs, _ = _decreasing_points(u, samples)
    return RearrangedProfile(xs, vs, MONOTONE)


def symmetric_rearrangement(u: GraphFunction | RearrangedProfile, samples: int | None = None) -> RearrangedProfile:
    """Even profile on [-|G|/2, |G|/2], decreasing away from 0, equimeasurable with ``u``."""
    xs, vs, _ = _decreasing_points(u, samples)
    half = xs / 2
    if half[0] == 0.0:
        left_x, left_v = -half[:0:-1], vs[:0:-1]
    else:
        left_x, left_v = -half[::-1], vs[::-1]
    return RearrangedProfile(np.r_[left_x, half], np.r_[left_v, vs], SYMMETRIC)


def polya_szego_check(
    u: GraphFunction | RearrangedProfile,
    kind: str = MONOTONE,
    samples: int | None = None,
    rtol: float = 1e-9,
) -> PolyaSzego:
    """Compare the Dirichlet energies of ``u`` and of its rearrangement.

    For the symmetric kind the inequality needs ``u`` to take almost every
    value at least twice; the caller is responsible for that, the check only
    reports.
    """
    if kind == MONOTONE:
        r = monotone_rearrangement(u, samples)
    elif kind == SYMMETRIC:
        r = symmetric_rearrangement(u, samples)
    else:
        raise ValueError(f"kind must be 'monotone' or 'symmetric', got {kind!r}")
    rhs = u.dirichlet() if isinstance(u, RearrangedProfile) else seminorm_H1_sq(u)
    lhs = r.dirichlet()
    return PolyaSzego(lhs, rhs, bool(lhs <= rhs + rtol * max(rhs, 1.0)))


def distribution_mismatch(u: GraphFunction | RearrangedProfile, r: RearrangedProfile, n_levels: int = 200) -> float:
    """sup over a level grid of | |{u > t}| - |{r > t}| |."""
    a, b, h = _elements(u)
    a, b = _check_sign(a, b)
    top = max(float(a.max()), float(b.max()))
    t = np.linspace(0.0, top, n_levels, endpoint=False)
    return float(np.max(np.abs(_distribution(a, b, h, t) - r.distribution(t))))


def attains_twice(u: GraphFunction | RearrangedProfile) -> bool:
    """True when every value strictly between min u and max u has two or more preimages.

    Checked at the midpoints between consecutive nodal values, where the
    preimage count of a P1 function is constant.
    """
    a, b, _ = _elements(u)
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    lev = np.unique(np.r_[a, b])
    mids = 0.5 * (lev[:-1] + lev[1:])
    if mids.size == 0:
        return True
    counts = ((lo[None, :] < mids[:, None]) & (mids[:, None] < hi[None, :])).sum(axis=1)
    return bool(np.all(counts >= 2))
