import math

import numpy as np
import pytest

from graphnls import baselines as B
from graphnls.action import minimize_action, multistart_action, scaling_transport
from graphnls.config import SolverConfig
from graphnls.functionals import nehari_residual
from graphnls.graph import build_named, scale
from graphnls.mesh import Mesh, norm_L2_sq, seminorm_H1_sq

FAST = SolverConfig(target_h=0.05, restarts=2, max_bumps=8)


def test_half_soliton_level():
    res = multistart_action(build_named("halfline", trunc=30.0), 6.0, 1.0, FAST.with_(target_h=0.02))
    assert res.j_level == pytest.approx(B.MU_RPLUS / 2, abs=2e-3)


def test_constant_critical_point_needs_no_descent():
    p, kappa = 4.0, 0.9
    mesh = Mesh(build_named("circle", [2]), 0.05)
    u = mesh.function(np.full(mesh.n_dofs, kappa))
    rec = minimize_action(mesh, p, kappa ** (p - 2), FAST, init=u)
    assert rec.iterations <= 1
    np.testing.assert_allclose(rec.state.values, kappa, rtol=1e-10)


def test_circle_masses_agree():
    res = multistart_action(build_named("circle", [2]), 4.0, 1.0, FAST)
    assert res.m_plus - res.m_minus <= FAST.mass_tol * res.m_plus


def test_segment_large_lambda_is_half_soliton():
    res = multistart_action(build_named("segment", [1]), 6.0, 100.0, FAST.with_(target_h=0.01))
    assert res.m_minus == pytest.approx(B.MU_RPLUS, rel=0.02)
    assert res.m_plus == pytest.approx(B.MU_RPLUS, rel=0.02)


def test_records_are_nehari_exact():
    res = multistart_action(build_named("signpost", trunc=10), 5.0, 2.0, FAST)
    c = 0.5 - 1 / 5.0
    for r in res.records:
        scale_ = r.h1_seminorm_sq + 2.0 * r.mass
        assert abs(nehari_residual(r.state, 5.0, 2.0)) < 1e-8 * scale_
        assert r.action == pytest.approx(c * r.lp_norm_p, rel=1e-10)


def test_level_positive_and_increasing():
    g = build_named("tgraph", trunc=20)
    levels = [multistart_action(g, 4.0, lam, FAST).j_level for lam in (0.5, 1.0, 2.0, 4.0)]
    assert levels[0] > 0
    assert all(b > a for a, b in zip(levels, levels[1:]))


def test_level_below_line_when_no_pendant():
    # a soliton squeezed onto the graph competes; at p=6 the level cannot exceed the line level
    res = multistart_action(build_named("tadpole", trunc=20), 6.0, 1.0, FAST)
    assert res.j_level <= B.j6_line(1.0) + 2e-3


def test_nonpositive_lambda_rejected():
    with pytest.raises(ValueError):
        minimize_action(build_named("segment"), 6.0, 0.0, FAST)
    with pytest.raises(ValueError):
        multistart_action(build_named("segment"), 6.0, -1.0, FAST)


def test_scaling_transport_identity_and_mass():
    mesh = Mesh(build_named("tadpole", trunc=8), 0.02)
    u = mesh.interpolate(lambda e, s: np.exp(-((s - 1) ** 2)))
    same = scaling_transport(u, 1.0)
    np.testing.assert_allclose(same.values, u.values)
    for lam in (0.3, 4.0):
        v = scaling_transport(u, lam)
        assert norm_L2_sq(v) == pytest.approx(norm_L2_sq(u), abs=1e-6)
        assert seminorm_H1_sq(v) == pytest.approx(seminorm_H1_sq(u) / lam, rel=1e-6)
        assert v.mesh.graph == scale(mesh.graph, math.sqrt(lam))


def test_level_scaling_at_critical_power():
    g = build_named("circle", [2])
    cfg = FAST.with_(target_h=0.02)
    lam = 4.0
    j = multistart_action(g, 6.0, lam, cfg).j_level
    j1 = multistart_action(scale(g, math.sqrt(lam)), 6.0, 1.0, cfg.with_(target_h=0.02 * math.sqrt(lam))).j_level
    assert abs(j - lam * j1) / j < 1e-3
