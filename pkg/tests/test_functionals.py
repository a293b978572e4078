import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from graphnls import functionals as F
from graphnls.baselines import MU_R, phi1
from graphnls.graph import build_named
from graphnls.invariants import VERIFY_GRAPHS, random_bumps
from graphnls.mesh import Mesh, norm_L2_sq, norm_Lp_p, seminorm_H1_sq


@pytest.fixture(scope="module")
def soliton_u():
    mesh = Mesh(build_named("line", trunc=40.0), 1e-3)
    return mesh.interpolate(lambda eid, s: phi1(s))


def const(L, c):
    m = Mesh(build_named("segment", [L]), 0.05)
    return m.function(np.full(m.n_dofs, c))


def test_energy_of_unit_constant():
    assert F.energy(const(1, 1.0), 4) == pytest.approx(-0.25, rel=1e-12)


def test_constant_state_energy_formula():
    L, mu, p = 3.0, 0.7, 4.6
    u = const(L, math.sqrt(mu / L))
    assert F.energy(u, p) == pytest.approx(-(mu ** (p / 2)) / (p * L ** (p / 2 - 1)), rel=1e-12)


def test_soliton_functionals(soliton_u):
    assert abs(F.energy(soliton_u, 6)) < 2e-3
    assert F.action(soliton_u, 6, 1) == pytest.approx(MU_R / 2, abs=2e-3)
    assert F.lagrange_lambda(soliton_u, 6) == pytest.approx(1, abs=5e-3)
    assert abs(F.nehari_residual(soliton_u, 6, 1)) < 1e-2


def test_doubled_soliton_multiplier(soliton_u):
    # direct evaluation of the multiplier formula at 2*phi_1 from the three norms
    v = soliton_u * 2.0
    q6, d, m = norm_Lp_p(soliton_u, 6), seminorm_H1_sq(soliton_u), norm_L2_sq(soliton_u)
    expected = (2**6 * q6 - 4 * d) / (4 * m)
    assert F.lagrange_lambda(v, 6) == pytest.approx(expected, rel=1e-12)
    # phi_1 has multiplier 1, so ||phi_1||_6^6 - ||phi_1'||^2 equals its mass mu_R
    assert q6 - d == pytest.approx(MU_R, abs=1e-2)


def test_action_of_zero():
    u = const(1, 0.0)
    assert F.action(u, 4, 2.0) == 0.0
    assert F.nehari_residual(u, 4, 2.0) == 0.0


def test_constant_multiplier():
    L, mu, p = 2.0, 0.5, 5.0
    u = const(L, math.sqrt(mu / L))
    assert F.lagrange_lambda(u, p) == pytest.approx((mu / L) ** ((p - 2) / 2), rel=1e-12)


def test_lambda_rejects_zero_mass():
    with pytest.raises(ValueError):
        F.lagrange_lambda(const(1, 0.0), 4)


def test_sigma_examples():
    u = const(1, 1.0)
    assert F.sigma(u, 6, 1.0) == pytest.approx(1.0, rel=1e-14)
    w = F.nehari_project(random_bumps(u.mesh, np.random.default_rng(1)), 4.5, 2.0)
    assert F.sigma(w, 4.5, 2.0) == pytest.approx(1.0, rel=1e-12)


def test_sigma_rejects_nonpositive_numerator():
    with pytest.raises(F.NehariError):
        F.sigma(const(1, 1.0), 4, -1.0)


def test_constant_critical_point_has_zero_gradient():
    p, kappa = 4.5, 0.8
    u = const(2, kappa)
    g = F.grad_action(u, p, kappa ** (p - 2))
    assert np.max(np.abs(g.values)) < 1e-12


def test_grad_energy_is_grad_action_at_zero():
    mesh = Mesh(build_named("tadpole", trunc=5), 0.1)
    u = random_bumps(mesh, np.random.default_rng(3))
    np.testing.assert_array_equal(F.grad_energy(u, 5).values, F.grad_action(u, 5, 0.0).values)


def test_evaluate_identity():
    mesh = Mesh(build_named("signpost", trunc=5), 0.1)
    u = random_bumps(mesh, np.random.default_rng(4))
    fv = F.evaluate(u, 4.0, 1.5)
    assert fv.action - 0.75 * fv.mass == pytest.approx(fv.energy, abs=1e-13)


@settings(max_examples=40, deadline=None)
@given(
    name=st.sampled_from(VERIFY_GRAPHS),
    p=st.floats(2.2, 6.0),
    lam=st.floats(0.05, 20.0),
    seed=st.integers(0, 2**16),
)
def test_nehari_identities(name, p, lam, seed):
    mesh = Mesh(build_named(name, trunc=6.0) if not name.startswith("ladder") else build_named(name), 0.1)
    u = random_bumps(mesh, np.random.default_rng(seed))
    w = F.nehari_project(u, p, lam)
    scale = seminorm_H1_sq(w) + lam * norm_L2_sq(w)
    assert abs(F.nehari_residual(w, p, lam)) < 1e-10 * scale
    c = 0.5 - 1 / p
    assert F.action(w, p, lam) == pytest.approx(c * norm_Lp_p(w, p), rel=1e-8)
    assert F.action(w, p, lam) == pytest.approx(c * scale, rel=1e-8)


@settings(max_examples=40, deadline=None)
@given(name=st.sampled_from(VERIFY_GRAPHS), p=st.floats(2.2, 6.0), seed=st.integers(0, 2**16))
def test_multiplier_energy_identity(name, p, seed):
    mesh = Mesh(build_named(name, trunc=6.0) if not name.startswith("ladder") else build_named(name), 0.1)
    u = random_bumps(mesh, np.random.default_rng(seed))
    lhs = F.lagrange_lambda(u, p) * norm_L2_sq(u)
    rhs = (1 - 2 / p) * norm_Lp_p(u, p) - 2 * F.energy(u, p)
    assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-10 * norm_L2_sq(u))


@settings(max_examples=40, deadline=None)
@given(
    name=st.sampled_from(VERIFY_GRAPHS),
    p=st.floats(2.5, 6.0),
    c=st.floats(0.1, 10.0),
    lam=st.floats(0.1, 10.0),
    seed=st.integers(0, 2**16),
)
def test_homogeneity(name, p, c, lam, seed):
    mesh = Mesh(build_named(name, trunc=6.0) if not name.startswith("ladder") else build_named(name), 0.1)
    u = random_bumps(mesh, np.random.default_rng(seed))
    assert norm_Lp_p(u * c, p) == pytest.approx(c**p * norm_Lp_p(u, p), rel=1e-12)
    assert F.sigma(u * c, p, lam) == pytest.approx(F.sigma(u, p, lam) / c, rel=1e-12)


@settings(max_examples=30, deadline=None)
@given(name=st.sampled_from(VERIFY_GRAPHS), p=st.floats(2.5, 6.0), seed=st.integers(0, 2**16))
def test_gradients_match_central_differences(name, p, seed):
    mesh = Mesh(build_named(name, trunc=6.0) if not name.startswith("ladder") else build_named(name), 0.1)
    rng = np.random.default_rng(seed)
    u = random_bumps(mesh, rng)
    v = mesh.function(rng.standard_normal(mesh.n_dofs) * u.values.max())
    eps, lam = 1e-5, 1.3
    for grad, fun in (
        (F.grad_energy(u, p), lambda z: F.energy(z, p)),
        (F.grad_action(u, p, lam), lambda z: F.action(z, p, lam)),
    ):
        fd = (fun(u + v * eps) - fun(u + v * -eps)) / (2 * eps)
        assert F.inner(grad, v) == pytest.approx(fd, rel=1e-6)
