import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from graphnls import baselines as B
from graphnls.config import SolverConfig
from graphnls.graph import build_named
from graphnls.sweep import (
    BranchPoint,
    BranchTable,
    InversionWitness,
    ZPointWitness,
    derivative_consistency,
    find_inversion,
    find_z_points,
    mass_window,
    parse_grid,
    trace_action_branch,
    trace_energy_branch,
)

FAST = SolverConfig(target_h=0.05, restarts=2, max_bumps=8)


def table(xs, levels, minus, plus=None, axis="lambda", flags=None):
    plus = minus if plus is None else plus
    flags = flags or [""] * len(xs)
    pts = [
        BranchPoint(float(x), float(l), float(a), float(b), True, 1, 1, flag=f)
        for x, l, a, b, f in zip(xs, levels, minus, plus, flags)
    ]
    return BranchTable(axis, 6.0, "synthetic", pts, FAST)


def test_parse_grid():
    np.testing.assert_allclose(parse_grid("25:200:4:log"), [25, 50, 100, 200])
    np.testing.assert_allclose(parse_grid("0.5:2:4"), [0.5, 1.0, 1.5, 2.0])
    assert parse_grid("3:9:1").tolist() == [3.0]
    for bad in ("1:2", "a:2:3", "1:2:0", "2:1:3", "0:1:3:log", "1:2:3:cubic", "-1:2:3"):
        with pytest.raises(ValueError):
            parse_grid(bad)


def test_table_rejects_bad_grid():
    with pytest.raises(ValueError):
        table([1, 1], [0, 0], [1, 1])
    with pytest.raises(ValueError):
        table([1, 2], [0, 0], [1, 1], axis="time")


def test_monotone_masses_have_no_inversion():
    t = table([1, 2, 3, 4], [1, 2, 3, 4], [1.0, 1.1, 1.2, 1.3])
    assert find_inversion(t) is None


def test_inversion_picks_the_largest_gap():
    t = table([1, 2, 3, 4], [1, 2, 3, 4], [1.0, 3.0, 2.0, 1.5])
    w = find_inversion(t)
    assert (w.lambda1, w.lambda2) == (2.0, 4.0)
    assert w.gap == pytest.approx(1.5) and w.is_valid()
    assert w.margin == pytest.approx(3 * FAST.mass_tol)


def test_inversion_skips_flagged_points():
    t = table([1, 2, 3], [1, 2, 3], [1.0, 3.0, 1.0], flags=["", "error: x", ""])
    assert find_inversion(t) is None


def test_inversion_needs_lambda_axis_and_positive_margin():
    with pytest.raises(ValueError):
        find_inversion(table([1, 2], [0, 0], [1, 1], axis="mass"))
    with pytest.raises(ValueError):
        find_inversion(table([1, 2], [0, 0], [1, 1]), margin=0)


@settings(max_examples=100, deadline=None)
@given(
    masses=st.lists(st.floats(0.1, 10.0), min_size=2, max_size=12),
    margin=st.floats(1e-4, 2.0),
)
def test_witness_is_order_correct(masses, margin):
    xs = np.arange(1, len(masses) + 1)
    t = table(xs, xs, masses)
    w = find_inversion(t, margin)
    best = max((a - b for i, a in enumerate(masses) for b in masses[i + 1 :]), default=-1)
    if best >= margin:
        assert w is not None and w.is_valid()
        assert w.gap == pytest.approx(best)
        i, j = int(w.lambda1) - 1, int(w.lambda2) - 1
        assert i < j and masses[i] - masses[j] == w.gap
    else:
        assert w is None


def test_witness_validity():
    assert not InversionWitness(2.0, 1.0, 3.0, 1.0, 0.1).is_valid()
    assert not InversionWitness(1.0, 2.0, 1.0, 1.05, 0.1).is_valid()
    cfg = SolverConfig()
    assert ZPointWitness(5.9, 1.4, 0.0, 9.0, 1e-8).is_valid(cfg)
    assert not ZPointWitness(5.9, 1.4, 9.0, 9.0 + 1e-4, 1e-8).is_valid(cfg)
    assert not ZPointWitness(5.9, 1.4, 0.0, 9.0, 1e-3).is_valid(cfg)


def test_derivative_of_line_level():
    xs = np.geomspace(0.5, 8, 6)
    t = table(xs, B.j6_line(xs), [B.MU_R] * 6)
    rep = derivative_consistency(t)
    assert rep.ok and len(rep.checks) == 4
    for c in rep.checks:
        assert c.slope == pytest.approx(B.MU_R / 2, rel=1e-12)


def test_derivative_of_constant_family():
    # constants on segment(L), p=4: u = sqrt(lam), mass lam*L, level lam^2 L / 4
    L = 1.5
    xs = np.linspace(0.2, 2.0, 7)
    t = table(xs, xs**2 * L / 4, xs * L)
    assert derivative_consistency(t).ok


def test_derivative_flags_a_wrong_band():
    xs = np.linspace(1, 3, 5)
    t = table(xs, xs, [1.0] * 5)  # slope 1, band 1/2
    rep = derivative_consistency(t)
    assert not rep.ok and len(rep.violations) == 3


def test_derivative_skips_nonconverged():
    xs = np.linspace(1, 3, 5)
    t = table(xs, xs, [1.0] * 5, flags=["", "error: boom", "", "", ""])
    rep = derivative_consistency(t)
    assert [c.skipped for c in rep.checks] == [True, True, False]


def test_segment_masses_fall_toward_half_soliton():
    t = trace_action_branch(build_named("segment", [1]), 6.0, [25, 50, 100], FAST.with_(target_h=0.01))
    m = t.column("minus")
    assert np.all(np.diff(m) < 0)
    assert m[-1] == pytest.approx(B.MU_RPLUS, rel=0.02)
    assert all(pt.ok for pt in t.points)


def test_level_increases_along_grid():
    t = trace_action_branch(build_named("tadpole", trunc=20), 4.0, [0.5, 1, 2, 4], FAST)
    assert np.all(np.diff(t.column("level")) > 0)
    assert np.all(t.column("minus") <= t.column("plus"))


def test_energy_branch_limits():
    g = build_named("segment", [1])
    # at mu = 10 the half-soliton (lambda near 25) has beaten the constant (lambda = 10)
    t = trace_energy_branch(g, 4.0, [0.01, 0.1, 1, 3, 10], FAST)
    lam = t.column("minus")
    assert lam[0] < 0.02 and lam[-1] > 20
    assert np.all(np.diff(lam) > -FAST.lambda_tol)


def test_energy_branch_at_critical_power():
    g = build_named("circle", [2])
    t = trace_energy_branch(g, 6.0, [0.5 * B.MU_R, 0.95 * B.MU_R, 1.2 * B.MU_R], FAST)
    assert t.points[1].ok and t.points[1].level < 0
    assert t.points[2].flag == "unbounded_below" and t.points[2].level == -math.inf


def test_mass_window():
    t = table([1, 2, 3], [1, 2, 3], [2.0, 1.5, 1.8], [2.1, 1.5, 1.9])
    assert mass_window(t) == (1.5, 2.1)


def test_table_csv(tmp_path):
    t = table([1, 2], [0.5, 1.0], [1.0, 1.0])
    path = t.to_csv(tmp_path / "t.csv")
    lines = path.read_text().splitlines()
    assert len(lines) == 3 and lines[0].startswith("level,")
    assert "lambda" in lines[0].split(",")


def test_z_search_needs_subcritical_power():
    with pytest.raises(ValueError):
        find_z_points(build_named("segment"), 6.0, (1.0, 2.0), FAST)


def test_z_search_far_from_critical_power():
    # recorded, not asserted: the phenomenon is only known near p = 6
    found = find_z_points(build_named("segment", [1]), 2.5, (0.5, 3.0), FAST, n_scan=5)
    assert isinstance(found, list)
    for w in found:
        assert w.is_valid(FAST)
