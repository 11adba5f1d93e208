import logging

import numpy as np
import pytest
from scipy.optimize import minimize_scalar

from oracles import collocation_U
from ruinkit import DomainError, EXAMPLE_PARAMS, ParameterError, ProblemSpec, U_value, pi_U, pi_psi, solve_U
from ruinkit.shortfall import value_shortfall
from ruinkit.shortfall_at_death import (
    U_derivatives,
    U_strategy,
    boundary_residuals,
    g_minus_z,
    shooting_residual,
)


def test_boundaries_against_collocation(spec, u_sol):
    y_x, y_M = collocation_U(spec)
    assert u_sol.y_x == pytest.approx(y_x, rel=1e-6)
    assert u_sol.y_M == pytest.approx(y_M, rel=1e-6)
    assert 0 < u_sol.y_x < u_sol.y_M
    assert u_sol.brackets_found == 1


@pytest.mark.parametrize("x, M", [(0.0, -20.0), (20.0, -100.0), (-10.0, -300.0)])
def test_other_levels_against_collocation(x, M):
    spec = ProblemSpec(EXAMPLE_PARAMS, x=x, M=M)
    sol = solve_U(spec)
    y_x, y_M = collocation_U(spec)
    assert sol.y_x == pytest.approx(y_x, rel=1e-6)
    assert sol.y_M == pytest.approx(y_M, rel=1e-6)
    assert np.max(np.abs(boundary_residuals(sol))) < 1e-8


def test_residuals(u_sol):
    assert np.max(np.abs(boundary_residuals(u_sol))) < 1e-8
    assert abs(shooting_residual(u_sol.spec, u_sol.y_x)) < 1e-8


def test_requires_ordered_levels():
    with pytest.raises(ParameterError):
        solve_U(ProblemSpec(EXAMPLE_PARAMS, x=0.0))


def test_value_branches(spec, u_sol):
    assert U_value(u_sol, spec, 50.0, 10.0) == 0.0
    assert U_value(u_sol, spec, -100.0, -200.0) == 200.0
    assert U_value(u_sol, spec, 0.0, 0.0) == pytest.approx(u_sol.beta, rel=1e-14)
    assert U_value(u_sol, spec, -1e-7, -1e-7) == pytest.approx(u_sol.beta, abs=1e-6)
    assert U_value(u_sol, spec, -200.0 + 1e-6, -200.0 + 1e-6) == pytest.approx(200.0, abs=1e-5)
    with pytest.raises(DomainError):
        U_value(u_sol, spec, 0.0, 1.0)


def test_smooth_fit_at_x(u_sol):
    left = U_derivatives(u_sol, -1e-9)
    right = U_derivatives(u_sol, 1e-9)
    assert left[1] == pytest.approx(right[1], rel=1e-6)
    # the allocation is continuous at x as well
    assert pi_U(u_sol, u_sol.spec, -1e-9) == pytest.approx(pi_U(u_sol, u_sol.spec, 0.0), rel=1e-6)


def test_hjb_residual(spec, u_sol):
    prm, k = spec.params, spec.consts
    for w in np.concatenate([np.linspace(-199.0, -0.5, 80), np.linspace(0.5, 49.0, 40)]):
        v, d1, d2 = U_derivatives(u_sol, w)
        resid = prm.lam * v - (prm.r * w - prm.c) * d1 + k.delta * d1 * d1 / d2 - prm.lam * max(spec.x - w, 0.0)
        assert abs(resid) < 1e-6


def test_g_exceeds_z(u_sol):
    ys = np.linspace(u_sol.y_x, u_sol.y_M, 1002)[1:-1]
    assert np.all(g_minus_z(u_sol, ys) > 0)
    assert abs(g_minus_z(u_sol, u_sol.y_x)) < 1e-10


def test_allocation_exceeds_lifetime_ruin_control(spec, u_sol):
    for w in np.linspace(-199.5, -0.01, 200):
        assert pi_U(u_sol, spec, w) > pi_psi(spec, w)
    for w in np.linspace(0.0, 49.5, 50):
        assert pi_U(u_sol, spec, w) == pytest.approx(pi_psi(spec, w), rel=1e-14)
    assert pi_U(u_sol, spec, -200.0) == pytest.approx(250.0, rel=1e-6)


def test_monotone_and_bounded(spec, u_sol):
    ws = np.linspace(-199.5, 49.5, 300)
    vals = np.array([U_value(u_sol, spec, w, w) for w in ws])
    assert np.all(np.diff(vals) < 0)
    assert np.all(vals <= spec.x - spec.M)
    # wealth at death is at least the lifetime minimum, so less shortfall than the lifetime version
    for w in ws[::10]:
        assert vals[list(ws).index(w)] <= value_shortfall(spec, w, w) + 1e-9


def test_dual_round_trip_and_convexity(spec, u_sol):
    for y in np.linspace(u_sol.y_x, u_sol.y_M, 100):
        res = minimize_scalar(
            lambda w: U_value(u_sol, spec, w, w) + w * y,
            bounds=(spec.M, spec.x),
            method="bounded",
            options={"xatol": 1e-10},
        )
        ends = (U_value(u_sol, spec, spec.x, spec.x) + spec.x * y, (spec.x - spec.M) + spec.M * y)
        assert abs(min(res.fun, *ends) - float(u_sol.dual_value(y))) < 1e-7
    h = 0.25
    for w in np.linspace(-199.0, 49.0, 200):
        fd = (U_value(u_sol, spec, w + h, w - h) - 2 * U_value(u_sol, spec, w, w - h) + U_value(u_sol, spec, w - h, w - h)) / h**2
        assert fd >= -1e-8


def test_collapse_as_M_rises_to_x(caplog):
    """As M rises to x the dual boundaries coalesce."""
    widths = []
    for gap in (1e-1, 1e-2, 1e-3):
        spec = ProblemSpec(EXAMPLE_PARAMS, x=0.0, M=-gap)
        with caplog.at_level(logging.WARNING):
            sol = solve_U(spec)
        widths.append(sol.y_M - sol.y_x)
        if gap == 1e-3:
            y_x, y_M = collocation_U(spec, guess=(sol.y_x, sol.y_M))
            assert abs((y_M - y_x) - widths[-1]) < 1e-6 * y_M
    assert widths[0] > widths[1] > widths[2] > 0
    assert widths[2] < 1e-2 * widths[0]


def test_strategy_table(u_sol):
    s = U_strategy(u_sol)
    grid = np.linspace(-199.0, 49.0, 300)
    exact = np.array([pi_U(u_sol, u_sol.spec, w) for w in grid])
    assert np.allclose(s.interpolate(grid), exact, rtol=1e-5)
    assert s.discontinuities == ()
