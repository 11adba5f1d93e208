import numpy as np
import pytest
from scipy.optimize import minimize_scalar

from oracles import mp_ruin_at_death
from ruinkit import DomainError, EXAMPLE_PARAMS, ProblemSpec, phi, pi_phi, pi_psi, psi
from ruinkit.ruin_at_death import (
    _ratio_lhs,
    boundary_residuals,
    phi_derivatives,
    phi_strategy,
    solve_boundaries,
    solve_ratio_equation,
    solve_ruin_at_death,
)


def test_ratio_root(spec):
    rho = solve_ratio_equation(spec)
    assert 0 < rho < 1
    assert abs(_ratio_lhs(rho, spec, spec.consts) - (spec.consts.safe - spec.x)) < 1e-12
    assert _ratio_lhs(1.0, spec, spec.consts) == pytest.approx(spec.consts.safe - spec.M)
    assert _ratio_lhs(1e-12, spec, spec.consts) < -1e6


def test_golden_values_against_high_precision(spec, phi_sol):
    ref = mp_ruin_at_death(0.06, 0.02, 0.2, 0.04, 1.0, 0.0, -200.0)
    assert phi_sol.ratio == pytest.approx(float(ref["rho"]), rel=1e-12)
    assert phi_sol.y_x == pytest.approx(float(ref["y_x"]), rel=1e-11)
    assert phi_sol.y_M == pytest.approx(float(ref["y_M"]), rel=1e-11)
    assert phi_sol.beta == pytest.approx(float(ref["beta"]), rel=1e-11)
    assert phi_sol.dual.coeff1 == pytest.approx(float(ref["D1"]), rel=1e-10)
    assert phi_sol.dual.coeff2 == pytest.approx(float(ref["D2"]), rel=1e-10)


def test_boundary_signs_and_residuals(phi_sol):
    d = phi_sol.dual
    assert d.coeff1 < 0 and d.coeff2 < 0
    assert 0 < d.y_lo < d.y_hi
    assert phi_sol.beta > 0
    assert np.max(np.abs(boundary_residuals(phi_sol))) < 1e-9


@pytest.mark.parametrize("x, M", [(0.0, -10.0), (10.0, -50.0), (-20.0, -21.0), (40.0, -400.0)])
def test_other_levels(x, M):
    spec = ProblemSpec(EXAMPLE_PARAMS, x=x, M=M)
    sol = solve_ruin_at_death(spec)
    assert np.max(np.abs(boundary_residuals(sol))) < 1e-9
    ref = mp_ruin_at_death(0.06, 0.02, 0.2, 0.04, 1.0, x, M)
    assert sol.y_x == pytest.approx(float(ref["y_x"]), rel=1e-9)


@pytest.mark.parametrize("rho", [1e-6, 0.1, 0.5, 0.999, 1.0])
def test_reciprocal_boundary_positive(spec, rho):
    # the combination of powers is minimized at rho = 1, so y_x stays positive
    y_x, y_M, _, _, beta = solve_boundaries(spec, spec.consts, rho)
    assert y_x > 0 and y_M >= y_x and beta > 0


def test_value_branches(spec, phi_sol):
    assert phi(phi_sol, 50.0, 10.0) == 0.0
    assert phi(phi_sol, -150.0, -200.0) == 1.0
    assert phi(phi_sol, 0.0, 0.0) == pytest.approx(phi_sol.beta, rel=1e-14)
    # just above the absorbing level the value tends to one
    assert phi(phi_sol, -200.0 + 1e-9, -200.0 + 1e-9) == pytest.approx(1.0, abs=1e-8)
    with pytest.raises(DomainError):
        phi(phi_sol, 0.0, 1.0)


def test_continuity_and_smooth_fit_at_x(phi_sol):
    inner = phi(phi_sol, -1e-9, -1e-9)
    assert inner == pytest.approx(phi_sol.beta, abs=1e-8)
    left = phi_derivatives(phi_sol, -1e-9)[1]
    right = phi_derivatives(phi_sol, 1e-9)[1]
    assert abs(left - right) < 1e-7


def test_sandwich(spec, phi_sol):
    for w in np.linspace(-199.0, 49.5, 120):
        v = phi(phi_sol, w, w)
        assert 0.0 <= v <= psi(spec, w, w) if w > spec.x else 0.0 <= v <= 1.0


def test_monotone_decreasing(phi_sol):
    w = np.linspace(-199.5, 49.5, 400)
    vals = np.array([phi(phi_sol, v, v) for v in w])
    assert np.all(np.diff(vals) < 0)


def test_allocation_examples(spec, phi_sol):
    assert pi_phi(phi_sol, 25.0) == pytest.approx(10.3553, abs=5e-5)
    assert pi_phi(phi_sol, -50.0) > pi_psi(spec, -50.0) == pytest.approx(41.4214, abs=5e-5)
    lo, hi = phi_strategy(phi_sol).one_sided(0.0)
    assert lo > hi + 100
    with pytest.raises(DomainError):
        pi_phi(phi_sol, -201.0)


def test_strategy_ordering_in_dual(spec, phi_sol):
    """-y phi~''(y) exceeds the unconstrained allocation on the inner dual interval."""
    k = spec.consts
    d = phi_sol.dual
    ratio = (spec.params.mu - spec.params.r) / spec.params.sigma**2
    for y in np.linspace(d.y_lo, d.y_hi, 500)[1:-1]:
        w = d.d1(y)
        assert ratio * (-y * d.d2(y)) > k.xi * (k.safe - w)


def test_hjb_residual_both_sides(spec, phi_sol):
    prm, k = spec.params, spec.consts
    for w in np.concatenate([np.linspace(-199.0, -0.5, 80), np.linspace(0.5, 49.0, 50)]):
        v, d1, d2 = phi_derivatives(phi_sol, w)
        ind = 1.0 if w <= spec.x else 0.0
        resid = prm.lam * v - (prm.r * w - prm.c) * d1 + k.delta * d1 * d1 / d2 - prm.lam * ind
        assert abs(resid) < 1e-7


def test_dual_round_trip_and_convexity(spec, phi_sol):
    d = phi_sol.dual
    for y in np.linspace(d.y_lo, d.y_hi, 100):
        res = minimize_scalar(
            lambda w: phi(phi_sol, w, w) + w * y,
            bounds=(spec.M, spec.x),
            method="bounded",
            options={"xatol": 1e-10},
        )
        best = min(res.fun, phi(phi_sol, spec.x, spec.x) + spec.x * y, 1.0 + spec.M * y)
        assert abs(best - d.value(y)) < 1e-7
    h = 0.25
    for w in np.linspace(-199.0, 49.0, 200):
        if abs(w - spec.x) < 2 * h:
            continue
        fd = (phi(phi_sol, w + h, w - h) - 2 * phi(phi_sol, w, w - h) + phi(phi_sol, w - h, w - h)) / h**2
        assert fd >= -1e-8


def test_dual_curve_shape(phi_sol):
    d = phi_sol.dual
    ys = np.linspace(d.y_lo, d.y_hi, 300)
    assert np.all(d.d2(ys) < 0)
    assert np.all(np.diff(d.d1(ys)) < 0)


def test_strategy_table_matches_exact(phi_sol):
    s = phi_strategy(phi_sol)
    grid = np.linspace(-199.0, 49.0, 300)
    exact = np.array([pi_phi(phi_sol, w) for w in grid])
    assert np.allclose(s.interpolate(grid), exact, rtol=1e-5)
    assert s.discontinuities == (0.0,)
