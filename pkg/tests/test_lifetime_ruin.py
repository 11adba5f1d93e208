import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ruinkit import DomainError, EXAMPLE_PARAMS, ProblemSpec, min_wealth_cdf, pi_psi, psi
from ruinkit.lifetime_ruin import psi_strategy
from ruinkit.market import MarketParams


def test_example_value(spec):
    assert psi(spec, 25.0, 25.0) == pytest.approx(0.5**spec.consts.p, rel=1e-14)
    assert psi(spec, 25.0, 25.0) == pytest.approx(0.09383, abs=5e-5)


def test_boundary_branches(spec):
    assert psi(spec, 50.0, 10.0) == 0.0
    assert psi(spec, 30.0, -1.0) == 1.0
    assert psi(spec, 10.0, 0.0) == 1.0
    with pytest.raises(DomainError):
        psi(spec, 1.0, 2.0)


def test_allocation_examples(spec):
    assert pi_psi(spec, 0.0) == pytest.approx(20.7107, abs=5e-5)
    assert pi_psi(spec, 50.0) == 0.0
    w_l = spec.consts.w_l
    assert pi_psi(spec, w_l) == pytest.approx(w_l, rel=1e-14)
    with pytest.raises(DomainError):
        pi_psi(spec, 51.0)


def test_allocation_independent_of_levels(spec):
    other = ProblemSpec(EXAMPLE_PARAMS, x=-30.0, M=-90.0)
    for w in (-100.0, -3.0, 0.0, 12.0, 49.0):
        assert pi_psi(spec, w) == pi_psi(other, w)


def test_convex_decreasing(spec):
    w = np.linspace(0.5, 49.5, 200)
    vals = np.array([psi(spec, v, v) for v in w])
    assert np.all(np.diff(vals) < 0)
    h = 0.25
    fd = [(psi(spec, v + h, v - h) - 2 * psi(spec, v, v - h) + psi(spec, v - h, v - h)) / h**2 for v in w]
    assert min(fd) >= -1e-8


def test_hjb_residual(spec):
    prm, k = spec.params, spec.consts
    c, r, p = prm.c, prm.r, k.p
    for w in np.linspace(-80.0, 49.0, 60):
        A = 1.0 / (c - r * spec.x) ** p
        v = A * (c - r * w) ** p
        d1 = -r * p * A * (c - r * w) ** (p - 1)
        d2 = r * r * p * (p - 1) * A * (c - r * w) ** (p - 2)
        resid = prm.lam * v - (r * w - c) * d1 + k.delta * d1 * d1 / d2
        assert abs(resid) < 1e-9 * max(1.0, abs(prm.lam * v))
        # the minimizer of the HJB is the allocation
        pi_star = -(prm.mu - prm.r) / prm.sigma**2 * d1 / d2
        assert pi_star == pytest.approx(pi_psi(spec, w), rel=1e-12)


def test_min_wealth_cdf(spec):
    assert min_wealth_cdf(spec, 25.0, 25.0, 0.0) == psi(spec, 25.0, 25.0)
    assert min_wealth_cdf(spec, 25.0, 20.0, 20.0) == 1.0
    assert min_wealth_cdf(spec, 25.0, 25.0, -1e12) < 1e-20
    ys = np.linspace(-500, 24.9, 300)
    vals = [min_wealth_cdf(spec, 25.0, 25.0, y) for y in ys]
    assert np.all(np.diff(vals) >= 0)
    with pytest.raises(DomainError):
        min_wealth_cdf(spec, 50.0, 10.0, 0.0)


@settings(max_examples=100, deadline=None)
@given(
    st.floats(0.1, 20.0),
    st.floats(-40.0, 45.0),
    st.floats(0.0, 1.0),
    st.floats(0.0, 1.0),
)
def test_scale_invariance(scale, x, a, b):
    base = ProblemSpec(EXAMPLE_PARAMS, x=x)
    m = x + a * (50.0 - x) * 0.999
    w = m + b * (50.0 - m) * 0.999
    prm = MarketParams(EXAMPLE_PARAMS.mu, EXAMPLE_PARAMS.r, EXAMPLE_PARAMS.sigma, EXAMPLE_PARAMS.lam, scale)
    scaled = ProblemSpec(prm, x=scale * x)
    assert psi(scaled, scale * w, scale * m) == pytest.approx(psi(base, w, m), rel=1e-9, abs=1e-300)


@settings(max_examples=100, deadline=None)
@given(st.floats(-100.0, 49.0), st.floats(-100.0, 49.0))
def test_cdf_at_level_equals_psi(x, m):
    if not x < m:
        return
    spec = ProblemSpec(EXAMPLE_PARAMS, x=x)
    w = m
    assert min_wealth_cdf(spec, w, m, x) == psi(spec, w, m)


def test_strategy_object(spec):
    s = psi_strategy(spec)
    assert s(50.0) == 0.0
    grid = np.linspace(-150.0, 49.9, 400)
    assert np.allclose(s.interpolate(grid), [pi_psi(spec, w) for w in grid], rtol=1e-12)
    assert s.linear_slope == spec.consts.xi
