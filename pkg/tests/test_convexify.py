import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from expose_lab.convexify import (
    PlannerError,
    build_convexifier,
    build_family_convexifier,
    bump_bound,
    bump_peak,
    model_c1_bound,
    multiscale_probe,
    plan_parameters,
    verify_map,
)
from expose_lab.geometry import LocalDomain
from expose_lab.hermpoly import norm_squared, re_monomial
from expose_lab.peak import UncertifiedPeakError, certify_peak, make_ball_peak, make_levi_peak, tangent_ball
from expose_lab.scenarios import nonconvex_test_domain


def annulus_sup(params, points=200_001):
    """Dense re-evaluation of each bump's bound outside its own annulus."""
    R = params.chart_radius
    xs = np.unique(np.concatenate([np.linspace(0, R, points), np.geomspace(1e-300, R, points)]))
    lower = list(params.radii[1:]) + [0.0]
    out = []
    for N, hi, lo in zip(params.exponents, params.radii, lower):
        x = xs[(xs <= lo) | (xs >= hi)]
        with np.errstate(divide="ignore"):
            logb = math.log(params.K_Q) + math.log(float(N)) + 2 * np.log(x) + np.log1p(x) - float(N) * params.decay_c * x * x
        out.append(float(np.exp(logb).max()))
    return out


@pytest.mark.parametrize("c,eps", [(0.5, 0.1), (1.0, 0.2), (0.25, 0.1)])
def test_plan_count_and_bounds(c, eps):
    p = plan_parameters(c, eps)
    assert p.M == math.ceil(2 / (eps * math.e * c)) + 1
    tol = eps / (2 * p.M)
    assert max(annulus_sup(p)) < tol
    assert list(p.radii) == sorted(p.radii, reverse=True)
    assert all(b > a for a, b in zip(p.exponents, p.exponents[1:]))


def test_plan_infeasible_raises():
    with pytest.raises(PlannerError):
        plan_parameters(0.5, 0.025, K_Q=4.5)
    with pytest.raises(PlannerError):
        plan_parameters(0.5, 0.1, cap=2**10)
    with pytest.raises(UncertifiedPeakError):
        plan_parameters(0.0, 0.1)


@given(c=st.floats(0.05, 20.0))
def test_bump_peak_formula(c):
    x, m = bump_peak(c)
    xs = np.linspace(0, 10 / c, 100_001)
    assert np.max(xs * np.exp(-c * xs)) <= m * (1 + 1e-12)
    assert x * np.exp(-c * x) == pytest.approx(m, rel=1e-12)


@given(N=st.integers(1, 10**6), x=st.floats(1e-6, 2.0))
def test_bump_bound_closed_form(N, x):
    want = 2.0 * N * x * x * math.exp(-N * 0.5 * x * x) * (1 + x)
    assert bump_bound(np.array([x]), N, 0.5, 2.0)[0] == pytest.approx(want, rel=1e-10, abs=1e-300)


def test_ball_needs_no_correction():
    dom = LocalDomain.create(tangent_ball(1.0), [-1, 0], 0.5)
    peak = make_ball_peak(1.0)
    F, _ = build_convexifier(dom, np.zeros(2), peak, 0.1)
    assert F.is_identity
    z = dom.grid(6)
    assert np.allclose(F.eval(z), z)


@pytest.fixture(scope="module")
def nonconvex_map():
    dom = nonconvex_test_domain()
    peak = certify_peak(make_levi_peak(dom, np.zeros(2)), dom, count=2000)
    F, params = build_convexifier(dom, np.zeros(2), peak, 0.05)
    return dom, F, params


def test_convexifier_small_grid(nonconvex_map):
    dom, F, params = nonconvex_map
    rep = verify_map(F, dom, np.zeros(2), 0.05, per_axis=12)
    assert rep.c1_dist < 0.05
    assert rep.convexity_eig > 0
    assert rep.tangency_err < 1e-8
    assert rep.fixed_point_err <= 1e-12 and rep.jacobian_err <= 1e-12
    assert rep.injectivity_certified
    assert rep.c1_model_bound >= rep.c1_dist
    assert '"c1_dist"' in rep.to_json()


def test_multiscale_probe_respects_model_bound(nonconvex_map):
    _, F, params = nonconvex_map
    probe = multiscale_probe(F, nonconvex_test_domain(), directions=8, radii=100)
    assert 0 < probe <= model_c1_bound(params) * (1 + 1e-9)


def test_peak_point_must_match():
    dom = nonconvex_test_domain()
    peak = make_ball_peak(1.0, zeta=np.array([0.01, 0]))
    with pytest.raises(ValueError):
        build_convexifier(dom, np.zeros(2), peak, 0.1)


def test_family_is_continuous():
    rho = re_monomial(2, [0, 1], 2.0) + norm_squared(2) + re_monomial(2, [2, 0], 0.5)
    dom = LocalDomain.create(rho, [0, 0], 0.3)
    t = np.array([0.0, 0.002, 0.004])
    zetas = np.stack([t, -1 + np.sqrt(1 - 1.5 * t * t)], axis=1).astype(complex)
    maps, params, cont = build_family_convexifier(dom, zetas, 0.1, count=500, grid_per_axis=6)
    assert len(maps) == 3
    assert all(np.allclose(F.eval(z[None, :]), z) for F, z in zip(maps, zetas))
    assert np.isfinite(cont["lipschitz_fit"])
