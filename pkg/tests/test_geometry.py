import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import SCENARIOS, ball_points
from expose_lab.geometry import (
    DegenerateGradientError,
    LocalDomain,
    boundary_sample,
    certify_convexity_at,
    certify_pseudoconvexity,
    complement_basis,
    interior_sample,
    normalize_at,
    parse_complex_vector,
)
from expose_lab.hermpoly import constant, norm_squared
from expose_lab.peak import tangent_ball
from expose_lab.scenarios import nonconvex_test_domain, nonconvex_test_rho


def test_domain_file_matches_builtin():
    dom = LocalDomain.load(SCENARIOS / "nonconvex_domain.json")
    assert dom.rho == nonconvex_test_rho()
    assert dom.chart_radius == 0.2


def test_raw_convexity_by_hand():
    # tangent hyperplane at 0 is {x2 = 0}; the Hessian there is diag(8, -4, 2) in (x1, y1, y2)
    assert certify_convexity_at(nonconvex_test_domain(), np.zeros(2)) == pytest.approx(-4.0, abs=1e-12)


def test_ball_is_convex_and_pseudoconvex():
    dom = LocalDomain.create(tangent_ball(1.0), [-1, 0], 1.01)
    assert certify_convexity_at(dom, np.zeros(2)) == pytest.approx(2.0)
    pts, misses = boundary_sample(dom, 50, seed=0)
    assert not misses
    assert certify_pseudoconvexity(dom, pts) > 0


def test_samples_respect_domain():
    dom = nonconvex_test_domain()
    inside = interior_sample(dom, 300, seed=3)
    assert inside.shape == (300, 2)
    assert dom.contains(inside).all()
    bd, _ = boundary_sample(dom, 100, seed=4)
    assert np.max(np.abs(dom.rho.eval(bd))) < 1e-10


def test_degenerate_gradient_is_rejected():
    dom = LocalDomain.create(norm_squared(2) + constant(2, -0.01), [0, 0], 0.5)
    with pytest.raises(DegenerateGradientError):
        certify_convexity_at(dom, np.zeros(2))


def test_normal_form_is_exact_for_quadratics(rng):
    dom = nonconvex_test_domain()
    chart = normalize_at(dom, np.zeros(2))
    w = ball_points(rng, 100, radius=0.3)
    assert np.allclose(chart.rho_hat().eval(w), chart.model(w), atol=1e-13)
    assert np.allclose(chart.unitary.conj().T @ chart.unitary, np.eye(2))
    assert np.allclose(chart.levi, np.diag([0.5, 0.5]))


def test_chart_round_trip(rng):
    chart = normalize_at(nonconvex_test_domain(), np.zeros(2), scale=0.5)
    z = ball_points(rng, 20, radius=0.2)
    assert np.allclose(chart.from_chart(chart.to_chart(z)), z)


def test_normalize_rejects_interior_point():
    with pytest.raises(ValueError):
        normalize_at(nonconvex_test_domain(), np.array([0, -0.1]))


@given(st.lists(st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False), min_size=2, max_size=4))
def test_complement_basis_is_orthonormal(vals):
    v = np.array(vals)
    if np.linalg.norm(v) < 1e-3:
        return
    B = complement_basis(v / np.linalg.norm(v))
    assert np.allclose(B.conj().T @ B, np.eye(len(vals) - 1), atol=1e-10)
    assert np.allclose(v.conj() @ B, 0, atol=1e-10)


def test_parse_complex_vector_formats():
    assert np.allclose(parse_complex_vector(["1+2j", [0.5, -1], 3]), [1 + 2j, 0.5 - 1j, 3])
