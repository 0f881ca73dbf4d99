import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import ball_points
from expose_lab.hermpoly import (
    HermitianPolynomial,
    Term,
    norm_squared,
    quadratic_from_jet,
    re_monomial,
    real_hessian,
    unit_ball,
    validate,
)
from expose_lab.scenarios import nonconvex_test_rho

cplx = st.complex_numbers(max_magnitude=2.0, allow_nan=False, allow_infinity=False)


def termwise(poly, z):
    """Evaluate by looping over terms, independent of the vectorised path."""
    out = 0j
    for t in poly.terms:
        out += t.coeff * np.prod([z[i] ** t.alpha[i] * np.conj(z[i]) ** t.beta[i] for i in range(poly.n)])
    return out


def random_hermitian(rng, n=2, degree=2):
    terms = []
    for _ in range(6):
        a = tuple(int(v) for v in rng.integers(0, degree + 1, n))
        b = tuple(int(v) for v in rng.integers(0, degree + 1, n))
        terms.append(Term(a, b, complex(*rng.standard_normal(2))))
    return HermitianPolynomial.from_terms(n, terms).hermitized()


@given(z1=cplx, z2=cplx)
def test_eval_matches_termwise(z1, z2):
    rho = nonconvex_test_rho()
    z = np.array([z1, z2])
    assert rho.eval(z) == pytest.approx(termwise(rho, z).real, abs=1e-12)


def test_hermitized_is_real_valued(rng):
    poly = random_hermitian(rng, degree=3)
    assert validate(poly).ok
    vals = poly.eval_complex(ball_points(rng, 200))
    assert np.max(np.abs(vals.imag)) < 1e-12


def test_validate_reports_problems():
    bad = HermitianPolynomial(1, [Term((1,), (0,), 1.0)])
    rep = validate(bad)
    assert not rep.ok
    assert any("missing Hermitian partner" in v for v in rep.violations)
    diag = HermitianPolynomial(1, [Term((1,), (1,), 1j)])
    assert any("non-real" in v for v in validate(diag).violations)
    dup = HermitianPolynomial(1, [Term((1,), (1,), 1.0), Term((1,), (1,), 1.0)])
    assert any("duplicate" in v for v in validate(dup).violations)


def test_constructor_rejects_bad_indices():
    with pytest.raises(ValueError):
        HermitianPolynomial(2, [Term((1,), (0,), 1.0)])
    with pytest.raises(ValueError):
        HermitianPolynomial(1, [Term((-1,), (0,), 1.0)])
    with pytest.raises(ValueError):
        HermitianPolynomial(0, [])


def test_dict_round_trip(tmp_path):
    rho = nonconvex_test_rho()
    path = tmp_path / "rho.json"
    path.write_text(json.dumps(rho.to_dict()))
    assert HermitianPolynomial.load(path).canonical() == rho


def test_unit_ball_values():
    ball = unit_ball(3)
    assert ball.eval(np.zeros(3)) == -1.0
    assert ball.eval(np.array([0.6, 0.8j, 0])) == pytest.approx(0.0, abs=1e-15)


@given(a=cplx, b=cplx, z1=cplx, z2=cplx)
def test_substitute_affine_is_composition(a, b, z1, z2):
    rho = nonconvex_test_rho()
    A = np.array([[1.0, a], [0.5j, 1.0 + b]])
    shift = np.array([0.1, -0.2j])
    w = np.array([z1, z2]) / 4
    sub = rho.substitute_affine(A, shift)
    assert sub.eval(w) == pytest.approx(rho.eval(A @ w + shift), rel=1e-10, abs=1e-10)


def test_quadratic_from_jet_reproduces_quadratic():
    rho = nonconvex_test_rho()
    jet = rho.jet(np.zeros(2))
    rebuilt = quadratic_from_jet(jet.value, jet.dbar_grad, jet.holo_hess, jet.levi)
    pts = ball_points(np.random.default_rng(0), 50)
    assert np.allclose(rebuilt.eval(pts), rho.eval(pts), atol=1e-13)


def real_fd_hessian(fun, x, h=1e-4):
    m = x.shape[0]
    H = np.zeros((m, m))
    for i in range(m):
        for j in range(m):
            ei, ej = np.eye(m)[i] * h, np.eye(m)[j] * h
            H[i, j] = (fun(x + ei + ej) - fun(x + ei - ej) - fun(x - ei + ej) + fun(x - ei - ej)) / (4 * h * h)
    return H


def test_real_hessian_and_gradient_match_real_differences(rng):
    poly = random_hermitian(rng, degree=2)
    n = poly.n

    def real_f(x):
        return poly.eval(x[:n] + 1j * x[n:])

    for z in ball_points(rng, 5, radius=0.5):
        jet = poly.jet(z)
        x = np.concatenate([z.real, z.imag])
        g = np.array([(real_f(x + 1e-6 * e) - real_f(x - 1e-6 * e)) / 2e-6 for e in np.eye(2 * n)])
        assert np.allclose(jet.real_grad, g, atol=1e-7)
        assert np.allclose(jet.real_hess, real_fd_hessian(real_f, x), atol=1e-5)


def test_real_hessian_of_norm_squared_is_twice_identity():
    jet = norm_squared(2).jet(np.array([0.3, -0.1j]))
    assert np.allclose(real_hessian(jet.holo_hess, jet.levi), 2 * np.eye(4))


def test_re_monomial_value():
    p = re_monomial(2, [2, 0], 3.0)
    z = np.array([1 + 1j, 0])
    assert p.eval(z) == pytest.approx((3 * (1 + 1j) ** 2).real)
