import mpmath as mp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from expose_lab.onevar import (
    ConsistencyError,
    Identity,
    IllConditionedError,
    MobiusViolationError,
    StarShapeError,
    StripDumbbell,
    TableMap,
    TooCloseError,
    bumped_disk,
    cauchy_eval,
    circle_nodes,
    consistency_defect,
    disk_region,
    disk_test_grid,
    dumbbell_pair,
    ellipse_region,
    mobius,
    mobius_dichotomy_check,
    mobius_fuzz,
    polyfit_constrained,
    read_table_csv,
    region_from_boundary,
    riemann_map,
    write_table_csv,
)

radius = st.floats(0.001, 0.999)
disk_pt = st.tuples(st.floats(0, 0.999), st.floats(0, 2 * np.pi)).map(lambda p: p[0] * np.exp(1j * p[1]))


# --- disk automorphisms ------------------------------------------------------


@given(r=radius, t=st.floats(0, 2 * np.pi))
def test_mobius_preserves_circle(r, t):
    z = np.exp(1j * t)
    assert abs(abs(mobius(r, z)) - 1) < 1e-12


@given(r=radius, z=disk_pt)
def test_mobius_inverse(r, z):
    w = mobius(r, z)
    assert abs(mobius(-r, w) - z) < 1e-9 * max(1.0, 1 / (1 - r))


@given(r=radius, z=disk_pt)
def test_dichotomy_holds(r, z):
    kind = mobius_dichotomy_check(r, z)
    m = (z - r) / (1 - r * z)
    if kind == "modulus":
        assert abs(m) < abs(z) + 1e-12
    else:
        assert m.real < 1e-12


def test_mobius_complement_form():
    r = 1 - 1e-30
    z = np.array([0.0, 0.5, -0.9])
    exact = [complex((mp.mpf(x) - (1 - mp.mpf(10) ** -30)) / (1 - (1 - mp.mpf(10) ** -30) * x)) for x in z]
    assert np.allclose(mobius(r, z, one_minus_r=1e-30), exact, atol=1e-14)


def test_dichotomy_rejects_bad_input():
    with pytest.raises(ValueError):
        mobius_dichotomy_check(1.0, 0.1)
    with pytest.raises(ValueError):
        mobius_dichotomy_check(0.5, 1.0)
    assert issubclass(MobiusViolationError, ArithmeticError)


def test_fuzz_counts_partition():
    rep = mobius_fuzz(50_000, seed=3)
    assert rep["violations"] == 0
    assert rep["modulus"] + rep["half_plane_only"] == rep["samples"]


# --- polynomial fits and tables -----------------------------------------------


def test_polyfit_identity_and_exp():
    z = circle_nodes(128) * 0.9
    fit = polyfit_constrained(z, z, 5)
    assert np.allclose(fit.poly.monomial_coefficients()[:2], [0, 1], atol=1e-12)
    fit = polyfit_constrained(z, np.exp(z), 30)
    w = 0.5 * circle_nodes(17)
    assert np.max(np.abs(fit.poly.value(w) - np.exp(w))) < 1e-12


def test_polyfit_constraints_exact():
    z = np.exp(2j * np.pi * np.arange(200) / 200)
    cons = [(0.3, 2.0, 0.5), (-0.2j, 1j)]
    fit = polyfit_constrained(z, np.sin(3 * z), 20, constraints=cons)
    v, d = fit.poly.value_deriv(np.array([0.3, -0.2j]))
    assert abs(v[0] - 2.0) < 1e-12 and abs(d[0] - 0.5) < 1e-12
    assert abs(v[1] - 1j) < 1e-12
    assert fit.constraint_error < 1e-12


def test_polyfit_real_symmetry():
    z = 1.2 * circle_nodes(100)
    fit = polyfit_constrained(z, np.cosh(z) + z, 16, real=True)
    w = np.array([0.3 + 0.4j, -0.5 + 0.1j])
    assert np.allclose(fit.poly.value(w.conj()), fit.poly.value(w).conj(), atol=1e-12)


def test_polyfit_errors():
    with pytest.raises(ValueError):
        polyfit_constrained([0, 1], [0], 1)
    with pytest.raises((ValueError, IllConditionedError)):
        polyfit_constrained([0.1, 0.2], [1, 2], 1, constraints=[(0, 0, 0), (1, 1)])


@given(c=st.lists(st.complex_numbers(max_magnitude=2, allow_nan=False, allow_infinity=False), min_size=1, max_size=6))
def test_cauchy_matches_polynomial(c):
    p = np.polynomial.Polynomial(c)
    table = p(circle_nodes(256))
    z = np.array([0.0, 0.3 + 0.4j, -0.7, 0.5j])
    f, d1, d2 = cauchy_eval(table, z, order=2)
    assert np.allclose(f, p(z), atol=1e-12)
    assert np.allclose(d1, p.deriv()(z), atol=1e-11)
    assert np.allclose(d2, p.deriv(2)(z), atol=1e-9)


def test_cauchy_refuses_points_near_circle():
    with pytest.raises(TooCloseError):
        cauchy_eval(np.ones(64), np.array([0.99]))


def test_table_map():
    T = TableMap.from_function(np.exp, 512, symmetric=True)
    assert np.allclose(T.taylor_coefficients(4), [1, 1, 1 / 2, 1 / 6], atol=1e-14)
    assert T.symmetry_defect() < 1e-14
    assert np.max(T.cr_defect(np.array([0.2 + 0.1j, -0.4]))) < 1e-8
    assert Identity().value(0.3j) == 0.3j


# --- Riemann maps -------------------------------------------------------------


def test_riemann_map_of_disk_is_affine():
    R = riemann_map(disk_region(-2.0, 1.0), nodes=256)
    assert np.allclose(R.taylor_coefficients(3), [-2, 1, 0], atol=1e-13)


def ellipse_oracle(a, b):
    """Ellipse with foci +-1 onto the disk: sqrt(k) sn((2K/pi) arcsin w, k)."""
    xi = mp.atanh(mp.mpf(b) / a)
    k = mp.kfrom(q=mp.exp(-4 * xi))
    K = mp.ellipk(k**2)
    return lambda w: complex(mp.sqrt(k) * mp.ellipfun("sn", 2 * K / mp.pi * mp.asin(w), m=k**2)), float(mp.pi / (2 * K * mp.sqrt(k)))


def test_riemann_map_of_ellipse_matches_elliptic_oracle():
    a, b = 1.25, 0.75
    R = riemann_map(ellipse_region(a, b))
    inverse, conformal_radius = ellipse_oracle(a, b)
    assert R.value_deriv(np.array([0j]))[1][0] == pytest.approx(conformal_radius, abs=1e-12)
    z = 0.8 * np.exp(2j * np.pi * np.arange(12) / 12)
    w = R.value(z)
    assert max(abs(inverse(x) - y) for x, y in zip(w, z)) < 1e-12
    assert R.correspondence_residual() < 1e-13


def test_near_disk_maps_converge():
    z = 0.9 * disk_test_grid(10, 48)
    z = z[np.abs(z) <= 0.9]
    sups = []
    for d in (0.2, 0.1, 0.05):
        R = riemann_map(bumped_disk(0.0, d), relax=0.5)
        sups.append(np.max(np.abs(R.value(z) - z)))
    assert sups[0] > sups[1] > sups[2]


def test_region_from_boundary():
    pts = ellipse_region(1.5, 1.0).boundary(512)
    reg = region_from_boundary(pts, 0.0)
    th = np.linspace(0, 2 * np.pi, 7)
    assert np.allclose(reg.radius(th), ellipse_region(1.5, 1.0).radius(th), atol=1e-6)
    swapped = pts.copy()
    swapped[[10, 11]] = swapped[[11, 10]]  # argument no longer monotone
    with pytest.raises(StarShapeError):
        region_from_boundary(swapped, 0.0)
    with pytest.raises(StarShapeError):
        region_from_boundary(pts, 1.5)  # centre on the boundary


# --- dumbbells ------------------------------------------------------------------


@pytest.fixture(scope="module")
def pair():
    return dumbbell_pair(-2.0, 2.0, 0.3)


def test_dumbbell_normalisation(pair):
    assert abs(pair.f.value(np.array([0j]))[0] + 2) < 1e-12
    assert pair.endpoints == (-3 + 0j, 3 + 0j)
    assert pair.injectivity == "boundary-graph"
    assert pair.containment <= 0.9 * 0.3
    assert 0 < pair.one_minus_r < 1
    assert pair.r_value == pytest.approx(1 - pair.one_minus_r, abs=4e-16)


def test_strip_map_symmetry():
    strip = StripDumbbell(-2.0, 2.0, 0.05)
    s = np.array([0.3 + 0.2j, 5.0 - 1.0j, strip.L / 2 + 0.7j])
    assert np.allclose(strip.psi(strip.L - s), 0.0 - strip.psi(s), atol=1e-13)
    assert np.allclose(strip.psi(s.conj()), strip.psi(s).conj(), atol=1e-13)


def test_strip_map_derivatives():
    strip = StripDumbbell(-2.0, 3.0, 0.1)
    s = np.array([0.4 + 0.3j, 10.0 - 1.2j, -3.0 + 0.5j])
    h = 1e-6
    d1, d2 = strip.psi_derivs(s)
    assert np.allclose(d1, (strip.psi(s + h) - strip.psi(s - h)) / (2 * h), atol=1e-8)
    h = 1e-4
    assert np.allclose(d2, (strip.psi(s + h) - 2 * strip.psi(s) + strip.psi(s - h)) / h**2, atol=1e-6)
    with mp.workdps(30):
        assert complex(strip.psi_mp(mp.mpc(0.4, 0.3))) == pytest.approx(complex(strip.psi(s[0])), abs=1e-14)


def test_dumbbell_image_stays_in_region(pair):
    w = pair.f.value(disk_test_grid(40, 160))
    assert pair.region.contains(w).all()
    assert abs(pair.region.winding(-2.0)) == 1 and abs(pair.region.winding(2.0)) == 1
    assert pair.region.winding(0.0 + 0.5j) == 0
    assert pair.region.symmetry_defect() < 1e-12


def test_dumbbell_derivatives(pair):
    z = np.array([0.1 + 0.2j, -0.5 + 0.3j, 0.6j])
    v, d = pair.f.value_deriv(z)
    h = 1e-6
    assert np.allclose(d, (pair.f.value(z + h) - pair.f.value(z - h)) / (2 * h), rtol=1e-7)
    assert np.max(pair.f.cr_defect(z)) < 1e-7 * np.max(np.abs(d))
    d2 = pair.f.second_deriv(z)
    assert np.allclose(d2, (pair.f.deriv(z + h) - pair.f.deriv(z - h)) / (2 * h), rtol=1e-6)


def test_consistency_relation(pair):
    s_r = pair.f.strip.L - 2 * pair.f.s0
    assert consistency_defect(pair.f, s_r, disk_test_grid(10, 24)) < 1e-12
    # g is the reflected map c - f(-z)
    z = np.array([0.2 + 0.1j])
    assert np.allclose(pair.g.value(z), 0.0 - pair.f.value(-z))


def test_dumbbell_rejects_bad_input():
    with pytest.raises(ValueError):
        dumbbell_pair(0.0, 1.5, 0.1)
    with pytest.raises(ValueError):
        StripDumbbell(0.0, 4.0, 0.0)
    assert issubclass(ConsistencyError, RuntimeError)


def test_csv_round_trip(tmp_path):
    vals = np.array([1 + 2j, -0.5, 1e-300j])
    write_table_csv(tmp_path / "t.csv", vals)
    assert np.array_equal(read_table_csv(tmp_path / "t.csv"), vals)
