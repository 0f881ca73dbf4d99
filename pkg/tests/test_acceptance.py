"""Acceptance checks, one test per criterion, tolerances as pinned."""

import filecmp
import math
import shutil
import time

import mpmath as mp
import numpy as np
import pytest

from conftest import SCENARIOS, ball_points
from expose_lab.ballexpose import BallDumbbellConfig, build_exposer, rescale_map
from expose_lab.convexify import bump_peak
from expose_lab.hull import annulus_radii
from expose_lab.onevar import disk_test_grid, dumbbell_pair, mobius_fuzz
from expose_lab.peak import make_ball_peak
from expose_lab.scenarios import (
    exp_ball_expose,
    exp_convexify,
    exp_derivative_check,
    exp_dumbbell,
    exp_hull_demo,
    exp_peak_decay,
    exp_plan,
    exp_rescaler,
    nonconvex_test_domain,
    run_scenario,
)

pytestmark = pytest.mark.acceptance


def test_criterion_01_mobius_dichotomy():
    t0 = time.perf_counter()
    rep = mobius_fuzz(1_000_000, seed=0, tol=1e-12)
    elapsed = time.perf_counter() - t0
    assert rep["samples"] == 1_000_000
    assert rep["violations"] == 0
    assert elapsed < 5.0
    # independent recount on a fresh sample with the plain formula
    rng = np.random.default_rng(99)
    r = rng.uniform(1e-9, 1 - 1e-9, 200_000)
    z = np.sqrt(rng.uniform(0, 1, r.size)) * np.exp(2j * np.pi * rng.uniform(0, 1, r.size))
    m = (z - r) / (1 - r * z)
    assert not np.any((np.abs(m) >= np.abs(z) + 1e-12) & (m.real >= 1e-12))


def test_criterion_02_peak_decay():
    out = exp_peak_decay(r=1.0, count=10_000, seed=0)
    assert out.report["samples"] == 10_000
    assert out.report["sup_ratio"] <= 1 + 1e-9
    # analytic oracle: |z_1 + 1|^2 + |z_2|^2 <= 1 forces Re z_1 <= -|z|^2 / 2
    z = ball_points(np.random.default_rng(7), 10_000, radius=1.0, center=[-1, 0])
    sphere = np.random.default_rng(8).standard_normal((2000, 4))
    sphere /= np.linalg.norm(sphere, axis=1, keepdims=True)
    z = np.concatenate([z, np.array([-1, 0]) + sphere[:, :2] + 1j * sphere[:, 2:]])
    bound = -np.sum(np.abs(z) ** 2, axis=1) / 2
    assert np.all(z[:, 0].real <= bound + 1e-12)
    oracle = np.exp(z[:, 0].real - bound)
    ratio = make_ball_peak(1.0).decay_ratio(z)
    assert np.allclose(ratio, oracle, rtol=1e-12)
    assert ratio.max() <= 1 + 1e-9


def _real_fd_jet(rho, z, h=1e-5):
    """Wirtinger jet from real central differences of the real function."""
    n = z.shape[0]

    def f(x):
        return rho.eval(x[:n] + 1j * x[n:])

    x0 = np.concatenate([z.real, z.imag])
    E = np.eye(2 * n) * h
    g = np.array([(f(x0 + e) - f(x0 - e)) / (2 * h) for e in E])
    H = np.array([[(f(x0 + a + b) - f(x0 + a - b) - f(x0 - a + b) + f(x0 - a - b)) / (4 * h * h) for b in E] for a in E])
    grad = 0.5 * (g[:n] - 1j * g[n:])
    hxx, hyy, hxy = H[:n, :n], H[n:, n:], H[:n, n:]
    holo = 0.25 * (hxx - hyy - 1j * (hxy + hxy.T))
    levi = 0.25 * (hxx + hyy + 1j * (hxy - hxy.T))
    return grad, holo, levi


def test_criterion_03_derivative_oracles():
    out = exp_derivative_check(probes=1000, seed=0)
    assert out.report["probes_per_build"] == 1000
    for name, errs in {**out.report["jets"], **out.report["maps"]}.items():
        assert max(errs.values()) < 1e-6, name
    # second oracle: real-coordinate differences on the test domain's jets
    rho = nonconvex_test_domain().rho
    pts = ball_points(np.random.default_rng(5), 1000, radius=0.2)
    _, G, Hh, L = rho.jet_arrays(pts)
    worst = 0.0
    for k in range(pts.shape[0]):
        g, h, lv = _real_fd_jet(rho, pts[k])
        for got, want in ((G[k], g), (Hh[k], h), (L[k], lv)):
            worst = max(worst, np.max(np.abs(got - want)) / max(1.0, np.max(np.abs(want))))
    assert worst < 1e-6


def test_criterion_04_convexifier():
    t0 = time.perf_counter()
    out = exp_convexify(domain="nonconvex_domain.json", zeta=[0, 0], eps=0.05, grid=40, seed=0, base=SCENARIOS)
    elapsed = time.perf_counter() - t0
    rep = out.report
    assert rep["grid"]["per_axis"] == 40
    assert rep["c1_dist"] < 0.05
    assert rep["kappa"] < 0.05 and rep["injectivity_certified"]
    assert rep["convexity_eig"] > 0
    assert rep["tangency_err"] < 1e-8
    assert rep["fixed_point_err"] <= 1e-12 and rep["jacobian_err"] <= 1e-12
    assert elapsed < 60.0
    # baseline by hand: on {x2 = 0} the Hessian is diag(8, -4, 2) in (x1, y1, y2)
    assert rep["raw_convexity_eig"] == pytest.approx(-4.0, abs=1e-12)


def test_criterion_05_parameter_plan():
    out = exp_plan(decay_c=0.5, eps=0.1)
    rep = out.report
    assert rep["M"] == 16
    tol = 0.1 / (2 * 16)
    R, c, K = rep["chart_radius"], rep["decay_c"], rep["K_Q"]
    xs = np.unique(np.concatenate([np.linspace(0, R, 400_001), np.geomspace(1e-300, R, 400_001)]))
    lower = rep["radii"][1:] + [0.0]
    for N, hi, lo in zip(rep["exponents"], rep["radii"], lower):
        x = xs[(xs <= lo) | (xs >= hi)]
        with np.errstate(divide="ignore"):
            logb = math.log(K) + math.log(float(N)) + 2 * np.log(x) + np.log1p(x) - float(N) * c * x * x
        assert np.exp(logb).max() < tol
    x_star, peak = bump_peak(0.5)
    assert x_star == pytest.approx(2.0, abs=1e-12)
    assert abs(peak - 2 / math.e) < 1e-12
    assert abs(2.0 * math.exp(-0.5 * 2.0) - 2 / math.e) < 1e-12


def _mp_consistency(pair, points):
    """``g(m(z)) - f(z)`` from the closed form, in extended precision."""
    strip, s0 = pair.f.strip, pair.f.s0
    a, b, L = strip.a, strip.b, strip.L
    s_r = L - 2 * s0
    with mp.workdps(int(s_r / math.log(10)) + 40):
        Lm = mp.mpf(L)

        def psi(s):
            return (a + 1 + mp.tanh(s / 2) + mp.tanh((s - Lm) / 2)
                    + (b - a - 2) / Lm * mp.log((1 + mp.exp(s)) / (1 + mp.exp(s - Lm))))

        def f(z):
            return psi(s0 + mp.log((1 + z) / (1 - z)))

        r = mp.tanh(mp.mpf(s_r) / 2)
        worst = 0.0
        for z in points:
            zm = mp.mpc(z.real, z.imag)
            m = (zm - r) / (1 - r * zm)
            worst = max(worst, float(abs((a + b - f(-m)) - f(zm))))
    return worst


def test_criterion_06_dumbbell_maps():
    t0 = time.perf_counter()
    out = exp_dumbbell(a=-2.0, b=2.0, deltas=(0.3, 0.15, 0.075))
    elapsed = time.perf_counter() - t0
    entries = out.report["entries"]
    for e in entries:
        assert abs(complex(e["f_at_zero"]) + 2) < 1e-8
        assert e["symmetry_defect"] < 1e-10
        assert e["consistency"] < 1e-5
    dist = [e["translate_distance"] for e in entries]
    assert dist[0] > dist[1] > dist[2]
    # r is tracked through 1 - r, which a double resolves (r itself rounds to 1)
    omr = [e["one_minus_r"] for e in entries]
    assert all(0 < v < 1 for v in omr)
    assert omr[0] > omr[1] > omr[2]
    assert elapsed < 120.0
    # independent closed-form consistency check, and the translate distance re-measured
    rng = np.random.default_rng(11)
    pts = np.sqrt(rng.uniform(0, 0.98, 25)) * np.exp(2j * np.pi * rng.uniform(0, 1, 25))
    for d, e in zip((0.3, 0.15, 0.075), entries):
        pair = dumbbell_pair(-2.0, 2.0, d)
        assert _mp_consistency(pair, pts) < 1e-5
        z = disk_test_grid(60, 240)
        z = z[np.abs(z - 1) >= 0.3]
        assert np.max(np.abs(pair.f.value(z) - (z - 2))) == pytest.approx(e["translate_distance"], rel=1e-12)


def test_criterion_07_ball_exposer():
    out = exp_ball_expose(r=1.5, s=3.0, nu_list=(2, 3, 4), grid=50, tol=1e-6, seed=0)
    rep = out.report
    assert rep["grid"] == 50 and rep["tol"] == 1e-6
    for nu in (2, 3, 4):
        ex = build_exposer(BallDumbbellConfig(r=1.5, s=3.0, nu=nu))
        assert abs(ex.pair.f.value(np.array([1.0 + 0j]))[0] - 4.5) < 1e-8
    sups = [e["ii_sup"] for e in rep["entries"]]
    assert sups[0] > sups[1] > sups[2]
    assert rep["iv_total_violations"] == 0
    assert rep["v_total_violations"] == 0
    assert rep["mechanism_total_violations"] == 0


def test_criterion_08_rescaler():
    out = exp_rescaler(source=(1.5, 3.0), target=(0.5, 3.0))
    assert out.ok
    resc = rescale_map((1.5, 3.0), (0.5, 3.0))
    rng = np.random.default_rng(4)
    disk = np.sqrt(rng.uniform(0, 1, 5000)) * np.exp(2j * np.pi * rng.uniform(0, 1, 5000))
    disk = np.concatenate([disk, np.exp(2j * np.pi * np.arange(720) / 720)])
    near, far = disk, 3.0 + 1.5 * disk
    psi = 3.0 + (far - 3.0) / 3.0
    assert np.max(np.abs(resc.f.value(far) - psi)) < 1e-4
    assert np.max(np.abs(resc.h.value(far) - 1 / 3)) < 1e-4
    assert np.max(np.abs(resc.f.value(near) - near)) < 1e-4
    assert np.max(np.abs(resc.h.value(near) - 1)) < 1e-4
    v, d = resc.f.value_deriv(np.array([4.5 + 0j]))
    assert abs(v[0] - 3.5) <= 1e-14
    assert abs(d[0] - 1 / 3) <= 1e-14
    assert abs(resc.h.value(np.array([4.5 + 0j]))[0] - 1 / 3) <= 1e-14


def test_criterion_09_hull_demo():
    inner, outer = annulus_radii()
    # x + 1/x = 3 with x = |z|^2 is x^2 - 3x + 1 = 0
    disc = math.sqrt(9 - 4)
    assert abs(inner - math.sqrt((3 - disc) / 2)) < 1e-12
    assert abs(outer - math.sqrt((3 + disc) / 2)) < 1e-12
    out = exp_hull_demo(rho0=1.0, count=1000, degree=8, seed=0)
    assert out.report["count"] == 1000 and out.report["degree"] == 8
    assert out.report["violations"] == 0
    assert out.report["label"] == "evidence"


def test_criterion_10_determinism(tmp_path):
    scenario = tmp_path / "acceptance.json"
    shutil.copy(SCENARIOS / "acceptance.json", scenario)
    shutil.copy(SCENARIOS / "nonconvex_domain.json", tmp_path / "nonconvex_domain.json")
    ok1, _ = run_scenario(scenario, tmp_path / "run1")
    ok2, _ = run_scenario(scenario, tmp_path / "run2")
    assert ok1 and ok2
    names = sorted(p.name for p in (tmp_path / "run1").iterdir())
    assert names == sorted(p.name for p in (tmp_path / "run2").iterdir())
    assert len([n for n in names if n.endswith(".json")]) == 10
    match, mismatch, errors = filecmp.cmpfiles(tmp_path / "run1", tmp_path / "run2", names, shallow=False)
    assert not mismatch and not errors
