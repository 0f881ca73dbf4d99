import numpy as np
import pytest

from conftest import ball_points
from expose_lab.ballexpose import (
    BallDumbbellConfig,
    SwitchBlend,
    build_exposer,
    delta_schedule,
    in_iv_target,
    in_U,
    in_V,
    isotopy_at,
    near_point_grid,
    rescale_map,
    t_zero_limit,
)


@pytest.fixture(scope="module")
def base():
    return build_exposer(BallDumbbellConfig(nu=2))


def test_delta_schedule_halves():
    assert [delta_schedule(k) for k in (0, 1, 2)] == [0.3, 0.15, 0.075]


def test_config_validation():
    with pytest.raises(ValueError):
        BallDumbbellConfig(r=2.0, s=2.5)
    with pytest.raises(ValueError):
        BallDumbbellConfig(eps=0.6)
    assert BallDumbbellConfig().is_base
    assert not BallDumbbellConfig(r=0.5).is_base


def test_exposed_point(base):
    top = base.map.eval(np.array([[0, 1.0]]))[0]
    assert np.allclose(top, [0, 4.5], atol=1e-12)


def test_exposer_image_stays_in_dumbbell(base):
    z = ball_points(np.random.default_rng(0), 2000, radius=0.999)
    w = base.map.eval(z)
    assert np.allclose(w[:, 0], z[:, 0])
    assert base.pair.region.contains(w[:, 1]).all()


def test_membership_sets():
    cfg = BallDumbbellConfig()
    # V is the 0.3-tube about the segment from 1 to s - r = 1.5
    pts = np.array([[0, 1.0], [0, 1.4], [0, 2.0], [0.29j, 1.2], [0, 4.5], [0, 3.0 + 1.49j], [0, 5.0]])
    assert in_V(cfg, pts).tolist() == [True, True, False, True, False, False, False]
    assert in_iv_target(cfg, pts).tolist() == [True, True, True, True, True, True, False]
    assert in_U(cfg, np.array([[0, 4.7], [0, 4.9]])).tolist() == [True, False]


def test_near_point_grid_in_ball():
    g = near_point_grid(2, 0.1, 10)
    assert np.all(np.linalg.norm(g, axis=1) <= 1 + 1e-12)
    assert np.all(np.linalg.norm(g - np.array([0, 1]), axis=1) <= 0.1 + 1e-12)
    assert np.any(np.abs(np.linalg.norm(g, axis=1) - 1) < 1e-12)


def test_isotopy_limit_is_linear(base):
    z = ball_points(np.random.default_rng(1), 8, radius=0.5)
    lim = t_zero_limit(base, z)
    assert lim["extrapolation_error"] < 1e-6
    assert lim["fprime0"][0] > 0 and lim["fprime0"][1] == 0
    assert np.allclose(isotopy_at(base, 1.0).eval(z), base.map.eval(z))


def test_rescaler_targets():
    resc = rescale_map((1.5, 3.0), (0.5, 3.0))
    near = 0.999 * ball_points(np.random.default_rng(2), 500, n=1)[:, 0]
    far = 3.0 + 1.5 * ball_points(np.random.default_rng(3), 500, n=1)[:, 0]
    assert np.max(np.abs(resc.f.value(near) - near)) < 1e-4
    assert np.max(np.abs(resc.h.value(near) - 1)) < 1e-4
    assert np.max(np.abs(resc.f.value(far) - (3.0 + (far - 3.0) / 3))) < 1e-4
    assert np.max(np.abs(resc.h.value(far) - 1 / 3)) < 1e-4
    v, d = resc.f.value_deriv(np.array([4.5]))
    assert v[0] == pytest.approx(3.5, abs=1e-14) and d[0] == pytest.approx(1 / 3, abs=1e-14)
    assert resc.h.value(np.array([4.5]))[0] == pytest.approx(1 / 3, abs=1e-14)


def test_switch_blend_derivatives():
    sb = rescale_map((1.5, 3.0), (0.5, 3.0)).f
    assert isinstance(sb, SwitchBlend)
    z = np.array([0.5 + 0.2j, 2.0 - 0.3j, 1.4])
    h = 1e-6
    assert np.allclose(sb.deriv(z), (sb.value(z + h) - sb.value(z - h)) / (2 * h), rtol=1e-6)
    assert np.allclose(sb.second_deriv(z), (sb.deriv(z + h) - sb.deriv(z - h)) / (2 * h), rtol=1e-5, atol=1e-8)
    assert np.max(sb.cr_defect(z)) < 1e-6


def test_polyfit_rescaler_is_the_slow_alternative():
    resc = rescale_map((1.5, 3.0), (0.5, 3.0), method="polyfit", degree=40, samples=300)
    assert resc.method == "polyfit"
    assert resc.errors["jet_value"] < 1e-10
    assert resc.errors["far_disk_f"] > 1e-4


def test_rescaled_exposer_hits_target():
    ex = build_exposer(BallDumbbellConfig(r=0.5, s=3.0, nu=2))
    top = ex.map.eval(np.array([[0, 1.0]]))[0]
    assert np.allclose(top, [0, 3.5], atol=1e-12)
