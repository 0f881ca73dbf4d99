"""Exposing maps of the closed unit ball along a dumbbell.

Points ``p_x = (0, .., 0, x)`` and segments ``l_{x,y}`` between them live on
the last coordinate axis.  For the base configuration ``(r, s) = (1.5, 3)``
the exposer is ``phi(z) = (z', f(z_n))`` with ``f`` the dumbbell map for
``a = 0``, ``b = 3.5``; other configurations compose with a rescaling map
``(h(z_n) z', F(z_n))``.

Near the exposed point the interesting inputs satisfy
``1 - z_n ~ 1 - r`` with ``1 - r`` far below double resolution, so the
verifier complements the coordinate grid with a zoomed sample written in the
variable ``u = (1 - z_n) / (1 - r)`` and evaluated in extended precision.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import mpmath
import numpy as np

from .holo import FiberScale, MapExpr, OneVarOnCoord, ScaledIsotopy
from .onevar import (
    DumbbellPair,
    OneVarMap,
    _half_tanh_parts,
    dumbbell_pair,
    polyfit_constrained,
)

BASE_R, BASE_S = 1.5, 3.0
MEMBERSHIP_TOL = 1e-6


def delta_schedule(nu: int) -> float:
    return 0.3 * 2.0 ** (-nu)


@dataclass(frozen=True)
class BallDumbbellConfig:
    r: float = BASE_R
    s: float = BASE_S
    eps: float = 0.1
    nu: int = 2
    tube_c: float = 0.3

    def __post_init__(self):
        if not self.s > self.r + 1:
            raise ValueError("need s > r + 1")
        if not 0 < self.eps < 0.5:
            raise ValueError("eps must lie in (0, 0.5)")
        if not self.tube_c > 0:
            raise ValueError("tube half-width must be positive")

    @property
    def delta(self) -> float:
        return delta_schedule(self.nu)

    @property
    def is_base(self) -> bool:
        return (self.r, self.s) == (BASE_R, BASE_S)

    def to_dict(self) -> dict:
        return {"r": self.r, "s": self.s, "eps": self.eps, "nu": self.nu, "tube_c": self.tube_c, "delta": self.delta}


# ---------------------------------------------------------------------------
# Rescaling maps


class SwitchBlend(OneVarMap):
    """``A(z) + (B(z) - A(z)) chi(z) + alpha + beta (z - p)`` with affine ``A``, ``B``.

    ``chi(z) = (1 + tanh(kappa (z - c))) / 2`` is holomorphic off the vertical
    line ``Re z = c``.  ``alpha`` and ``beta`` are fixed so that the value (and
    optionally the derivative) at the anchor ``p`` are exact.
    """

    symmetric = True

    def __init__(self, A, B, c, kappa, anchor, value, slope=None):
        self.A = (float(A[0]), float(A[1]))
        self.B = (float(B[0]), float(B[1]))
        self.c, self.kappa, self.p = float(c), float(kappa), float(anchor)
        self.alpha, self.beta = 0.0, 0.0
        v, d = self._raw(np.array([anchor], dtype=complex), 1)[:2]
        self.alpha = float(value - v[0].real)
        if slope is not None:
            self.beta = float(slope - d[0].real)

    def _raw(self, z, order):
        z = np.asarray(z, dtype=complex)
        k = self.kappa
        th, sech2 = _half_tanh_parts(2 * k * (z - self.c))
        chi = 0.5 * (1 + th)
        a = self.A[0] + self.A[1] * z
        diff = (self.B[0] - self.A[0]) + (self.B[1] - self.A[1]) * z
        dd = self.B[1] - self.A[1]
        val = a + diff * chi + self.alpha + self.beta * (z - self.p)
        if order == 0:
            return (val,)
        chi1 = 0.5 * k * sech2
        d1 = self.A[1] + dd * chi + diff * chi1 + self.beta
        if order == 1:
            return val, d1
        chi2 = -(k**2) * sech2 * th
        return val, d1, 2 * dd * chi1 + diff * chi2

    def value(self, z):
        return self._raw(z, 0)[0]

    def value_deriv(self, z):
        return self._raw(z, 1)

    def second_deriv(self, z):
        return self._raw(z, 2)[2]

    def describe(self):
        return {"kind": "switch-blend", "kappa": self.kappa, "center": self.c, "anchor": self.p}


@dataclass
class Rescaler:
    source: tuple[float, float]
    target: tuple[float, float]
    h: OneVarMap
    f: OneVarMap
    method: str
    errors: dict = field(default_factory=dict)

    def map(self, n: int) -> MapExpr:
        return MapExpr([FiberScale(self.h, self.f, n)])


def _circle(center, radius, count):
    return center + radius * np.exp(2j * np.pi * np.arange(count) / count)


def rescale_map(source=(BASE_R, BASE_S), target=(0.5, 3.0), method: str = "switch", degree: int = 120,
                samples: int = 600, switch_decay: float = 30.0) -> Rescaler:
    """``z -> (h(z_n) z', F(z_n))`` carrying ``B_{r1}(p_{s1})`` to ``B_{r2}(p_{s2})``.

    ``F`` is close to the identity on the unit disk and to
    ``psi(z) = s2 + (r2/r1)(z - s1)`` on the disk of radius ``r1`` about
    ``s1``; ``h`` is close to 1 and to ``r2/r1`` there.  The jets
    ``F(s1+r1) = s2+r2``, ``F'(s1+r1) = r2/r1`` and ``h(s1+r1) = r2/r1`` are
    exact.

    ``method="switch"`` blends the two affine targets with a tanh switch
    centred in the gap; ``switch_decay`` is the exponent ``kappa * gap / 2``
    that sets the blending error ``~ exp(-switch_decay)``.  ``method="polyfit"``
    fits polynomials on the boundary circles instead.
    """
    (r1, s1), (r2, s2) = source, target
    if not (s1 > r1 + 1 and s2 > r2 + 1):
        raise ValueError("need s > r + 1 for both configurations")
    k = r2 / r1
    p = s1 + r1
    psi = (s2 - k * s1, k)
    if method == "switch":
        gap = (s1 - r1) - 1.0
        c = 1.0 + 0.5 * gap
        kappa = 2.0 * switch_decay / gap
        F = SwitchBlend((0.0, 1.0), psi, c, kappa, p, s2 + r2, k)
        h = SwitchBlend((1.0, 0.0), (k, 0.0), c, kappa, p, k)
    elif method == "polyfit":
        c1, c2 = _circle(0.0, 1.0, samples), _circle(s1, r1, samples)
        pts = np.concatenate([c1, c2])
        F = polyfit_constrained(pts, np.concatenate([c1, psi[0] + k * c2]), degree, [(p, s2 + r2, k)], real=True).poly
        h = polyfit_constrained(
            pts, np.concatenate([np.ones(samples), np.full(samples, k)]), degree, [(p, k)], real=True
        ).poly
    else:
        raise ValueError(f"unknown rescaling method {method!r}")
    c1, c2 = _circle(0.0, 1.0, 2048), _circle(s1, r1, 2048)
    errors = {
        "near_disk_f": float(np.max(np.abs(F.value(c1) - c1))),
        "near_disk_h": float(np.max(np.abs(h.value(c1) - 1.0))),
        "far_disk_f": float(np.max(np.abs(F.value(c2) - (psi[0] + k * c2)))),
        "far_disk_h": float(np.max(np.abs(h.value(c2) - k))),
        "jet_value": float(abs(F.value(np.array([p + 0j]))[0] - (s2 + r2))),
        "jet_slope": float(abs(F.deriv(np.array([p + 0j]))[0] - k)),
        "jet_h": float(abs(h.value(np.array([p + 0j]))[0] - k)),
    }
    seg = np.linspace(1.0, s1 - r1, 400) + 0j
    fs = F.value(seg)
    errors["segment_monotone"] = bool(np.all(np.diff(fs.real) > 0) and np.max(np.abs(fs.imag)) < 1e-12)
    errors["segment_h_min"] = float(np.min(h.value(seg).real))
    return Rescaler((r1, s1), (r2, s2), h, F, method, errors)


# ---------------------------------------------------------------------------
# Exposers


@dataclass
class Exposer:
    config: BallDumbbellConfig
    n: int
    pair: DumbbellPair
    rescaler: Rescaler | None
    map: MapExpr

    @property
    def f(self):
        return self.pair.f


def build_exposer(config: BallDumbbellConfig, n: int = 2) -> Exposer:
    """``phi(z) = (z', f(z_n))`` for the base configuration, rescaled otherwise."""
    if n < 2:
        raise ValueError("need n >= 2")
    pair = dumbbell_pair(0.0, BASE_S + BASE_R - 1.0, config.delta)
    prims = [OneVarOnCoord(pair.f, n)]
    resc = None
    if not config.is_base:
        resc = rescale_map((BASE_R, BASE_S), (config.r, config.s))
        prims.append(FiberScale(resc.h, resc.f, n))
    return Exposer(config, n, pair, resc, MapExpr(prims))


def isotopy_at(exposer: Exposer, t: float) -> MapExpr:
    """``z -> phi(t z) / t`` for ``0 < t <= 1``."""
    return MapExpr([ScaledIsotopy(exposer.map, t)])


def t_zero_limit(exposer: Exposer, z, ts=(1e-2, 1e-4)) -> dict:
    """Linear extrapolation of ``phi_t(z)`` to ``t = 0`` against ``(z', f'(0) z_n)``."""
    z = np.atleast_2d(np.asarray(z, dtype=complex))
    t1, t2 = ts
    v1 = isotopy_at(exposer, t1).eval(z)
    v2 = isotopy_at(exposer, t2).eval(z)
    lim = (t1 * v2 - t2 * v1) / (t1 - t2)
    slope = exposer.map.jac(np.zeros((1, exposer.n), dtype=complex))[0]
    linear = z @ slope.T
    return {
        "ts": list(ts),
        "fprime0": [float(slope[-1, -1].real), float(slope[-1, -1].imag)],
        "extrapolation_error": float(np.max(np.abs(lim - linear))),
        "distance_from_identity": float(np.max(np.abs(linear - z))),
    }


# ---------------------------------------------------------------------------
# Verification


def _seg_dist(w, lo, hi):
    """Distance from points of ``C^n`` to the segment ``l_{lo,hi}``."""
    x = np.clip(w[:, -1].real, lo, hi)
    d2 = np.sum(np.abs(w[:, :-1]) ** 2, axis=1) + w[:, -1].imag ** 2 + (w[:, -1].real - x) ** 2
    return np.sqrt(d2)


def _pt(n, x):
    p = np.zeros(n, dtype=complex)
    p[-1] = x
    return p


def in_V(config: BallDumbbellConfig, w, tol=MEMBERSHIP_TOL):
    return _seg_dist(w, 1.0, config.s - config.r) < config.tube_c + tol


def in_ball(center, radius, w, tol=MEMBERSHIP_TOL):
    return np.linalg.norm(w - center, axis=1) < radius + tol


def in_iv_target(config: BallDumbbellConfig, w, tol=MEMBERSHIP_TOL):
    n = w.shape[1]
    return (
        in_V(config, w, tol)
        | in_ball(_pt(n, config.s), config.r, w, tol)
        | in_ball(_pt(n, config.s + config.r), 0.0, w, tol)
    )


def in_U(config: BallDumbbellConfig, w, tol=MEMBERSHIP_TOL):
    """``U``: points within ``tube_c`` of ``l_{1,s-r}`` or of the closed ball ``B_r(p_s)``."""
    n = w.shape[1]
    d_ball = np.maximum(np.linalg.norm(w - _pt(n, config.s), axis=1) - config.r, 0.0)
    return np.minimum(_seg_dist(w, 1.0, config.s - config.r), d_ball) < config.tube_c + tol


def near_point_grid(n: int, eps: float, per_axis: int) -> np.ndarray:
    """Grid over the box around ``B_eps(p_1)``, clipped to the closed ball.

    The grid spans ``z_1`` and ``z_n`` (other coordinates zero).  Box points
    inside ``B_eps(p_1)`` but outside the ball are projected radially to the
    sphere and kept when they stay in ``B_eps(p_1)``, so the boundary is
    sampled as well as the interior.
    """
    a = np.linspace(-eps, eps, per_axis)
    xn = np.linspace(1.0 - eps, 1.0, per_axis)
    X1, Y1, Xn, Yn = np.meshgrid(a, a, xn, a, indexing="ij")
    z = np.zeros((X1.size, n), dtype=complex)
    z[:, 0] = (X1 + 1j * Y1).ravel()
    z[:, -1] = (Xn + 1j * Yn).ravel()
    p1 = _pt(n, 1.0)
    near = np.linalg.norm(z - p1, axis=1) < eps
    z = z[near]
    norm = np.linalg.norm(z, axis=1)
    inside = z[norm <= 1.0]
    proj = z[norm > 1.0] / norm[norm > 1.0, None]
    proj = proj[np.linalg.norm(proj - p1, axis=1) < eps]
    return np.concatenate([inside, proj])


def ball_grid_points(n: int, per_axis: int, sphere: int, seed: int) -> np.ndarray:
    """Coordinate grid of the closed ball in ``(z_1, z_n)`` plus random sphere points in ``C^n``."""
    a = np.linspace(-1.0, 1.0, per_axis)
    X1, Y1, Xn, Yn = np.meshgrid(a, a, a, a, indexing="ij")
    z = np.zeros((X1.size, n), dtype=complex)
    z[:, 0] = (X1 + 1j * Y1).ravel()
    z[:, -1] = (Xn + 1j * Yn).ravel()
    z = z[np.linalg.norm(z, axis=1) <= 1.0]
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((sphere, n)) + 1j * rng.standard_normal((sphere, n))
    g /= np.linalg.norm(g, axis=1)[:, None]
    return np.concatenate([z, g])


def zoom_sample(count_u: int = 24, count_angle: int = 24) -> list[tuple[complex, float, float]]:
    """``(u, lam, beta)`` triples for points near ``p_1`` at the ``1 - r`` scale.

    ``z_n = 1 - (1 - r) u`` with ``Re u > 0`` and
    ``z' = sqrt(1 - |z_n|^2) lam e^{i beta} e_1``; ``lam = 1`` is on the sphere.
    """
    out = []
    for rho in np.logspace(-3, 3, count_u):
        for alpha in np.linspace(-0.49 * np.pi, 0.49 * np.pi, count_angle):
            u = complex(rho * np.exp(1j * alpha))
            for lam, beta in ((0.0, 0.0), (0.5, 0.3), (1.0, 0.0), (1.0, 1.9)):
                out.append((u, lam, beta))
    return out


def _zoom_checks(exposer: Exposer, samples, tol: float) -> dict:
    """Membership (iv) and the dichotomy mechanism at the ``1 - r`` scale, in extended precision."""
    pair, cfg = exposer.pair, exposer.config
    strip = pair.f.strip
    s_r = strip.L - 2.0 * pair.f.s0
    digits = int(s_r / np.log(10.0)) + 40
    iv_viol, mech_viol, mech_count, strict_viol = 0, 0, 0, 0
    witnesses = []
    rescale = exposer.rescaler
    with mpmath.workdps(digits):
        r = mpmath.tanh(mpmath.mpf(s_r) / 2)
        e = 1 - r
        eps = mpmath.mpf(cfg.eps)
        for u, lam, beta in samples:
            zn = 1 - e * mpmath.mpc(u.real, u.imag)
            rest = 1 - abs(zn) ** 2
            if rest < 0:
                continue
            zp = mpmath.sqrt(rest) * lam * mpmath.expj(beta)
            if zn == 1:
                fz = mpmath.mpf(strip.b + 1.0)
            else:
                fz = strip.psi_mp(pair.f.s0 + mpmath.log((1 + zn) / (1 - zn)))
            wp, wn = zp, fz
            if rescale is not None:
                wn_d = complex(fz)
                wp = zp * complex(rescale.h.value(np.array([wn_d]))[0])
                wn = complex(rescale.f.value(np.array([wn_d]))[0])
            # (iv): V or B_r(p_s) or the exposed point, with the stated tolerance
            x = min(max(mpmath.re(wn), 1), cfg.s - cfg.r)
            d_seg = mpmath.sqrt(abs(wp) ** 2 + mpmath.im(wn) ** 2 + (mpmath.re(wn) - x) ** 2)
            d_ball = mpmath.sqrt(abs(wp) ** 2 + abs(wn - cfg.s) ** 2)
            d_top = mpmath.sqrt(abs(wp) ** 2 + abs(wn - (cfg.s + cfg.r)) ** 2)
            ok = d_seg < cfg.tube_c + tol or d_ball < cfg.r + tol or d_top < tol
            strict = d_seg < cfg.tube_c or d_ball < cfg.r or d_top == 0
            if not ok:
                iv_viol += 1
                if len(witnesses) < 5:
                    witnesses.append({"u": [u.real, u.imag], "lam": lam, "beta": beta})
            strict_viol += 0 if strict else 1
            # mechanism: Re m(z_n) > 0 implies (z', m(z_n)) in the ball away from p_{-1}
            m = (zn - r) / (1 - r * zn)
            if mpmath.re(m) > 0:
                mech_count += 1
                in_ball_ = abs(zp) ** 2 + abs(m) ** 2 <= 1
                away = mpmath.sqrt(abs(zp) ** 2 + abs(m + 1) ** 2) >= eps
                if not (in_ball_ and away):
                    mech_viol += 1
    return {
        "zoom_points": len(samples),
        "zoom_iv_violations": iv_viol,
        "zoom_iv_strict_violations": strict_viol,
        "zoom_witnesses": witnesses,
        "mechanism_points": mech_count,
        "mechanism_violations": mech_viol,
        "digits": digits,
    }


def _eval_chunks(mapping, z, chunk=200_000):
    return np.concatenate([mapping.eval(z[i : i + chunk]) for i in range(0, z.shape[0], chunk)])


def verify_exposer(
    exposers: list[Exposer],
    grid: int = 50,
    t_values=(0.25, 0.5, 0.75, 1.0),
    ball_per_axis: int = 12,
    sphere_points: int = 2000,
    u_grid: int = 24,
    tol: float = MEMBERSHIP_TOL,
    seed: int = 0,
) -> dict:
    """Check properties (i) to (v) for a family of exposers (one per fidelity index).

    Returns a report with one entry per exposer and the cross-family trend of
    property (ii).  Violations are counted and a few witnesses kept.
    """
    if len(exposers) < 2:
        raise ValueError("need at least two fidelity indices")
    entries = []
    for ex in exposers:
        cfg, n = ex.config, ex.n
        p1 = _pt(n, 1.0)
        near = near_point_grid(n, cfg.eps, grid)
        ball = ball_grid_points(n, ball_per_axis, sphere_points, seed)
        away = ball[np.linalg.norm(ball - p1, axis=1) >= cfg.eps]

        # (iii) the exposed point
        top = ex.map.eval(p1[None, :])[0]
        err_iii = float(np.linalg.norm(top - _pt(n, cfg.s + cfg.r)))

        # (iv) on the coordinate grid
        img = _eval_chunks(ex.map, near)
        ok = in_iv_target(cfg, img, tol)
        iv = int(np.count_nonzero(~ok))
        iv_w = near[~ok][:5]

        # (ii), (v) and injectivity along the isotopy
        sup_ii, v_viol, kappas = 0.0, 0, {}
        near_v = near_point_grid(n, cfg.eps, max(grid // 2, 8))
        radial = 1.0 - np.logspace(-1, -15, 29)
        for t in t_values:
            phi_t = isotopy_at(ex, t)
            diff = _eval_chunks(phi_t, away) - away
            sup_ii = max(sup_ii, float(np.max(np.linalg.norm(diff, axis=1))))
            v_viol += int(np.count_nonzero(~in_U(cfg, _eval_chunks(phi_t, near_v), tol)))
            # radial probes towards p_1 reach the crowded end of the neck
            probe = np.zeros((radial.shape[0], n), dtype=complex)
            probe[:, -1] = radial
            pts = np.concatenate([t * ball, t * probe])
            if ex.rescaler is None:
                kap = float(np.max(np.abs(ex.f.deriv(pts[:, -1]) - 1.0)))
            else:
                J = ex.map.jac(pts)
                kap = float(np.max(np.linalg.norm(J - np.eye(n), ord=2, axis=(1, 2))))
            kappas[str(t)] = kap

        # (i) finite-difference t-derivative on the ball grid
        h = 1e-4
        dts = []
        for t in (0.3, 0.6, 0.9):
            dphi = (_eval_chunks(isotopy_at(ex, t + h), ball) - _eval_chunks(isotopy_at(ex, t - h), ball)) / (2 * h)
            dts.append(float(np.max(np.linalg.norm(dphi, axis=1))))

        zoom = _zoom_checks(ex, zoom_sample(u_grid, u_grid), tol)
        cert = "kappa" if max(kappas.values()) < 1 else (
            "onevar-boundary" if ex.pair.injectivity == "boundary-graph" else "withheld"
        )
        rng = np.random.default_rng(seed)
        zt = ball[rng.choice(ball.shape[0], size=16, replace=False)] * 0.9
        entries.append(
            {
                "config": cfg.to_dict(),
                "n": n,
                "dumbbell": ex.pair.report(),
                "i_dt_sup": dts,
                "ii_sup": sup_ii,
                "iii_error": err_iii,
                "iv_grid_points": int(near.shape[0]),
                "iv_violations": iv,
                "iv_witnesses": [[[float(c.real), float(c.imag)] for c in w] for w in iv_w],
                "v_violations": v_viol,
                "v_grid_points": int(near_v.shape[0]) * len(t_values),
                "kappa": kappas,
                "injectivity": cert,
                "t_zero_limit": t_zero_limit(ex, zt),
                **zoom,
            }
        )
    sups = [e["ii_sup"] for e in entries]
    return {
        "entries": entries,
        "t_values": list(t_values),
        "grid": grid,
        "tol": tol,
        "seed": seed,
        "ii_decreasing": bool(all(b < a for a, b in zip(sups, sups[1:]))),
        "iv_total_violations": int(sum(e["iv_violations"] + e["zoom_iv_violations"] for e in entries)),
        "v_total_violations": int(sum(e["v_violations"] for e in entries)),
        "mechanism_total_violations": int(sum(e["mechanism_violations"] for e in entries)),
    }


def report_json(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2)
