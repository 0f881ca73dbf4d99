"""Named experiments, scenario files and the artifacts they write.

Every experiment returns an :class:`Outcome`: a JSON-ready report, a set of
named pass/fail checks and optional figures and tables.  :func:`run_scenario`
executes the operations listed in a scenario file in order and writes
``<op>.json`` reports, CSV tables, SVG figures and a ``manifest.json`` into
the output directory.  Reports never contain timings, so reruns with the same
seeds give identical bytes.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .ballexpose import BallDumbbellConfig, build_exposer, rescale_map, verify_exposer
from .convexify import bump_peak, plan_parameters, build_convexifier, verify_map
from .geometry import (
    LocalDomain,
    boundary_sample,
    certify_convexity_at,
    complement_basis,
    interior_sample,
    parse_complex_vector,
)
from .hermpoly import HermitianPolynomial, norm_squared, re_monomial
from .holo import Affine, MapExpr, ScaledIsotopy, fd_complex_jacobian
from .hull import hull_evidence_demo
from .onevar import disk_test_grid, dumbbell_pair, mobius_fuzz
from .peak import certify_peak, make_ball_peak, make_levi_peak, tangent_ball
from .render import Curve, render_curves, write_curves_csv

TOOL = "expose-lab"


class ScenarioError(ValueError):
    """Malformed scenario or input file (exit status 2)."""


@dataclass
class Figure:
    name: str
    curves: list[Curve]
    markers: list = field(default_factory=list)
    title: str = ""


@dataclass
class Outcome:
    report: dict
    checks: dict
    figures: list[Figure] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(self.checks.values())


def worker_count(requested: int | None = None) -> int:
    """Requested workers, capped by ``EXPOSE_LAB_THREADS`` when set."""
    cap = os.environ.get("EXPOSE_LAB_THREADS")
    n = requested if requested else (os.cpu_count() or 1)
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError as exc:
            raise ScenarioError(f"EXPOSE_LAB_THREADS must be an integer, got {cap!r}") from exc
    return max(1, n)


def jsonable(v):
    """Plain JSON types, with complex numbers as ``[re, im]`` pairs."""
    if isinstance(v, dict):
        return {str(k): jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return jsonable(v.tolist())
    if isinstance(v, (complex, np.complexfloating)):
        return [float(v.real), float(v.imag)]
    if isinstance(v, (np.bool_, bool)):
        return bool(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating, float)):
        return float(v)
    return v


def dumps(report: dict) -> str:
    return json.dumps(jsonable(report), sort_keys=True, indent=2) + "\n"


def _manifest(seeds: dict, grids: dict, tolerances: dict) -> dict:
    return {"tool": TOOL, "version": __version__, "seeds": seeds, "grids": grids, "tolerances": tolerances}


# ---------------------------------------------------------------------------
# test domains


def nonconvex_test_rho() -> HermitianPolynomial:
    """``2 Re z_2 + 3 Re(z_1^2) + |z_1|^2 + |z_2|^2``."""
    return re_monomial(2, [0, 1], 2.0) + re_monomial(2, [2, 0], 3.0) + norm_squared(2)


def nonconvex_test_domain() -> LocalDomain:
    return LocalDomain.create(nonconvex_test_rho(), [0, 0], 0.2)


def load_domain(source, base: Path | None = None) -> LocalDomain:
    """A domain from a path (relative to ``base``), an inline dict, or ``"nonconvex-test"``."""
    if source == "nonconvex-test":
        return nonconvex_test_domain()
    if isinstance(source, dict):
        data = source
    else:
        path = Path(source)
        if base is not None and not path.is_absolute():
            path = base / path
        if not path.is_file():
            raise ScenarioError(f"domain file not found: {path}")
        try:
            data = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"{path}: invalid JSON ({exc})") from exc
    try:
        return LocalDomain.from_dict(data)
    except (KeyError, TypeError, ValueError) as exc:
        raise ScenarioError(f"domain: {exc}") from exc


# ---------------------------------------------------------------------------
# experiments


def exp_mobius_fuzz(samples: int = 1_000_000, seed: int = 0, tol: float = 1e-12) -> Outcome:
    rep = mobius_fuzz(int(samples), seed=int(seed), tol=tol)
    rep["manifest"] = _manifest({"fuzz": seed}, {"samples": samples}, {"dichotomy": tol})
    return Outcome(rep, {"zero_violations": rep["violations"] == 0})


def exp_peak_decay(r: float = 1.0, count: int = 10_000, seed: int = 0, n: int = 2, tol: float = 1e-9) -> Outcome:
    """Ball peak ``exp(z_1)`` on the ball of radius ``r`` tangent at the origin."""
    center = np.zeros(n, dtype=complex)
    center[0] = -r
    domain = LocalDomain.create(tangent_ball(r, n), center, 1.01 * r, seed=seed)
    peak = make_ball_peak(r, n=n)
    half = count // 2
    pts = np.concatenate([interior_sample(domain, half, seed), boundary_sample(domain, count - half, seed + 1)[0]])
    ratio = peak.decay_ratio(pts)
    # closed form of the same quantity, Re z_1 + |z|^2 / (2r), and the ball inequality
    exponent = pts[:, 0].real + np.sum(np.abs(pts) ** 2, axis=1) / (2 * r)
    ball = np.sum(np.abs(pts - center) ** 2, axis=1) - r * r
    agree = float(np.max(np.abs(np.log(ratio) - exponent)))
    rep = {
        "r": r,
        "n": n,
        "samples": int(pts.shape[0]),
        "decay_c": peak.decay_c,
        "sup_ratio": float(ratio.max()),
        "sup_exponent": float(exponent.max()),
        "max_ball_defining_value": float(ball.max()),
        "closed_form_agreement": agree,
        "manifest": _manifest({"samples": seed}, {"count": count}, {"ratio": tol}),
    }
    return Outcome(rep, {"sup_ratio": rep["sup_ratio"] <= 1 + tol, "closed_form": agree < 1e-10})


def _rel_err(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Per-probe relative error with unit floor on the scale."""
    a = a.reshape(a.shape[0], -1)
    b = b.reshape(b.shape[0], -1)
    return np.max(np.abs(a - b), axis=1) / np.maximum(np.max(np.abs(b), axis=1), 1.0)


def _ball_probes(n: int, count: int, radius: float, center, rng) -> np.ndarray:
    x = rng.standard_normal((count, 2 * n))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    x *= radius * rng.uniform(0, 1, (count, 1)) ** (1 / (2 * n))
    return np.asarray(center, dtype=complex) + x[:, :n] + 1j * x[:, n:]


def jet_fd_errors(rho: HermitianPolynomial, pts: np.ndarray, h: float = 1e-5) -> dict:
    """Largest relative errors of each jet component against central differences."""
    val, grad, H, L = rho.jet_arrays(pts)
    dz, _ = fd_complex_jacobian(lambda z: rho.eval(z).astype(complex), pts, h)
    gz, gzb = fd_complex_jacobian(lambda z: rho.jet_arrays(z)[1], pts, h)
    direct = np.zeros(pts.shape[0], dtype=complex)
    for t in rho.terms:
        direct += t.coeff * np.prod(pts ** np.array(t.alpha) * np.conj(pts) ** np.array(t.beta), axis=1)
    direct = direct.real
    return {
        "value": float(np.max(_rel_err(val, direct))),
        "gradient": float(np.max(_rel_err(grad, dz[:, 0, :]))),
        "holo_hess": float(np.max(_rel_err(H, gz))),
        "levi": float(np.max(_rel_err(L, gzb))),
    }


def map_fd_errors(F: MapExpr, pts: np.ndarray, h: float = 1e-6) -> dict:
    J = F.jac(pts)
    dz, dzb = fd_complex_jacobian(F.eval, pts, h)
    scale = np.maximum(np.max(np.abs(J.reshape(J.shape[0], -1)), axis=1), 1.0)
    return {
        "jacobian": float(np.max(_rel_err(J, dz))),
        "antiholomorphic": float(np.max(np.max(np.abs(dzb.reshape(dzb.shape[0], -1)), axis=1) / scale)),
    }


def exp_derivative_check(probes: int = 1000, seed: int = 0, tol: float = 1e-6) -> Outcome:
    rng = np.random.default_rng(seed)
    domain = nonconvex_test_domain()
    terms = [
        (a, b, complex(*rng.standard_normal(2)))
        for a in ((0, 0), (1, 0), (0, 1), (2, 1), (1, 2), (3, 0))
        for b in ((0, 0), (1, 0), (0, 1), (1, 1))
    ]
    random_rho = HermitianPolynomial.from_terms(2, terms).hermitized()
    jets = {
        "nonconvex_test": jet_fd_errors(domain.rho, _ball_probes(2, probes, 0.2, [0, 0], rng)),
        "tangent_ball": jet_fd_errors(tangent_ball(1.0), _ball_probes(2, probes, 1.0, [-1, 0], rng)),
        "random_cubic": jet_fd_errors(random_rho, _ball_probes(2, probes, 1.0, [0, 0], rng)),
    }

    peak = certify_peak(make_levi_peak(domain, np.zeros(2)), domain, count=2000, seed=seed)
    conv, _ = build_convexifier(domain, np.zeros(2), peak, 0.05)
    base = build_exposer(BallDumbbellConfig(nu=2))
    resc = build_exposer(BallDumbbellConfig(r=0.5, s=3.0, nu=2))
    A = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2)) + 3 * np.eye(2)
    maps = {
        # the peak powers overflow where |f| > 1, so probe the closed domain only
        "convexifier": (conv, interior_sample(domain, probes, seed)),
        "exposer_base": (base.map, _ball_probes(2, probes, 0.95, [0, 0], rng)),
        "exposer_rescaled": (resc.map, _ball_probes(2, probes, 0.95, [0, 0], rng)),
        "isotopy_half": (MapExpr([ScaledIsotopy(base.map, 0.5)]), _ball_probes(2, probes, 0.95, [0, 0], rng)),
        "affine_then_exposer": (MapExpr([Affine(A / 8, [0.1, 0.0])]).then(base.map),
                                _ball_probes(2, probes, 1.0, [0, 0], rng)),
    }
    jac = {k: map_fd_errors(F, p) for k, (F, p) in maps.items()}
    rep = {
        "probes_per_build": probes,
        "jets": jets,
        "maps": jac,
        "manifest": _manifest({"probes": seed}, {"probes": probes}, {"relative": tol}),
    }
    checks = {f"jet:{k}": max(v.values()) < tol for k, v in jets.items()}
    checks.update({f"map:{k}": max(v.values()) < tol for k, v in jac.items()})
    return Outcome(rep, checks)


def _slice_curves(domain: LocalDomain, zeta, F: MapExpr, count: int = 201):
    """Boundary of ``D`` in the real plane through ``zeta`` spanned by a complex
    tangent and the outward normal, before and after ``F``, in plane coordinates."""
    grad = domain.rho.dbar_grad(zeta)
    normal = np.conj(grad) / np.linalg.norm(grad)
    tangent = complement_basis(normal)[:, 0]
    R = domain.chart_radius
    xs = np.linspace(-0.9 * R, 0.9 * R, count)
    ys = np.linspace(-R, R, 4001)
    before = []
    for x in xs:
        pts = zeta + x * tangent[None, :] + ys[:, None] * normal[None, :]
        v = domain.rho.eval(pts)
        k = np.nonzero(np.diff(np.sign(v)) != 0)[0]
        if k.size == 0:
            continue
        j = k[np.argmin(np.abs(ys[k]))]
        y = ys[j] - v[j] * (ys[j + 1] - ys[j]) / (v[j + 1] - v[j])
        before.append(zeta + x * tangent + y * normal)
    before = np.array(before)
    after = F.eval(before)

    def coords(p):
        d = p - zeta
        return np.real(d @ tangent.conj()) + 1j * np.real(d @ normal.conj())

    return coords(before), coords(after)


def exp_convexify(domain="nonconvex-test", zeta=(0, 0), eps: float = 0.05, grid: int = 40, seed: int = 0,
                  peak_samples: int = 10_000, workers: int | None = None, base: Path | None = None) -> Outcome:
    dom = domain if isinstance(domain, LocalDomain) else load_domain(domain, base)
    z = parse_complex_vector(zeta)
    raw = certify_convexity_at(dom, z)
    peak = certify_peak(make_levi_peak(dom, z), dom, count=peak_samples, seed=seed)
    F, params = build_convexifier(dom, z, peak, eps)
    ver = verify_map(F, dom, z, eps, per_axis=grid, seed=seed, workers=worker_count(workers))
    rep = {
        "domain": dom.to_dict(),
        "zeta": z,
        "eps": eps,
        "raw_convexity_eig": raw,
        "peak": {"decay_c": peak.decay_c, "samples": peak.samples, "max_violation": peak.max_violation},
        **ver.to_dict(),
        "manifest": _manifest({"peak": seed, "grid": seed}, {"per_axis": grid},
                              {"c1": eps, "tangency": 1e-8, "fixed_point": 1e-12}),
    }
    checks = {
        "c1_dist": ver.c1_dist < eps,
        "injectivity": ver.injectivity_certified,
        "convexity_eig": ver.convexity_eig > 0,
        "tangency": ver.tangency_err < 1e-8,
        "fixed_point": ver.fixed_point_err <= 1e-12,
        "jacobian_identity": ver.jacobian_err <= 1e-12,
    }
    before, after = _slice_curves(dom, z, F)
    fig = Figure("convexify_slice", [Curve("boundary before", before), Curve("boundary after", after)],
                 [("zeta", 0j)], "boundary slice near the exposed point")
    return Outcome(rep, checks, [fig])


def exp_plan(decay_c: float = 0.5, eps: float = 0.1, dense: int = 200_001) -> Outcome:
    params = plan_parameters(decay_c, eps)
    tol = eps / (2 * params.M)
    x_star, peak_val = bump_peak(decay_c)
    xs = np.linspace(0.0, 4.0 / decay_c, dense)
    grid_max = float(np.max(xs * np.exp(-decay_c * xs)))
    rep = {
        **params.to_dict(),
        "tolerance": tol,
        "bump_argmax": x_star,
        "bump_max": peak_val,
        "bump_max_closed_form": 1.0 / (decay_c * math.e),
        "bump_max_dense_grid": grid_max,
        "manifest": _manifest({}, {"dense": dense}, {"bump": 1e-12}),
    }
    checks = {
        "bounds_below_tolerance": max(params.annulus_bounds) < tol,
        "bump_max": abs(peak_val - 1.0 / (decay_c * math.e)) < 1e-12,
        "bump_argmax": abs(x_star - 1.0 / decay_c) < 1e-6,
    }
    return Outcome(rep, checks)


def dumbbell_metrics(pair, exclude: float = 0.3, symmetry_tol: float = 1e-10) -> dict:
    """Centre value, real symmetry and distance to the translate off ``D_exclude(1)``."""
    a = pair.region.a
    z = disk_test_grid(60, 240)
    fz = pair.f.value(z)
    sym = float(np.max(np.abs(pair.f.value(np.conj(z)) - np.conj(fz))))
    far = np.abs(z - 1.0) >= exclude
    return {
        "f_at_zero": complex(pair.f.value(np.array([0j]))[0]),
        "symmetry_defect": sym,
        "translate_distance": float(np.max(np.abs(fz[far] - (z[far] + a)))),
    }


def exp_dumbbell(a: float = -2.0, b: float = 2.0, deltas=(0.3, 0.15, 0.075), circle_points: int = 720) -> Outcome:
    entries, figs = [], []
    th = 2 * np.pi * np.arange(circle_points) / circle_points
    for d in deltas:
        pair = dumbbell_pair(a, b, d)
        entries.append({**pair.report(), **dumbbell_metrics(pair)})
        img = pair.f.value(np.exp(1j * th))
        radial = [pair.f.value(np.linspace(0, 0.999, 200) * np.exp(1j * t)) for t in np.linspace(0, 2 * np.pi, 8, endpoint=False)]
        curves = [Curve("region boundary", pair.region.boundary, closed=True), Curve("image of unit circle", img, closed=True)]
        curves += [Curve(f"radial {k}", c) for k, c in enumerate(radial)]
        figs.append(Figure(f"dumbbell_delta_{d:g}", curves, [("a", complex(a)), ("b", complex(b))],
                           f"dumbbell a={a:g} b={b:g} delta={d:g}"))
    dist = [e["translate_distance"] for e in entries]
    omr = [e["one_minus_r"] for e in entries]
    rep = {
        "a": a,
        "b": b,
        "deltas": list(deltas),
        "entries": entries,
        "translate_distance_decreasing": all(y < x for x, y in zip(dist, dist[1:])),
        "r_increasing": all(y < x for x, y in zip(omr, omr[1:])) and all(0 < v < 1 for v in omr),
        "manifest": _manifest({}, {"disk_test_grid": [60, 240], "consistency_grid": [30, 96]},
                              {"f0": 1e-8, "symmetry": 1e-10, "consistency": 1e-5}),
    }
    checks = {
        "f_at_zero": all(abs(complex(*jsonable(e["f_at_zero"])) - a) < 1e-8 for e in entries),
        "symmetry": all(e["symmetry_defect"] < 1e-10 for e in entries),
        "translate_decreasing": rep["translate_distance_decreasing"],
        "r_increasing": rep["r_increasing"],
        "consistency": all(e["consistency"] < 1e-5 for e in entries),
    }
    return Outcome(rep, checks, figs)


def exp_ball_expose(r: float = 1.5, s: float = 3.0, nu_list=(2, 3, 4), grid: int = 50, tol: float = 1e-6,
                    seed: int = 0, circle_points: int = 720) -> Outcome:
    exposers = [build_exposer(BallDumbbellConfig(r=r, s=s, nu=int(nu))) for nu in nu_list]
    rep = verify_exposer(exposers, grid=grid, tol=tol, seed=seed)
    target = s + r
    tops = []
    figs = []
    th = 2 * np.pi * np.arange(circle_points) / circle_points
    for ex in exposers:
        pt = np.zeros((1, ex.n), dtype=complex)
        pt[0, -1] = 1.0
        tops.append(complex(ex.map.eval(pt)[0, -1]))
        line = np.zeros((circle_points, ex.n), dtype=complex)
        line[:, -1] = np.exp(1j * th)
        img = ex.map.eval(line)[:, -1]
        radial = []
        for t in np.linspace(0, 2 * np.pi, 8, endpoint=False):
            seg = np.zeros((200, ex.n), dtype=complex)
            seg[:, -1] = np.linspace(0, 1.0, 200) * np.exp(1j * t)
            radial.append(ex.map.eval(seg)[:, -1])
        curves = [Curve("image of unit circle", img, closed=True)] + [Curve(f"radial {k}", c) for k, c in enumerate(radial)]
        figs.append(Figure(f"exposer_nu_{ex.config.nu}", curves, [(f"p_{target:g}", complex(target))],
                           f"exposer r={r:g} s={s:g} nu={ex.config.nu}"))
    rep["f_at_one"] = tops
    rep["f_at_one_error"] = [abs(t - target) for t in tops]
    rep["manifest"] = _manifest({"ball_grid": seed}, {"per_axis": grid, "ball_per_axis": 12, "sphere_points": 2000},
                                {"membership": tol, "f_at_one": 1e-8})
    checks = {
        "f_at_one": all(e < 1e-8 for e in rep["f_at_one_error"]),
        "ii_decreasing": rep["ii_decreasing"],
        "iv_membership": rep["iv_total_violations"] == 0,
        "v_membership": rep["v_total_violations"] == 0,
        "mechanism": rep["mechanism_total_violations"] == 0,
    }
    return Outcome(rep, checks, figs)


def exp_rescaler(source=(1.5, 3.0), target=(0.5, 3.0), method: str = "switch", tol: float = 1e-4) -> Outcome:
    resc = rescale_map(tuple(source), tuple(target), method=method)
    e = resc.errors
    rep = {"source": list(source), "target": list(target), "method": method, "errors": e,
           "manifest": _manifest({}, {"boundary_samples": 600}, {"disk": tol, "jet": 1e-12})}
    checks = {
        "far_disk": max(e["far_disk_f"], e["far_disk_h"]) < tol,
        "near_disk": max(e["near_disk_f"], e["near_disk_h"]) < tol,
        "jets": max(e["jet_value"], e["jet_slope"], e["jet_h"]) <= 1e-12,
    }
    return Outcome(rep, checks)


def exp_hull_demo(rho0: float = 1.0, count: int = 1000, degree: int = 8, seed: int = 0) -> Outcome:
    rep = hull_evidence_demo(rho0, count, degree, seed)
    rep["manifest"] = _manifest({"polynomials": seed}, {"circle_points": rep["circle_points"]},
                                {"ratio": 1e-12})
    inner, outer = rep["annulus"]
    th = 2 * np.pi * np.arange(720) / 720
    circ = np.exp(1j * th)
    fig = Figure("hull_annulus", [Curve("inner", inner * circ, True), Curve("outer", outer * circ, True),
                                  Curve("test circle", rho0 * circ, True)], [("p", complex(inner))],
                 "annulus slice and test circle")
    return Outcome(rep, {"zero_violations": rep["violations"] == 0}, [fig])


EXPERIMENTS = {
    "mobius-fuzz": exp_mobius_fuzz,
    "peak-decay": exp_peak_decay,
    "derivative-check": exp_derivative_check,
    "convexify": exp_convexify,
    "plan": exp_plan,
    "dumbbell": exp_dumbbell,
    "ball-expose": exp_ball_expose,
    "rescaler": exp_rescaler,
    "hull-demo": exp_hull_demo,
}


# ---------------------------------------------------------------------------
# scenario files and artifacts


@dataclass
class Scenario:
    name: str
    operations: list[dict]
    output: Path
    base: Path

    @classmethod
    def load(cls, path) -> "Scenario":
        path = Path(path)
        if not path.is_file():
            raise ScenarioError(f"scenario file not found: {path}")
        try:
            data = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"{path}: invalid JSON ({exc})") from exc
        if not isinstance(data, dict) or "operations" not in data:
            raise ScenarioError(f"{path}: expected an object with an 'operations' list")
        ops = data["operations"]
        if not isinstance(ops, list) or not ops:
            raise ScenarioError(f"{path}: 'operations' must be a non-empty list")
        for op in ops:
            if not isinstance(op, dict) or op.get("kind") not in EXPERIMENTS:
                raise ScenarioError(f"{path}: unknown operation {op!r}; known: {sorted(EXPERIMENTS)}")
        base = path.parent
        out = Path(data.get("output", f"out/{data.get('name', path.stem)}"))
        sc = cls(data.get("name", path.stem), ops, out if out.is_absolute() else base / out, base)
        for op in ops:
            dom = op.get("params", {}).get("domain")
            if isinstance(dom, str) and dom != "nonconvex-test" and not (base / dom).is_file():
                raise ScenarioError(f"{path}: referenced domain file not found: {base / dom}")
        return sc


def write_outcome(outcome: Outcome, outdir: Path, stem: str) -> list[Path]:
    """Write ``stem.json`` plus a CSV table and SVG figure per figure."""
    outdir.mkdir(parents=True, exist_ok=True)
    written = []
    report = {**outcome.report, "checks": outcome.checks, "ok": outcome.ok}
    p = outdir / f"{stem}.json"
    p.write_text(dumps(report))
    written.append(p)
    for fig in outcome.figures:
        csv_path = outdir / f"{fig.name}.csv"
        write_curves_csv(csv_path, fig.curves)
        svg_path = outdir / f"{fig.name}.svg"
        render_curves(fig.curves, svg_path, fig.title, fig.markers)
        written += [csv_path, svg_path]
    return written


def run_experiment(kind: str, params: dict | None = None, base: Path | None = None) -> Outcome:
    params = dict(params or {})
    if kind not in EXPERIMENTS:
        raise ScenarioError(f"unknown experiment {kind!r}")
    if kind == "convexify":
        params.setdefault("base", base)
    try:
        return EXPERIMENTS[kind](**params)
    except TypeError as exc:
        raise ScenarioError(f"{kind}: bad parameters ({exc})") from exc


def run_scenario(path, output: Path | None = None) -> tuple[bool, dict]:
    """Run every operation of a scenario file and write its artifacts.

    Returns ``(ok, manifest)``; ``ok`` is false when any check failed.
    """
    sc = Scenario.load(path)
    outdir = Path(output) if output is not None else sc.output
    ops_summary = []
    ok = True
    for k, op in enumerate(sc.operations):
        stem = op.get("name", f"{k:02d}_{op['kind']}")
        outcome = run_experiment(op["kind"], op.get("params"), sc.base)
        files = write_outcome(outcome, outdir, stem)
        ok &= outcome.ok
        ops_summary.append({
            "kind": op["kind"],
            "name": stem,
            "params": op.get("params", {}),
            "manifest": outcome.report.get("manifest", {}),
            "checks": outcome.checks,
            "files": [f.name for f in files],
        })
    manifest = {"scenario": sc.name, "tool": TOOL, "version": __version__, "ok": ok, "operations": ops_summary}
    (outdir / "manifest.json").write_text(dumps(manifest))
    return ok, manifest
