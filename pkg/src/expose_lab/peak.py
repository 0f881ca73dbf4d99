"""Peak functions with a sampled Gaussian decay certificate.

A peak function for a boundary point ``zeta`` is holomorphic, equals 1 at
``zeta`` and has modulus below 1 elsewhere on the closure.  Every peak built
here carries a constant ``decay_c`` with ``|f(z)| <= exp(-decay_c |z - zeta|^2)``
on the sampled closure (``decay_c = 0`` means no certificate).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from .geometry import LocalDomain, boundary_sample, certify_convexity_at, interior_sample, normalize_at
from .hermpoly import HermitianPolynomial, norm_squared, re_monomial
from .holo import AffinePullback, Constant, Exp, HoloPoly, ScalarExpr

DECAY_MARGIN = 1e-6
ZETA_EXCLUSION = 1e-12

KINDS = ("ball-model", "convex-gradient", "user-supplied")


class NotConvexError(ValueError):
    """The convex-gradient construction was requested at a non-convex point."""

    def __init__(self, message: str, index: int | None = None):
        super().__init__(message)
        self.index = index


class UncertifiedPeakError(ValueError):
    """A downstream construction received a peak without a decay certificate."""


@dataclass(frozen=True)
class PeakFunction:
    zeta: np.ndarray
    kind: str
    payload: dict
    decay_c: float
    expr: ScalarExpr = field(repr=False)
    samples: int = 0
    seed: int = 0
    max_violation: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown peak kind {self.kind!r}")
        if not self.decay_c >= 0:
            raise ValueError("decay constant must be nonnegative")

    @property
    def n(self) -> int:
        return self.zeta.shape[0]

    def __call__(self, z) -> np.ndarray:
        return self.expr(z)

    def decay_ratio(self, z) -> np.ndarray:
        """``|f(z)| exp(decay_c |z - zeta|^2)``; at most ``1`` where the certificate holds."""
        z = np.asarray(z, dtype=complex)
        d2 = np.sum(np.abs(z - self.zeta) ** 2, axis=-1)
        return np.abs(self(z)) * np.exp(self.decay_c * d2)

    def report(self) -> dict:
        return {
            "kind": self.kind,
            "zeta": [[float(c.real), float(c.imag)] for c in self.zeta],
            "decay_c": float(self.decay_c),
            "samples": int(self.samples),
            "seed": int(self.seed),
            "max_violation": float(self.max_violation),
        }

    def report_json(self) -> str:
        return json.dumps(self.report(), sort_keys=True, indent=2)


def tangent_ball(r: float, n: int = 2) -> HermitianPolynomial:
    """``|z_1 + r|^2 + sum |z_j|^2 - r^2``: the ball of radius ``r`` tangent at the origin."""
    return norm_squared(n) + re_monomial(n, [1] + [0] * (n - 1), 2.0 * r)


def make_ball_peak(r: float, unitary=None, zeta=None, n: int = 2) -> PeakFunction:
    """``exp(w_1)`` with ``w = U^*(z - zeta)``; decays with constant ``1/(2r)`` on the tangent ball."""
    if not r > 0:
        raise ValueError("ball radius must be positive")
    U = np.eye(n, dtype=complex) if unitary is None else np.asarray(unitary, dtype=complex)
    n = U.shape[0]
    zeta = np.zeros(n, dtype=complex) if zeta is None else np.asarray(zeta, dtype=complex)
    e1 = np.zeros(n, dtype=int)
    e1[0] = 1
    w1 = HoloPoly(n, [e1], [1.0])
    expr = AffinePullback(Exp(w1), U.conj().T, -U.conj().T @ zeta)
    return PeakFunction(zeta, "ball-model", {"r": float(r), "unitary": U}, 1.0 / (2.0 * r), expr)


def make_convex_peak(domain: LocalDomain, zeta) -> PeakFunction:
    """``exp(d rho(zeta) . (z - zeta))`` for a point where the boundary is convex.

    The decay constant is left at 0; certify it with :func:`certify_peak`.
    """
    zeta = np.asarray(zeta, dtype=complex)
    if certify_convexity_at(domain, zeta) <= 0:
        raise NotConvexError("boundary is not convex at the requested point")
    return _gradient_peak(domain, zeta)


def _gradient_peak(domain: LocalDomain, zeta: np.ndarray) -> PeakFunction:
    covector = domain.rho.jet(zeta).dbar_grad
    n = domain.n
    lin = HoloPoly(n, np.eye(n, dtype=int), covector)
    # pull back through z - zeta so that the exponent vanishes exactly at zeta
    expr = AffinePullback(Exp(lin), np.eye(n), -zeta)
    return PeakFunction(zeta, "convex-gradient", {"covector": covector}, 0.0, expr)


def make_user_peak(expr: ScalarExpr, zeta) -> PeakFunction:
    zeta = np.asarray(zeta, dtype=complex)
    return PeakFunction(zeta, "user-supplied", {"expression": type(expr).__name__}, 0.0, expr)


def make_levi_peak(domain: LocalDomain, zeta, scale: float = 1.0) -> PeakFunction:
    """``exp(w_n + Q(w))`` in the normal-form chart at ``zeta``.

    On the chart ``Re(w_n + Q(w))`` equals the rescaled defining function minus
    its Levi part, so the modulus is below 1 wherever that remainder is
    positive.  The result still needs :func:`certify_peak`.
    """
    chart = normalize_at(domain, zeta, scale)
    n = domain.n
    en = np.zeros(n, dtype=int)
    en[-1] = 1
    inner = HoloPoly(n, [en], [1.0]) + HoloPoly.quadratic(chart.q_form)
    A = chart.unitary.conj().T / chart.scale
    expr = AffinePullback(Exp(inner), A, -A @ chart.zeta)
    out = make_user_peak(expr, chart.zeta)
    return replace(out, payload={**out.payload, "levi_chart_scale": float(chart.scale)})


def make_constant_peak(n: int, zeta) -> PeakFunction:
    return make_user_peak(Constant(n, 1.0), zeta)


def _closure_samples(domain: LocalDomain, count: int, seed: int) -> np.ndarray:
    n_in = count // 2
    pts_in = interior_sample(domain, n_in, seed)
    pts_bd, _ = boundary_sample(domain, count - n_in, seed + 1)
    return np.concatenate([pts_in, pts_bd])


def estimate_decay(peak: PeakFunction, domain: LocalDomain, count: int, seed: int) -> float:
    """Sampled decay constant with the multiplicative safety margin applied.

    Returns 0 when some sample has ``|f| >= 1`` away from the peak point.
    """
    pts = _closure_samples(domain, count, seed)
    return _decay_from_points(peak, pts)


def _decay_from_points(peak: PeakFunction, pts: np.ndarray) -> float:
    d2 = np.sum(np.abs(pts - peak.zeta) ** 2, axis=1)
    keep = d2 > ZETA_EXCLUSION**2
    mod = np.abs(peak(pts[keep]))
    if np.any(mod >= 1.0):
        return 0.0
    ratios = -np.log(mod) / d2[keep]
    cstar = max(0.0, float(ratios.min()))
    return cstar * (1.0 - DECAY_MARGIN)


def certify_peak(peak: PeakFunction, domain: LocalDomain, count: int = 10_000, seed: int = 0) -> PeakFunction:
    """Return ``peak`` with a sampled decay constant and the sampling record attached."""
    pts = _closure_samples(domain, count, seed)
    c = _decay_from_points(peak, pts)
    if peak.kind == "ball-model":
        c = min(c, peak.decay_c) if c > 0 else 0.0
    out = replace(peak, decay_c=c, samples=int(pts.shape[0]), seed=int(seed))
    viol = max(0.0, float(out.decay_ratio(pts).max()) - 1.0)
    return replace(out, max_violation=viol)


def check_peak(peak: PeakFunction, domain: LocalDomain, count: int = 10_000, seed: int = 0) -> float:
    """Largest ``|f| exp(c |z - zeta|^2)`` over fresh closure samples (including ``zeta``)."""
    pts = _closure_samples(domain, count, seed)
    pts = np.concatenate([pts, peak.zeta[None, :]])
    return float(peak.decay_ratio(pts).max())


def make_peak_family(domain: LocalDomain, zetas, count: int = 4000, seed: int = 0):
    """Convex-gradient peaks at each point with the smallest certified constant shared.

    Returns ``(peaks, shared_c)``.  Every returned peak carries the shared
    constant, which is valid for each of them because it is the minimum.
    """
    zetas = np.atleast_2d(np.asarray(zetas, dtype=complex))
    peaks = []
    for i, z in enumerate(zetas):
        try:
            p = make_convex_peak(domain, z)
        except NotConvexError as exc:
            raise NotConvexError(f"boundary is not convex at family index {i}", index=i) from exc
        peaks.append(certify_peak(p, domain, count, seed))
    shared = min(p.decay_c for p in peaks)
    return [replace(p, decay_c=shared) for p in peaks], shared


def chart_expression(peak: PeakFunction, chart) -> ScalarExpr:
    """The peak written in the chart coordinates ``w`` of ``chart``.

    Gradient peaks and Levi peaks have closed forms there
    (``exp(lambda w_n / 2)`` and ``exp(w_n + Q(w))``).  Using them instead of
    composing with the chart map keeps the real part of the exponent exactly
    nonpositive on the model at radii far below rounding of ``zeta``.
    """
    n = chart.n
    en = np.zeros(n, dtype=int)
    en[-1] = 1
    same_point = np.array_equal(peak.zeta, chart.zeta)
    if same_point and peak.kind == "convex-gradient":
        return Exp(HoloPoly(n, [en], [0.5 * chart.normalizer]))
    scale = peak.payload.get("levi_chart_scale")
    if same_point and scale is not None:
        r = chart.scale / scale
        return Exp(HoloPoly(n, [en], [r]) + HoloPoly.quadratic(chart.q_form * r))
    return AffinePullback(peak.expr, chart.scale * chart.unitary, chart.zeta)
