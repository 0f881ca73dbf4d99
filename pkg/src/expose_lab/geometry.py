"""Local domains, boundary sampling, normal-form charts and curvature certificates."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.optimize import brentq

from .hermpoly import HermitianPolynomial, Jet2, real_hessian

BOUNDARY_TOL = 1e-8
UNITARY_TOL = 1e-12
DEGENERATE_GRAD = 1e-9


class DegenerateGradientError(ValueError):
    pass


class RayMissError(RuntimeError):
    pass


def parse_complex_vector(values) -> np.ndarray:
    """Accept numbers, ``[re, im]`` pairs or strings such as ``"0.1-2j"``."""
    out = []
    for v in values:
        if isinstance(v, str):
            out.append(complex(v.replace(" ", "")))
        elif isinstance(v, (list, tuple)):
            out.append(complex(float(v[0]), float(v[1])))
        else:
            out.append(complex(v))
    return np.array(out, dtype=complex)


def complement_basis(v: np.ndarray) -> np.ndarray:
    """Orthonormal basis (columns) of the orthogonal complement of ``v``.

    Gram-Schmidt over the coordinate vectors in their natural order, with one
    re-orthogonalisation pass, so the result is reproducible.  Works for real
    vectors (Euclidean product) and complex vectors (Hermitian product).
    """
    v = np.asarray(v)
    m = v.shape[0]
    basis = [v / np.linalg.norm(v)]
    for k in range(m):
        e = np.zeros(m, dtype=v.dtype)
        e[k] = 1.0
        for _ in range(2):
            for b in basis:
                e = e - np.vdot(b, e) * b
        nrm = np.linalg.norm(e)
        if nrm > 1e-8:
            basis.append(e / nrm)
        if len(basis) == m:
            break
    return np.stack(basis[1:], axis=1)


@dataclass(frozen=True)
class LocalDomain:
    """``D = {rho < 0}`` intersected with the closed chart ball."""

    rho: HermitianPolynomial
    chart_center: np.ndarray
    chart_radius: float
    witness: np.ndarray

    @classmethod
    def create(cls, rho: HermitianPolynomial, chart_center, chart_radius: float, seed: int = 0) -> "LocalDomain":
        center = np.asarray(chart_center, dtype=complex).reshape(-1)
        if center.shape[0] != rho.n:
            raise ValueError("chart center dimension does not match the defining function")
        if not chart_radius > 0:
            raise ValueError("chart radius must be positive")
        witness = _find_witness(rho, center, float(chart_radius), seed)
        return cls(rho, center, float(chart_radius), witness)

    @classmethod
    def from_dict(cls, data: dict) -> "LocalDomain":
        rho = HermitianPolynomial.from_dict(data["rho"]).canonical()
        return cls.create(rho, parse_complex_vector(data["chart_center"]), float(data["chart_radius"]))

    @classmethod
    def load(cls, path: str | Path) -> "LocalDomain":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_dict(self) -> dict:
        return {
            "rho": self.rho.to_dict(),
            "chart_center": [[c.real, c.imag] for c in self.chart_center],
            "chart_radius": self.chart_radius,
        }

    @property
    def n(self) -> int:
        return self.rho.n

    def contains(self, points, closed: bool = True) -> np.ndarray:
        z = np.asarray(points, dtype=complex)
        r = np.linalg.norm(z - self.chart_center, axis=-1)
        val = self.rho.eval(z)
        if closed:
            return (val <= 0) & (r <= self.chart_radius)
        return (val < 0) & (r < self.chart_radius)

    def grid(self, per_axis: int, radius: float | None = None, center=None) -> np.ndarray:
        """Tensor grid of ``R^{2n}`` clipped to the chart ball and ``{rho <= 0}``."""
        radius = self.chart_radius if radius is None else float(radius)
        center = self.chart_center if center is None else np.asarray(center, dtype=complex)
        pts = ball_grid(self.n, per_axis, radius, center)
        return pts[self.rho.eval(pts) <= 0]


def ball_grid(n: int, per_axis: int, radius: float, center) -> np.ndarray:
    """Points of a ``per_axis^(2n)`` tensor grid lying in a closed ball."""
    ax = np.linspace(-radius, radius, per_axis)
    mesh = np.meshgrid(*([ax] * (2 * n)), indexing="ij")
    flat = np.stack([m.ravel() for m in mesh], axis=1)
    flat = flat[np.sum(flat**2, axis=1) <= radius**2 * (1 + 1e-12)]
    return flat[:, :n] + 1j * flat[:, n:] + np.asarray(center, dtype=complex)


def _find_witness(rho: HermitianPolynomial, center: np.ndarray, radius: float, seed: int) -> np.ndarray:
    if rho.eval(center) < 0:
        return center.copy()
    rng = np.random.default_rng(seed)
    n = rho.n
    g = rng.normal(size=(8192, 2 * n))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    rad = radius * rng.uniform(size=(8192, 1)) ** (1.0 / (2 * n))
    pts = center + (g[:, :n] + 1j * g[:, n:]) * rad
    vals = rho.eval(pts)
    inside = vals < 0
    if not inside.any():
        raise ValueError("domain appears empty: no sampled chart point has rho < 0")
    cand = pts[inside]
    dist = np.linalg.norm(cand - center, axis=1)
    return cand[int(np.argmin(dist))]


def _real_grad(rho: HermitianPolynomial, z: np.ndarray) -> np.ndarray:
    g = rho.dbar_grad(z)
    return np.concatenate([2 * g.real, -2 * g.imag], axis=-1)


def _newton_on_ray(rho, origin, d, t, steps: int = 4) -> float:
    dr = np.concatenate([d.real, d.imag])
    for _ in range(steps):
        z = origin + t * d
        f = rho.eval(z)
        df = float(_real_grad(rho, z) @ dr)
        if df == 0:
            break
        t = t - f / df
    return t


def boundary_sample(domain: LocalDomain, count: int, seed: int, scan: int = 64):
    """Boundary points found along random rays from the interior witness.

    Returns ``(points, misses)`` where ``misses`` lists the indices of rays
    that left the chart before crossing ``{rho = 0}``.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    rho = domain.rho
    n = domain.n
    rng = np.random.default_rng(seed)
    w0 = domain.witness
    c = domain.chart_center
    R = domain.chart_radius
    found: list[np.ndarray] = []
    misses: list[int] = []
    ray = 0
    max_rays = 50 * count + 100
    while len(found) < count:
        batch = max(2 * (count - len(found)), 16)
        g = rng.normal(size=(batch, 2 * n))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        dirs = g[:, :n] + 1j * g[:, n:]
        # exit parameter of each ray from the chart ball
        p = w0 - c
        bq = np.real(np.sum(np.conj(dirs) * p, axis=1))
        cq = np.real(np.vdot(p, p)) - R**2
        t_exit = -bq + np.sqrt(bq**2 - cq)
        ts = np.linspace(0.0, 1.0, scan)[None, :] * t_exit[:, None]
        vals = rho.eval(w0 + ts[..., None] * dirs[:, None, :])
        for k in range(batch):
            if len(found) >= count:
                break
            sign = np.nonzero(vals[k, 1:] >= 0)[0]
            if sign.size == 0:
                misses.append(ray)
            else:
                j = sign[0]
                d = dirs[k]
                f = lambda t: rho.eval(w0 + t * d)  # noqa: E731
                a, b = ts[k, j], ts[k, j + 1]
                fa, fb = f(a), f(b)
                if fa * fb <= 0:
                    t = brentq(f, a, b, xtol=1e-15, rtol=1e-15, maxiter=200)
                else:
                    # batch and scalar evaluation round differently when the
                    # crossing sits on a scan node
                    t = b if abs(fb) <= abs(fa) else a
                t = _newton_on_ray(rho, w0, d, t)
                z = w0 + t * d
                if abs(rho.eval(z)) < 1e-10 and np.linalg.norm(z - c) <= R:
                    found.append(z)
                else:
                    misses.append(ray)
            ray += 1
        if len(misses) > 0.5 * max(ray, 1) and ray >= 16:
            raise RayMissError(f"{len(misses)} of {ray} rays missed the boundary inside the chart")
        if ray > max_rays:
            raise RayMissError("boundary sampling did not converge")
    pts = np.array(found)
    grad = rho.dbar_grad(pts)
    if np.any(np.linalg.norm(grad, axis=1) <= DEGENERATE_GRAD):
        raise DegenerateGradientError("degenerate gradient at a sampled boundary point")
    return pts, misses


@dataclass(frozen=True)
class BoundaryChart:
    """Normal-form coordinates ``w = U^* (z - zeta) / s`` at a boundary point.

    In these coordinates ``rho_hat(w) = rho(zeta + s U w) / normalizer``
    expands as ``Re(w_n + Q(w)) + L(w) + O(|w|^3)`` with
    ``Q(w) = w^T q_form w`` and ``L(w) = w^T levi conj(w)``.
    """

    zeta: np.ndarray
    unitary: np.ndarray
    q_form: np.ndarray
    levi: np.ndarray
    scale: float
    normalizer: float
    rho: HermitianPolynomial
    strongly_pseudoconvex: bool

    @property
    def n(self) -> int:
        return self.zeta.shape[0]

    def to_chart(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        return ((z - self.zeta) @ self.unitary.conj()) / self.scale

    def from_chart(self, w) -> np.ndarray:
        w = np.asarray(w, dtype=complex)
        return self.zeta + self.scale * (w @ self.unitary.T)

    def rho_hat(self) -> HermitianPolynomial:
        """Exact re-expansion of the defining function in chart coordinates."""
        return self.rho.substitute_affine(self.scale * self.unitary, self.zeta).scaled(1.0 / self.normalizer)

    def model(self, w) -> np.ndarray:
        """The quadratic model ``Re(w_n + Q(w)) + L(w)``."""
        w = np.asarray(w, dtype=complex)
        q = np.einsum("...i,ij,...j->...", w, self.q_form, w)
        lv = np.einsum("...i,ij,...j->...", w, self.levi, w.conj())
        return (w[..., -1] + q).real + lv.real


def _unitary_for_normal(nu: np.ndarray) -> np.ndarray:
    n = nu.shape[0]
    if n == 1:
        return nu.reshape(1, 1).astype(complex)
    rest = complement_basis(nu.astype(complex))
    U = np.concatenate([rest, nu.reshape(-1, 1)], axis=1)
    return U


def normalize_at(domain: LocalDomain, zeta, scale: float = 1.0) -> BoundaryChart:
    """Translate, rotate the complex normal to ``e_n`` and rescale the defining function."""
    zeta = np.asarray(zeta, dtype=complex)
    jet = domain.rho.jet(zeta)
    if abs(jet.value) >= BOUNDARY_TOL:
        raise ValueError(f"point is not on the boundary (|rho| = {abs(jet.value):.3e})")
    g = jet.dbar_grad
    gn = float(np.linalg.norm(g))
    if gn < DEGENERATE_GRAD:
        raise DegenerateGradientError("degenerate gradient at the requested point")
    nu = g.conj() / gn
    U = _unitary_for_normal(nu)
    if np.abs(U.conj().T @ U - np.eye(domain.n)).max() > UNITARY_TOL:
        raise ArithmeticError("constructed frame is not unitary to tolerance")
    lam = 2.0 * scale * gn
    q = (scale**2 / lam) * (U.T @ jet.holo_hess @ U)
    lv = (scale**2 / lam) * (U.T @ jet.levi @ U.conj())
    q = 0.5 * (q + q.T)
    lv = 0.5 * (lv + lv.conj().T)
    spc = bool(np.linalg.eigvalsh(lv[:-1, :-1]).min() > 0) if domain.n > 1 else True
    return BoundaryChart(zeta, U, q, lv, float(scale), float(lam), domain.rho, spc)


def restricted_levi_min(jet: Jet2) -> float:
    """Smallest eigenvalue of the Levi form on the complex tangent space."""
    g = jet.dbar_grad
    if jet.n == 1:
        return float("inf")
    B = complement_basis(g.conj())
    M = B.T @ jet.levi @ B.conj()
    return float(np.linalg.eigvalsh(0.5 * (M + M.conj().T)).min())


def restricted_hessian_min(real_grad: np.ndarray, real_hess: np.ndarray) -> float:
    """Smallest eigenvalue of a real Hessian on the hyperplane orthogonal to the gradient."""
    B = complement_basis(np.asarray(real_grad, dtype=float))
    M = B.T @ real_hess @ B
    return float(np.linalg.eigvalsh(0.5 * (M + M.T)).min())


def certify_pseudoconvexity(domain: LocalDomain, samples) -> float:
    """Minimum restricted Levi eigenvalue over the given boundary points."""
    samples = np.atleast_2d(np.asarray(samples, dtype=complex))
    value, grad, H, L = domain.rho.jet_arrays(samples)
    out = np.inf
    for k in range(samples.shape[0]):
        jet = Jet2(float(value[k]), grad[k], H[k], L[k], real_hessian(H[k], L[k]))
        out = min(out, restricted_levi_min(jet))
    return float(out)


def certify_convexity_at(domain: LocalDomain, zeta) -> float:
    """Smallest real Hessian eigenvalue on the real tangent hyperplane at ``zeta``."""
    jet = domain.rho.jet(np.asarray(zeta, dtype=complex))
    if np.linalg.norm(jet.dbar_grad) < DEGENERATE_GRAD:
        raise DegenerateGradientError("degenerate gradient at the requested point")
    return restricted_hessian_min(jet.real_grad, jet.real_hess)


def interior_sample(domain: LocalDomain, count: int, seed: int, max_rounds: int = 200) -> np.ndarray:
    """Uniform rejection samples from the closed chart ball intersected with ``{rho <= 0}``."""
    rng = np.random.default_rng(seed)
    n = domain.n
    out: list[np.ndarray] = []
    have = 0
    batch = max(4 * count, 256)
    for _ in range(max_rounds):
        x = rng.normal(size=(batch, 2 * n))
        x /= np.linalg.norm(x, axis=1, keepdims=True)
        x *= rng.random(batch)[:, None] ** (1.0 / (2 * n))
        z = domain.chart_center + domain.chart_radius * (x[:, :n] + 1j * x[:, n:])
        z = z[domain.rho.eval(z) <= 0]
        out.append(z)
        have += z.shape[0]
        if have >= count:
            break
    pts = np.concatenate(out)[:count]
    if pts.shape[0] < count:
        raise RayMissError("domain occupies too little of the chart ball for rejection sampling")
    return pts
