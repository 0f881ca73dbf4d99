"""One-complex-variable maps.

This module holds a few independent pieces:

* Möbius utilities for ``m_r(z) = (z - r) / (1 - r z)``;
* polynomial maps in an Arnoldi-orthogonalized basis, with least squares
  fitting under exact interpolation constraints;
* boundary-table maps evaluated by barycentric Cauchy integrals;
* Riemann maps of star-shaped regions by circle-correspondence iteration;
* the dumbbell triple ``(f, g, m)`` with ``g(m(z)) = f(z)``.

The dumbbell maps are written in strip coordinates.  The strip
``S = {|Im s| < pi/2}`` is carried onto the unit disk by ``tanh(s/2)``, and
the map ``Psi`` below carries it onto a dumbbell shaped region ``W`` made of
two near-unit lobes around ``a`` and ``b`` joined by a neck of half-width
``eta``::

    Psi(s) = a + 1 + tanh(s/2) + tanh((s - L)/2)
             + (b - a - 2)/L * log((1 + e^s) / (1 + e^(s - L)))

with ``L = (b - a - 2) pi / (2 eta)``.  ``Psi`` is holomorphic on a
neighbourhood of the closed strip, sends ``-inf`` to ``a - 1`` and ``+inf``
to ``b + 1``, and satisfies ``Psi(L - s) = a + b - Psi(s)``.  Every relation
between ``f``, ``g`` and ``m`` therefore holds by construction, and only the
containment of ``W`` in the ``delta``-neighbourhood needs to be measured.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable, Sequence

import mpmath
import numpy as np
from scipy.interpolate import CubicSpline
from scipy.linalg import null_space
from scipy.optimize import brentq

MOBIUS_TOL = 1e-12
ORTHO_TOL = 1e-6
DEFAULT_NODES = 2048


class MobiusViolationError(ArithmeticError):
    """Neither alternative of the Möbius dichotomy holds at a sample."""


class IllConditionedError(ValueError):
    """The orthogonalized polynomial basis lost orthogonality."""


class TooCloseError(ValueError):
    """A Cauchy evaluation point is too close to the unit circle."""


class StarShapeError(ValueError):
    """A region is not star-shaped about the requested centre."""


class RiemannMapError(RuntimeError):
    """The circle-correspondence iteration did not converge."""


class ConsistencyError(RuntimeError):
    """The dumbbell relation ``g(m(z)) = f(z)`` failed on the test grid."""


# ---------------------------------------------------------------------------
# Möbius utilities


def mobius(r, z, one_minus_r=None):
    """``(z - r) / (1 - r z)``; pass ``one_minus_r`` when ``r`` rounds to 1."""
    z = np.asarray(z, dtype=complex)
    if one_minus_r is None:
        return (z - r) / (1.0 - r * z)
    e = one_minus_r
    return (z - 1.0 + e) / (1.0 - z + e * z)


def mobius_dichotomy_check(r: float, z: complex, tol: float = MOBIUS_TOL) -> str:
    """Which of ``|m_r(z)| < |z|`` and ``Re m_r(z) < 0`` holds.

    Returns ``"modulus"`` when the first alternative holds (it wins ties) and
    ``"half-plane"`` otherwise.
    """
    if not 0 < r < 1:
        raise ValueError("r must lie in (0, 1)")
    if not abs(z) < 1:
        raise ValueError("z must lie in the open unit disk")
    m = complex(mobius(r, z))
    if abs(m) < abs(z) + tol:
        return "modulus"
    if m.real < tol:
        return "half-plane"
    raise MobiusViolationError(f"neither alternative holds at r={r!r}, z={z!r}")


def mobius_fuzz(count: int = 1_000_000, seed: int = 0, chunk: int = 1 << 18, tol: float = MOBIUS_TOL) -> dict:
    """Vectorized random check of the dichotomy over ``count`` pairs ``(r, z)``."""
    rng = np.random.default_rng(seed)
    counts = {"modulus": 0, "half_plane_only": 0, "both": 0, "violations": 0}
    worst = -np.inf
    done = 0
    while done < count:
        k = min(chunk, count - done)
        r = rng.uniform(0.0, 1.0, k)
        r = np.where(r == 0.0, 0.5, r)
        z = np.sqrt(rng.uniform(0.0, 1.0, k)) * np.exp(2j * np.pi * rng.uniform(0.0, 1.0, k))
        m = mobius(r, z)
        first = np.abs(m) < np.abs(z) + tol
        second = m.real < tol
        counts["modulus"] += int(np.count_nonzero(first))
        counts["half_plane_only"] += int(np.count_nonzero(second & ~first))
        counts["both"] += int(np.count_nonzero(first & second))
        counts["violations"] += int(np.count_nonzero(~first & ~second))
        worst = max(worst, float(np.max(np.minimum(np.abs(m) - np.abs(z), m.real))))
        done += k
    counts.update(samples=int(count), seed=int(seed), tol=tol, worst_margin=worst)
    return counts


# ---------------------------------------------------------------------------
# One-variable maps


class OneVarMap:
    """A holomorphic function of one variable with first and second derivatives."""

    symmetric: bool = False

    def value(self, z):
        raise NotImplementedError

    def deriv(self, z):
        return self.value_deriv(z)[1]

    def value_deriv(self, z):
        return self.value(z), self.deriv(z)

    def second_deriv(self, z):
        raise NotImplementedError

    def __call__(self, z):
        return self.value(z)

    def describe(self) -> dict:
        return {"kind": type(self).__name__, "symmetric": bool(self.symmetric)}

    def cr_defect(self, z, h: float = 1e-6) -> np.ndarray:
        """Central-difference estimate of ``|d f / d zbar|`` at ``z``."""
        z = np.asarray(z, dtype=complex)
        fx = (self.value(z + h) - self.value(z - h)) / (2 * h)
        fy = (self.value(z + 1j * h) - self.value(z - 1j * h)) / (2 * h)
        return np.abs(0.5 * (fx + 1j * fy))


class Identity(OneVarMap):
    symmetric = True

    def value(self, z):
        return np.asarray(z, dtype=complex).copy()

    def value_deriv(self, z):
        z = np.asarray(z, dtype=complex)
        return z.copy(), np.ones_like(z)

    def second_deriv(self, z):
        return np.zeros_like(np.asarray(z, dtype=complex))


def _arnoldi(x: np.ndarray, degree: int) -> tuple[np.ndarray, np.ndarray]:
    m = x.shape[0]
    Q = np.zeros((m, degree + 1), dtype=complex)
    H = np.zeros((degree + 1, degree), dtype=complex)
    Q[:, 0] = 1.0
    for k in range(degree):
        q = x * Q[:, k]
        for _ in range(2):
            h = Q[:, : k + 1].conj().T @ q / m
            q = q - Q[:, : k + 1] @ h
            H[: k + 1, k] += h
        H[k + 1, k] = np.linalg.norm(q) / np.sqrt(m)
        if H[k + 1, k] == 0:
            raise IllConditionedError(f"basis collapsed at degree {k + 1}")
        Q[:, k + 1] = q / H[k + 1, k]
    return Q, H


class PolyMap(OneVarMap):
    """Polynomial in an Arnoldi basis of the variable ``x = (z - center) / scale``.

    ``H`` is the Hessenberg matrix of the recurrence and ``coef`` the
    coefficients with respect to the resulting basis.
    """

    def __init__(self, H, coef, center: complex = 0.0, scale: float = 1.0, symmetric: bool = False):
        self.H = np.asarray(H)
        self.coef = np.asarray(coef)
        self.center = center
        self.scale = float(scale)
        self.symmetric = symmetric
        self.degree = self.coef.shape[0] - 1

    def basis(self, z, order: int = 0):
        """Basis values (and ``z``-derivatives up to ``order``) at ``z``."""
        s = (np.asarray(z, dtype=complex).ravel() - self.center) / self.scale
        d, H = self.degree, self.H
        W = np.zeros((s.shape[0], d + 1), dtype=complex)
        W[:, 0] = 1.0
        D = np.zeros_like(W) if order >= 1 else None
        D2 = np.zeros_like(W) if order >= 2 else None
        for k in range(d):
            hk = H[: k + 1, k]
            W[:, k + 1] = (s * W[:, k] - W[:, : k + 1] @ hk) / H[k + 1, k]
            if D is not None:
                D[:, k + 1] = (W[:, k] + s * D[:, k] - D[:, : k + 1] @ hk) / H[k + 1, k]
            if D2 is not None:
                D2[:, k + 1] = (2 * D[:, k] + s * D2[:, k] - D2[:, : k + 1] @ hk) / H[k + 1, k]
        out = [W]
        if D is not None:
            out.append(D / self.scale)
        if D2 is not None:
            out.append(D2 / self.scale**2)
        return out

    def _apply(self, z, order):
        z = np.asarray(z, dtype=complex)
        return [(B @ self.coef).reshape(z.shape) for B in self.basis(z, order)]

    def value(self, z):
        return self._apply(z, 0)[0]

    def value_deriv(self, z):
        v, d = self._apply(z, 1)
        return v, d

    def second_deriv(self, z):
        return self._apply(z, 2)[2]

    def monomial_coefficients(self) -> np.ndarray:
        """Coefficients of ``1, z, z^2, ...``; only sensible for modest degree."""
        P = np.polynomial.Polynomial
        x = P([-self.center / self.scale, 1.0 / self.scale])
        basis = [P([1.0 + 0j])]
        for k in range(self.degree):
            acc = x * basis[k]
            for j in range(k + 1):
                acc = acc - self.H[j, k] * basis[j]
            basis.append(acc / self.H[k + 1, k])
        total = sum((c * b for c, b in zip(self.coef, basis)), P([0j]))
        out = np.zeros(self.degree + 1, dtype=complex)
        out[: total.coef.shape[0]] = total.coef
        return out

    def describe(self):
        return {**super().describe(), "degree": int(self.degree)}


@dataclass
class PolyFit:
    poly: PolyMap
    residual: float
    constraint_error: float
    orthogonality: float


def polyfit_constrained(
    points,
    values,
    degree: int,
    constraints: Sequence[tuple] = (),
    weights=None,
    real: bool = False,
) -> PolyFit:
    """Weighted least squares polynomial with interpolation constraints eliminated.

    ``constraints`` holds ``(point, value)`` or ``(point, value, derivative)``
    tuples.  The constraints span an affine subspace of coefficient space;
    the fit is solved in its null-space parametrization, so the constraints
    hold to rounding.  With ``real=True`` the coefficients are real with
    respect to a real recurrence, which needs a conjugation-symmetric sample
    and a real centre, and the result is real-symmetric.
    """
    z = np.asarray(points, dtype=complex).ravel()
    y = np.asarray(values, dtype=complex).ravel()
    if z.shape != y.shape:
        raise ValueError("points and values differ in length")
    n_eq = sum(2 if len(c) > 2 and c[2] is not None else 1 for c in constraints)
    if degree < n_eq:
        raise ValueError("degree must be at least the number of constraint equations")
    w = np.ones(z.shape[0]) if weights is None else np.asarray(weights, dtype=float).ravel()

    center = float(np.mean(z).real) if real else complex(np.mean(z))
    scale = float(np.max(np.abs(z - center))) or 1.0
    Q, H = _arnoldi((z - center) / scale, degree)
    ortho = float(np.max(np.abs(Q.conj().T @ Q / z.shape[0] - np.eye(degree + 1))))
    if ortho > ORTHO_TOL:
        raise IllConditionedError(f"basis orthogonality defect {ortho:.3e}")
    if real:
        H = H.real
    probe = PolyMap(H, np.zeros(degree + 1), center, scale, symmetric=real)
    A = probe.basis(z)[0]

    rows, rhs = [], []
    for c in constraints:
        W, D = probe.basis(np.array([c[0]]), 1)
        rows.append(W[0])
        rhs.append(c[1])
        if len(c) > 2 and c[2] is not None:
            rows.append(D[0])
            rhs.append(c[2])

    def realify(M, v):
        if not real:
            return M, v
        return np.vstack([M.real, M.imag]), np.concatenate([v.real, v.imag])

    Aw, yw = realify(A * w[:, None], y * w)
    if rows:
        C, e = realify(np.array(rows), np.array(rhs, dtype=complex))
        cp = np.linalg.lstsq(C, e, rcond=None)[0]
        Z = null_space(C)
        u = np.linalg.lstsq(Aw @ Z, yw - Aw @ cp, rcond=None)[0]
        coef = cp + Z @ u
        cerr = float(np.max(np.abs(C @ coef - e)))
    else:
        coef = np.linalg.lstsq(Aw, yw, rcond=None)[0]
        cerr = 0.0
    poly = PolyMap(H, coef, center, scale, symmetric=real)
    res = float(np.max(np.abs(poly.value(z) - y)))
    return PolyFit(poly, res, cerr, ortho)


# ---------------------------------------------------------------------------
# Boundary tables and Cauchy integrals


def circle_nodes(count: int = DEFAULT_NODES) -> np.ndarray:
    return np.exp(2j * np.pi * np.arange(count) / count)


def cauchy_eval(table, z, order: int = 1):
    """Barycentric trapezoidal Cauchy integral of boundary values ``table``.

    ``table[k]`` is the value at ``exp(2 pi i k / N)``.  Returns ``(f, f')``,
    or ``(f, f', f'')`` when ``order == 2``.  Points must satisfy
    ``|z| <= 1 - 2 * (2 pi / N)``.
    """
    table = np.asarray(table, dtype=complex)
    N = table.shape[0]
    z = np.asarray(z, dtype=complex)
    flat = z.ravel()
    margin = 2.0 * (2.0 * np.pi / N)
    if flat.size and np.max(np.abs(flat)) > 1.0 - margin:
        raise TooCloseError(f"evaluation point within {margin:.3e} of the unit circle")
    t = circle_nodes(N)
    C = t[None, :] / (t[None, :] - flat[:, None])
    den = C.sum(axis=1)
    f = (C @ table) / den
    diff = (table[None, :] - f[:, None]) / (t[None, :] - flat[:, None])
    d1 = np.sum(C * diff, axis=1) / den
    out = [f.reshape(z.shape), d1.reshape(z.shape)]
    if order >= 2:
        diff2 = (diff - d1[:, None]) / (t[None, :] - flat[:, None])
        out.append((2.0 * np.sum(C * diff2, axis=1) / den).reshape(z.shape))
    return tuple(out)


class TableMap(OneVarMap):
    """A map known by its values on equispaced nodes of the unit circle."""

    def __init__(self, table, symmetric: bool = False):
        self.table = np.asarray(table, dtype=complex)
        self.symmetric = symmetric
        spacing = 2 * np.pi / self.table.shape[0]
        variation = float(np.sum(np.abs(np.diff(np.append(self.table, self.table[0])))))
        self.error_estimate = spacing**2 * variation

    @classmethod
    def from_function(cls, fun: Callable, count: int = DEFAULT_NODES, symmetric: bool = False) -> "TableMap":
        return cls(fun(circle_nodes(count)), symmetric)

    @property
    def nodes(self) -> np.ndarray:
        return circle_nodes(self.table.shape[0])

    def value(self, z):
        return cauchy_eval(self.table, z)[0]

    def value_deriv(self, z):
        return cauchy_eval(self.table, z)

    def second_deriv(self, z):
        return cauchy_eval(self.table, z, order=2)[2]

    def taylor_coefficients(self, count: int) -> np.ndarray:
        return (np.fft.fft(self.table) / self.table.shape[0])[:count]

    def symmetry_defect(self) -> float:
        flipped = np.roll(self.table[::-1], 1)
        return float(np.max(np.abs(flipped - self.table.conj())))


# ---------------------------------------------------------------------------
# Riemann maps of star-shaped regions


@dataclass(frozen=True)
class StarRegion:
    """``{center + rho e^{i theta}: rho < R(theta)}`` with a real centre."""

    center: float
    radius: Callable[[np.ndarray], np.ndarray]
    name: str = "star"
    symmetric: bool = True

    def boundary(self, count: int = 4096) -> np.ndarray:
        th = 2 * np.pi * np.arange(count) / count
        return self.center + self.radius(th) * np.exp(1j * th)


def disk_region(center: float, radius: float = 1.0) -> StarRegion:
    return StarRegion(center, lambda th: np.full(np.shape(th), float(radius)), "disk")


def ellipse_region(semi_x: float, semi_y: float, center: float = 0.0) -> StarRegion:
    return StarRegion(
        center,
        lambda th: 1.0 / np.sqrt((np.cos(th) / semi_x) ** 2 + (np.sin(th) / semi_y) ** 2),
        "ellipse",
    )


def bumped_disk(center: float, delta: float, width: float = 0.5) -> StarRegion:
    """Unit disk with a smooth bump of height ``delta`` towards ``+1``.

    A near-disk family that converges to the unit disk as ``delta -> 0``.
    """
    return StarRegion(
        center,
        lambda th: 1.0 + delta * np.exp(-((np.angle(np.exp(1j * th)) / width) ** 2)),
        "bumped-disk",
    )


def region_from_boundary(points, center: float) -> StarRegion:
    """Star region through a closed boundary sample, after a radial ray test.

    The ray test asks that the argument about ``center`` be strictly monotone
    along the sample and wind exactly once.
    """
    p = np.asarray(points, dtype=complex) - center
    if np.any(np.abs(p) == 0):
        raise StarShapeError("the centre lies on the boundary")
    steps = np.angle(np.roll(p, -1) / p)
    total = steps.sum()
    if total < 0:
        steps, total = -steps, -total
    if not np.all(steps > 0) or abs(total - 2 * np.pi) > 1e-9:
        raise StarShapeError("boundary is not star-shaped about the centre")
    th = np.mod(np.angle(p), 2 * np.pi)
    order = np.argsort(th)
    th, logr = th[order], np.log(np.abs(p[order]))
    spline = CubicSpline(np.append(th, th[0] + 2 * np.pi), np.append(logr, logr[0]), bc_type="periodic")
    return StarRegion(float(center), lambda t: np.exp(spline(np.mod(t, 2 * np.pi))), "sampled")


def _conjugate(u: np.ndarray) -> np.ndarray:
    """Periodic conjugate function (Hilbert transform on the circle)."""
    N = u.shape[0]
    k = np.fft.fftfreq(N, 1.0 / N)
    mult = -1j * np.sign(k)
    if N % 2 == 0:
        mult[N // 2] = 0.0
    return np.real(np.fft.ifft(mult * np.fft.fft(u)))


class RiemannMap(OneVarMap):
    """``psi(z) = center + z exp(h(z))`` with ``h`` held as a boundary table.

    ``psi(0) = center`` and ``psi'(0) = exp(h(0)) > 0`` hold by construction.
    """

    def __init__(self, region: StarRegion, theta: np.ndarray, iterations: int):
        self.region = region
        self.theta = theta
        self.iterations = iterations
        self.symmetric = region.symmetric
        t = 2 * np.pi * np.arange(theta.shape[0]) / theta.shape[0]
        self.h = TableMap(np.log(region.radius(theta)) + 1j * (theta - t), region.symmetric)

    @property
    def boundary_values(self) -> np.ndarray:
        return self.region.center + self.region.radius(self.theta) * np.exp(1j * self.theta)

    def value(self, z):
        z = np.asarray(z, dtype=complex)
        return self.region.center + z * np.exp(self.h.value(z))

    def value_deriv(self, z):
        z = np.asarray(z, dtype=complex)
        hv, hd = self.h.value_deriv(z)
        e = np.exp(hv)
        return self.region.center + z * e, e * (1 + z * hd)

    def second_deriv(self, z):
        z = np.asarray(z, dtype=complex)
        hv, hd, hdd = cauchy_eval(self.h.table, z, order=2)
        return np.exp(hv) * (2 * hd + z * hd**2 + z * hdd)

    def taylor_coefficients(self, count: int) -> np.ndarray:
        return TableMap(self.boundary_values).taylor_coefficients(count)

    def correspondence_residual(self) -> float:
        """``max |theta - t - K[log R(theta)]|`` for the stored correspondence."""
        N = self.theta.shape[0]
        t = 2 * np.pi * np.arange(N) / N
        return float(np.max(np.abs(self.theta - t - _conjugate(np.log(self.region.radius(self.theta))))))


def riemann_map(
    region: StarRegion,
    nodes: int = DEFAULT_NODES,
    tol: float = 1e-14,
    max_iter: int = 10_000,
    relax: float = 1.0,
) -> RiemannMap:
    """Riemann map of a star-shaped region by circle-correspondence iteration.

    Solves ``theta(t) = t + K[log R(theta(t))]`` for the boundary
    correspondence, where ``K`` is the conjugate-function operator.  Under-
    relaxation (``relax < 1``) widens the range of boundaries that converge.
    """
    t = 2 * np.pi * np.arange(nodes) / nodes
    theta = t.copy()
    for it in range(1, max_iter + 1):
        new = t + _conjugate(np.log(region.radius(theta)))
        step = float(np.max(np.abs(new - theta)))
        theta = (1 - relax) * theta + relax * new
        if not np.isfinite(step):
            break
        if step < tol:
            return RiemannMap(region, theta, it)
    raise RiemannMapError(f"circle correspondence did not converge in {max_iter} iterations")


# ---------------------------------------------------------------------------
# Dumbbells


@dataclass(frozen=True)
class DumbbellRegion:
    """``delta``-neighbourhood of ``D_1(a) U [a+1, b-1] U D_1(b)``."""

    a: float
    b: float
    delta: float
    boundary: np.ndarray = field(repr=False)

    @classmethod
    def create(cls, a: float, b: float, delta: float, count: int = 4096) -> "DumbbellRegion":
        if not b - a > 2:
            raise ValueError("need b - a > 2")
        if not delta > 0:
            raise ValueError("delta must be positive")
        R = 1.0 + delta
        alpha = np.arcsin(delta / R)
        k = max(count // 6, 8)
        left = a + R * np.exp(1j * np.linspace(np.pi, alpha, k))
        x0, x1 = left[-1].real, b - R * np.cos(alpha)
        neck = np.linspace(x0, x1, k)[1:-1] + 1j * delta
        right = b + R * np.exp(1j * np.linspace(np.pi - alpha, 0.0, k))
        top = np.concatenate([left, neck, right])
        top[0], top[-1] = top[0].real, top[-1].real
        bottom = top[1:-1][::-1].conj()
        return cls(float(a), float(b), float(delta), np.concatenate([top, bottom]))

    def core_distance(self, w) -> np.ndarray:
        """Distance from ``w`` to ``D_1(a) U [a+1, b-1] U D_1(b)``."""
        w = np.asarray(w, dtype=complex)
        da = np.maximum(np.abs(w - self.a) - 1.0, 0.0)
        db = np.maximum(np.abs(w - self.b) - 1.0, 0.0)
        x = np.clip(w.real, self.a + 1.0, self.b - 1.0)
        ds = np.abs(w - x)
        return np.minimum(np.minimum(da, db), ds)

    def contains(self, w, tol: float = 0.0) -> np.ndarray:
        return self.core_distance(w) < self.delta + tol

    def winding(self, point: complex) -> int:
        p = self.boundary - point
        return int(np.round(np.sum(np.angle(np.roll(p, -1) / p)) / (2 * np.pi)))

    def symmetry_defect(self) -> float:
        bd = self.boundary
        d = np.abs(bd[:, None] - bd.conj()[None, :]).min(axis=1)
        return float(d.max())


def _softplus(x):
    x = np.asarray(x, dtype=complex)
    pos = x.real > 0
    out = np.empty_like(x)
    with np.errstate(invalid="ignore", over="ignore"):
        out[pos] = x[pos] + np.log1p(np.exp(-x[pos]))
        out[~pos] = np.log1p(np.exp(x[~pos]))
    return out


def _logistic(x):
    x = np.asarray(x, dtype=complex)
    pos = x.real > 0
    out = np.empty_like(x)
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    e = np.exp(x[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def _half_tanh_parts(x):
    """``tanh(x/2)`` and ``sech(x/2)^2`` without overflow."""
    x = np.asarray(x, dtype=complex)
    sgn = np.where(x.real > 0, 1.0, -1.0)
    with np.errstate(invalid="ignore", over="ignore"):
        e = np.exp(-sgn * x.real) * np.exp(-1j * sgn * x.imag)
        th = sgn * (1.0 - e) / (1.0 + e)
        sech2 = 4.0 * e / (1.0 + e) ** 2
    return th, sech2


class StripDumbbell:
    """The strip map ``Psi`` onto a dumbbell with neck half-width ``eta``."""

    def __init__(self, a: float, b: float, eta: float):
        if not b - a > 2:
            raise ValueError("need b - a > 2")
        if not eta > 0:
            raise ValueError("neck half-width must be positive")
        self.a, self.b, self.eta = float(a), float(b), float(eta)
        self.ell = self.b - self.a - 2.0
        self.L = self.ell * np.pi / (2.0 * self.eta)

    def psi(self, s):
        s = np.asarray(s, dtype=complex)
        t1, _ = _half_tanh_parts(s)
        t2, _ = _half_tanh_parts(s - self.L)
        with np.errstate(invalid="ignore"):
            lam = (_softplus(s) - _softplus(s - self.L)) / self.L
            out = self.a + 1.0 + t1 + t2 + self.ell * lam
        out = np.where(np.isposinf(s.real), self.b + 1.0, out)
        return np.where(np.isneginf(s.real), self.a - 1.0, out)

    def psi_derivs(self, s):
        s = np.asarray(s, dtype=complex)
        t1, q1 = _half_tanh_parts(s)
        t2, q2 = _half_tanh_parts(s - self.L)
        with np.errstate(invalid="ignore", over="ignore"):
            l1, l2 = _logistic(s), _logistic(s - self.L)
        d1 = 0.5 * q1 + 0.5 * q2 + self.ell / self.L * (l1 - l2)
        d2 = -0.5 * q1 * t1 - 0.5 * q2 * t2 + self.ell / self.L * (l1 * (1 - l1) - l2 * (1 - l2))
        return d1, d2

    def psi_mp(self, s):
        """``Psi`` in mpmath arithmetic at the current working precision."""
        if mpmath.isinf(s):
            return mpmath.mpf(self.b + 1.0) if s.real > 0 else mpmath.mpf(self.a - 1.0)
        L = mpmath.mpf(self.L)
        lam = (mpmath.log(1 + mpmath.exp(s)) - mpmath.log(1 + mpmath.exp(s - L))) / L
        return self.a + 1 + mpmath.tanh(s / 2) + mpmath.tanh((s - L) / 2) + self.ell * lam

    def preimage_of_real(self, x: float) -> float:
        """Real ``s`` with ``Psi(s) = x`` for ``a - 1 < x < b + 1``."""
        g = lambda s: float(self.psi(s).real) - x
        lo, hi = -60.0, self.L + 60.0
        return brentq(g, lo, hi, xtol=1e-15, rtol=1e-15, maxiter=500)


class DumbbellMap(OneVarMap):
    """``f(z) = Psi(s0 + 2 artanh z)``: the disk onto the dumbbell, ``f(0) = Psi(s0)``."""

    symmetric = True

    def __init__(self, strip: StripDumbbell, s0: float):
        self.strip = strip
        self.s0 = float(s0)

    def _s(self, z):
        z = np.asarray(z, dtype=complex)
        with np.errstate(divide="ignore", invalid="ignore"):
            s = self.s0 + np.log((1 + z) / (1 - z))
        s = np.where(z == 1, np.inf, s)
        return np.where(z == -1, -np.inf, s)

    def value(self, z):
        return self.strip.psi(self._s(z))

    def value_deriv(self, z):
        z = np.asarray(z, dtype=complex)
        s = self._s(z)
        d1, _ = self.strip.psi_derivs(s)
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.strip.psi(s), d1 * 2.0 / (1 - z * z)

    def second_deriv(self, z):
        z = np.asarray(z, dtype=complex)
        d1, d2 = self.strip.psi_derivs(self._s(z))
        with np.errstate(divide="ignore", invalid="ignore"):
            ds = 2.0 / (1 - z * z)
            dds = 4.0 * z / (1 - z * z) ** 2
        return d2 * ds**2 + d1 * dds

    def describe(self):
        return {**super().describe(), "a": self.strip.a, "b": self.strip.b, "neck": self.strip.eta, "s0": self.s0}


class ReflectedMap(OneVarMap):
    """``z -> c - f(-z)``."""

    def __init__(self, f: OneVarMap, c: float):
        self.f = f
        self.c = c
        self.symmetric = f.symmetric

    def value(self, z):
        return self.c - self.f.value(-np.asarray(z, dtype=complex))

    def value_deriv(self, z):
        v, d = self.f.value_deriv(-np.asarray(z, dtype=complex))
        return self.c - v, d

    def second_deriv(self, z):
        return -self.f.second_deriv(-np.asarray(z, dtype=complex))

    def describe(self):
        return {"kind": "reflected", "c": self.c, "inner": self.f.describe()}


@dataclass
class DumbbellPair:
    f: DumbbellMap
    g: ReflectedMap
    r_value: float
    one_minus_r: float
    region: DumbbellRegion
    neck_halfwidth: float
    containment: float
    injectivity: str
    consistency: float
    endpoints: tuple[complex, complex]

    def m(self, z):
        return mobius(self.r_value, z, self.one_minus_r)

    def report(self) -> dict:
        return {
            "a": self.region.a,
            "b": self.region.b,
            "delta": self.region.delta,
            "neck_halfwidth": self.neck_halfwidth,
            "strip_length": self.f.strip.L,
            "r_value": self.r_value,
            "one_minus_r": self.one_minus_r,
            "containment": self.containment,
            "injectivity": self.injectivity,
            "consistency": self.consistency,
            "f_at_minus_one": [float(self.endpoints[0].real), float(self.endpoints[0].imag)],
            "f_at_one": [float(self.endpoints[1].real), float(self.endpoints[1].imag)],
        }


def _top_boundary(strip: StripDumbbell, step: float = 0.02, pad: float = 50.0) -> tuple[np.ndarray, np.ndarray]:
    sigma = np.arange(-pad, strip.L + pad, step)
    s = sigma + 0.5j * np.pi
    return strip.psi(s), strip.psi_derivs(s)[0]


def _injectivity(strip: StripDumbbell) -> tuple[str, float]:
    """Certificate that ``Psi`` is injective on the closed strip.

    The boundary image is the upper curve ``Psi(sigma + i pi/2)`` and its
    mirror image.  When the upper curve has positive imaginary part and
    strictly increasing real part, it is a graph, the closed boundary curve is
    simple, and a holomorphic map on the closed domain that is injective on
    the boundary is injective inside.
    """
    w, dw = _top_boundary(strip)
    away = np.minimum(np.abs(w - strip.a + 1.0), np.abs(w - strip.b - 1.0)) > 1e-9
    graph = bool(np.all(w.imag[away] > 0) and np.all(dw.real > 0))
    return ("boundary-graph" if graph else "withheld"), float(w.real.max())


def consistency_defect(f: DumbbellMap, s_r: float, z) -> float:
    """``sup |g(m(z)) - f(z)|`` with ``m`` and ``g`` evaluated in extended precision.

    With ``1 - r`` near ``exp(-s_r)`` a double cannot hold ``m(z)`` for most
    ``z`` (it rounds to ``-1``), so ``g(m(z))`` is evaluated with enough
    digits to resolve ``1 - r``.  ``f(z)`` itself is the double result.
    """
    strip = f.strip
    z = np.asarray(z, dtype=complex).ravel()
    fz = f.value(z)
    digits = int(s_r / np.log(10.0)) + 30
    worst = 0.0
    with mpmath.workdps(digits):
        r = mpmath.tanh(mpmath.mpf(s_r) / 2)
        c = mpmath.mpf(strip.a + strip.b)
        for zk, fk in zip(z, fz):
            zm = mpmath.mpc(zk.real, zk.imag)
            w = -(zm - r) / (1 - r * zm)
            if w == 1:
                s = mpmath.inf
            elif w == -1:
                s = -mpmath.inf
            else:
                s = f.s0 + mpmath.log((1 + w) / (1 - w))
            val = complex(c - strip.psi_mp(s))
            worst = max(worst, abs(val - fk))
    return worst


def disk_test_grid(radial: int = 30, angular: int = 96) -> np.ndarray:
    rr = np.linspace(0.0, 1.0, radial)
    th = 2 * np.pi * np.arange(angular) / angular
    return np.unique((rr[:, None] * np.exp(1j * th)[None, :]).ravel())


def dumbbell_pair(
    a: float,
    b: float,
    delta: float,
    neck_fraction: float = 1.0 / 3.0,
    shrink: float = 0.8,
    containment_margin: float = 0.9,
    max_shrinks: int = 60,
) -> DumbbellPair:
    """The dumbbell triple for ``D_1(a)`` and ``D_1(b)`` joined inside the ``delta``-neighbourhood.

    The neck half-width starts at ``neck_fraction * delta`` and is shrunk
    until the boundary image lies within ``containment_margin * delta`` of
    the core.  ``f(0) = a``, ``g(0) = b``, ``g(z) = a + b - f(-z)``,
    ``f(-1) = a - 1`` and ``f(1) = b + 1``.
    """
    region = DumbbellRegion.create(a, b, delta)
    eta = neck_fraction * delta
    for _ in range(max_shrinks):
        strip = StripDumbbell(a, b, eta)
        w, _ = _top_boundary(strip)
        contain = float(region.core_distance(w).max())
        if contain <= containment_margin * delta:
            break
        eta *= shrink
    else:
        raise ConsistencyError("could not fit the dumbbell inside the delta-neighbourhood")
    s_a = strip.preimage_of_real(a)
    f = DumbbellMap(strip, s_a)
    g = ReflectedMap(f, a + b)
    s_r = strip.L - 2.0 * s_a
    e = np.exp(-s_r)
    r = float(np.tanh(s_r / 2.0))
    omr = float(2.0 * e / (1.0 + e))
    cert, _ = _injectivity(strip)

    cons = consistency_defect(f, s_r, disk_test_grid())
    if not cons <= 1e-5:
        raise ConsistencyError(f"sup |g(m(z)) - f(z)| = {cons:.3e}")
    ends = (complex(f.value(np.array([-1.0 + 0j]))[0]), complex(f.value(np.array([1.0 + 0j]))[0]))
    return DumbbellPair(f, g, r, omr, region, eta, contain, cert, cons, ends)


# ---------------------------------------------------------------------------
# CSV tables


def write_table_csv(path, values) -> None:
    values = np.asarray(values, dtype=complex)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "re", "im"])
        for k, v in enumerate(values):
            w.writerow([k, repr(float(v.real)), repr(float(v.imag))])


def read_table_csv(path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    out = np.zeros(len(rows), dtype=complex)
    for row in rows:
        out[int(row["index"])] = float(row["re"]) + 1j * float(row["im"])
    return out
