"""Holomorphic scalar expressions and composable holomorphic maps of C^n.

Every object here evaluates on batches of points (last axis = n) and returns
exact first and second complex derivatives, so Jacobians of compositions are
assembled by the chain rule rather than by differencing.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np


def _pts(z, n: int) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    if z.shape[-1] != n:
        raise ValueError(f"expected points with last axis {n}, got {z.shape}")
    return z.reshape(-1, n)


# ---------------------------------------------------------------------------
# scalar expressions


class ScalarExpr:
    """Holomorphic function ``C^n -> C`` with gradient and Hessian."""

    n: int

    def value(self, z) -> np.ndarray:
        raise NotImplementedError

    def grad(self, z) -> np.ndarray:
        raise NotImplementedError

    def hess(self, z) -> np.ndarray:
        raise NotImplementedError

    def log_parts(self, z):
        """Value, gradient and Hessian of a holomorphic logarithm of ``self``."""
        v = self.value(z)
        g = self.grad(z)
        h = self.hess(z)
        lg = g / v[:, None]
        lh = h / v[:, None, None] - lg[:, :, None] * lg[:, None, :]
        return np.log(v), lg, lh

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        out = self.value(z)
        return out.reshape(z.shape[:-1])


class HoloPoly(ScalarExpr):
    """``sum_k c_k z^{alpha_k}``."""

    def __init__(self, n: int, exps, coeffs):
        self.n = int(n)
        self.exps = np.asarray(exps, dtype=int).reshape(-1, self.n)
        self.coeffs = np.asarray(coeffs, dtype=complex).reshape(-1)
        if self.exps.shape[0] != self.coeffs.shape[0]:
            raise ValueError("exponent and coefficient counts differ")

    @classmethod
    def linear(cls, c) -> "HoloPoly":
        c = np.asarray(c, dtype=complex)
        return cls(c.shape[0], np.eye(c.shape[0], dtype=int), c)

    @classmethod
    def quadratic(cls, q) -> "HoloPoly":
        """``w^T q w`` for a symmetric matrix ``q``."""
        q = np.asarray(q, dtype=complex)
        n = q.shape[0]
        exps, coeffs = [], []
        for i in range(n):
            for j in range(i, n):
                c = q[i, j] if i == j else 2 * q[i, j]
                if c != 0:
                    e = np.zeros(n, dtype=int)
                    e[i] += 1
                    e[j] += 1
                    exps.append(e)
                    coeffs.append(c)
        if not exps:
            return cls(n, np.zeros((0, n), dtype=int), [])
        return cls(n, exps, coeffs)

    def __add__(self, other: "HoloPoly") -> "HoloPoly":
        return HoloPoly(self.n, np.concatenate([self.exps, other.exps]), np.concatenate([self.coeffs, other.coeffs]))

    def is_zero(self) -> bool:
        return not np.any(self.coeffs != 0)

    def _mono(self, z, exps) -> np.ndarray:
        P = z.shape[0]
        if exps.shape[0] == 0:
            return np.zeros((P, 0), dtype=complex)
        top = max(int(exps.max()), 0)
        pw = np.ones((top + 1, P, self.n), dtype=complex)
        for k in range(1, top + 1):
            pw[k] = pw[k - 1] * z
        out = np.ones((P, exps.shape[0]), dtype=complex)
        for i in range(self.n):
            out *= pw[exps[:, i], :, i].T
        return out

    def _deriv(self, d: Sequence[int]):
        d = np.asarray(d, dtype=int)
        fac = np.ones(self.exps.shape[0])
        for i in range(self.n):
            for m in range(d[i]):
                fac = fac * (self.exps[:, i] - m)
        keep = fac != 0
        return self.exps[keep] - d, self.coeffs[keep] * fac[keep]

    def value(self, z):
        z = _pts(z, self.n)
        return self._mono(z, self.exps) @ self.coeffs

    def grad(self, z):
        z = _pts(z, self.n)
        out = np.zeros(z.shape, dtype=complex)
        for i in range(self.n):
            e, c = self._deriv(np.eye(self.n, dtype=int)[i])
            out[:, i] = self._mono(z, e) @ c
        return out

    def hess(self, z):
        z = _pts(z, self.n)
        out = np.zeros((z.shape[0], self.n, self.n), dtype=complex)
        eye = np.eye(self.n, dtype=int)
        for i in range(self.n):
            for j in range(i, self.n):
                e, c = self._deriv(eye[i] + eye[j])
                out[:, i, j] = self._mono(z, e) @ c
                out[:, j, i] = out[:, i, j]
        return out

    def norm_bound(self) -> float:
        """Operator norm of the quadratic form when the polynomial is homogeneous quadratic."""
        q = np.zeros((self.n, self.n), dtype=complex)
        for e, c in zip(self.exps, self.coeffs):
            idx = np.nonzero(e)[0]
            if e.sum() != 2:
                raise ValueError("norm_bound expects a homogeneous quadratic")
            if len(idx) == 1:
                q[idx[0], idx[0]] += c
            else:
                q[idx[0], idx[1]] += c / 2
                q[idx[1], idx[0]] += c / 2
        return float(np.linalg.norm(q, 2))


class Exp(ScalarExpr):
    """``exp(inner)``; its logarithm is ``inner`` exactly."""

    def __init__(self, inner: ScalarExpr):
        self.inner = inner
        self.n = inner.n

    def value(self, z):
        return np.exp(self.inner.value(z))

    def grad(self, z):
        return self.value(z)[:, None] * self.inner.grad(z)

    def hess(self, z):
        g = self.inner.grad(z)
        return self.value(z)[:, None, None] * (self.inner.hess(z) + g[:, :, None] * g[:, None, :])

    def log_parts(self, z):
        return self.inner.value(z), self.inner.grad(z), self.inner.hess(z)


class Constant(ScalarExpr):
    def __init__(self, n: int, c: complex):
        self.n = n
        self.c = complex(c)

    def value(self, z):
        z = _pts(z, self.n)
        return np.full(z.shape[0], self.c)

    def grad(self, z):
        return np.zeros(_pts(z, self.n).shape, dtype=complex)

    def hess(self, z):
        P = _pts(z, self.n).shape[0]
        return np.zeros((P, self.n, self.n), dtype=complex)


class AffinePullback(ScalarExpr):
    """``z -> inner(A z + b)``."""

    def __init__(self, inner: ScalarExpr, A, b):
        A = np.asarray(A, dtype=complex)
        b = np.asarray(b, dtype=complex)
        if isinstance(inner, AffinePullback):
            # fold nested pullbacks so that offsets like +zeta and -zeta cancel
            # before any point is formed; this keeps tiny chart radii resolvable
            A, b = inner.A @ A, inner.A @ b + inner.b
            inner = inner.inner
        self.inner = inner
        self.A = A
        self.b = b
        self.n = self.A.shape[1]

    def _inner_pts(self, z):
        return _pts(z, self.n) @ self.A.T + self.b

    def value(self, z):
        return self.inner.value(self._inner_pts(z))

    def grad(self, z):
        return self.inner.grad(self._inner_pts(z)) @ self.A

    def hess(self, z):
        return np.einsum("pkl,ki,lj->pij", self.inner.hess(self._inner_pts(z)), self.A, self.A)

    def log_parts(self, z):
        v, g, h = self.inner.log_parts(self._inner_pts(z))
        return v, g @ self.A, np.einsum("pkl,ki,lj->pij", h, self.A, self.A)


class PeakSum(ScalarExpr):
    """``sum_j w_j Q(z) f(z)^{N_j}`` evaluated through ``log f``.

    Powers are formed as ``exp(N_j log f)`` so that very large exponents
    underflow cleanly to zero away from the peak point instead of overflowing.
    """

    def __init__(self, Q: HoloPoly, peak: ScalarExpr, weights, exponents):
        self.Q = Q
        self.peak = peak
        self.n = Q.n
        self.weights = np.asarray(weights, dtype=float)
        self.exponents = np.asarray([float(N) for N in exponents], dtype=float)

    def _parts(self, z, order: int):
        z = _pts(z, self.n)
        q = self.Q.value(z)
        lv, lg, lh = self.peak.log_parts(z)
        out = [np.zeros(z.shape[0], dtype=complex)]
        if order >= 1:
            qg = self.Q.grad(z)
            out.append(np.zeros(z.shape, dtype=complex))
        if order >= 2:
            qh = self.Q.hess(z)
            out.append(np.zeros((z.shape[0], self.n, self.n), dtype=complex))
        with np.errstate(over="ignore", invalid="ignore", under="ignore"):
            for w, N in zip(self.weights, self.exponents):
                E = np.exp(N * lv)
                E = np.where(np.isfinite(E), E, np.inf)
                wE = w * E
                out[0] = out[0] + _safe_mul(wE, q)
                if order >= 1:
                    wEN = wE * N
                    out[1] = out[1] + wE[:, None] * qg + _safe_mul(wEN, q)[:, None] * lg
                if order >= 2:
                    qN = _safe_mul(wEN, q)
                    cross = qg[:, :, None] * lg[:, None, :]
                    out[2] = (
                        out[2]
                        + wE[:, None, None] * qh
                        + wEN[:, None, None] * (cross + np.swapaxes(cross, 1, 2))
                        + qN[:, None, None] * (lh + N * lg[:, :, None] * lg[:, None, :])
                    )
        return out

    def value(self, z):
        return self._parts(z, 0)[0]

    def grad(self, z):
        return self._parts(z, 1)[1]

    def hess(self, z):
        return self._parts(z, 2)[2]

    def value_grad(self, z):
        v, g = self._parts(z, 1)
        return v, g


def _safe_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Product with the convention ``x * 0 = 0`` even for infinite ``x``."""
    out = a * b
    return np.where(b == 0, 0.0, out)


# ---------------------------------------------------------------------------
# map primitives


class MapPrimitive:
    """Holomorphic map ``C^n -> C^n`` with exact Jacobian and second derivatives.

    ``hess`` returns an array ``(P, n, n, n)`` with entry ``[p, k, i, j] =
    d^2 F_k / dz_i dz_j``.
    """

    n: int
    name = "primitive"

    def eval(self, z) -> np.ndarray:
        raise NotImplementedError

    def jac(self, z) -> np.ndarray:
        raise NotImplementedError

    def hess(self, z) -> np.ndarray:
        raise NotImplementedError

    def eval_jac(self, z):
        return self.eval(z), self.jac(z)

    def describe(self) -> dict:
        return {"kind": self.name}


class Affine(MapPrimitive):
    name = "affine"

    def __init__(self, A, b=None):
        self.A = np.asarray(A, dtype=complex)
        self.n = self.A.shape[0]
        self.b = np.zeros(self.n, dtype=complex) if b is None else np.asarray(b, dtype=complex)
        if abs(np.linalg.det(self.A)) == 0:
            raise ValueError("affine primitive requires an invertible matrix")

    def eval(self, z):
        return _pts(z, self.n) @ self.A.T + self.b

    def jac(self, z):
        P = _pts(z, self.n).shape[0]
        return np.broadcast_to(self.A, (P, self.n, self.n)).copy()

    def hess(self, z):
        P = _pts(z, self.n).shape[0]
        return np.zeros((P, self.n, self.n, self.n), dtype=complex)

    def inverse(self) -> "Affine":
        Ai = np.linalg.inv(self.A)
        return Affine(Ai, -Ai @ self.b)

    def describe(self):
        return {"kind": self.name, "A": _cplx_list(self.A), "b": _cplx_list(self.b)}


class Unitary(Affine):
    name = "unitary"

    def __init__(self, U, tol: float = 1e-12):
        U = np.asarray(U, dtype=complex)
        if np.abs(U.conj().T @ U - np.eye(U.shape[0])).max() > tol:
            raise ValueError("matrix is not unitary to tolerance")
        super().__init__(U)


class Shear(MapPrimitive):
    """``z -> z + phi(z) e_k`` (``k`` defaults to the last coordinate)."""

    name = "shear"

    def __init__(self, phi: ScalarExpr, index: int = -1):
        self.phi = phi
        self.n = phi.n
        self.k = index % self.n

    def eval(self, z):
        z = _pts(z, self.n)
        out = z.copy()
        out[:, self.k] = out[:, self.k] + self.phi.value(z)
        return out

    def jac(self, z):
        z = _pts(z, self.n)
        J = np.broadcast_to(np.eye(self.n, dtype=complex), (z.shape[0], self.n, self.n)).copy()
        J[:, self.k, :] += self.phi.grad(z)
        return J

    def eval_jac(self, z):
        z = _pts(z, self.n)
        if hasattr(self.phi, "value_grad"):
            v, g = self.phi.value_grad(z)
        else:
            v, g = self.phi.value(z), self.phi.grad(z)
        out = z.copy()
        out[:, self.k] += v
        J = np.broadcast_to(np.eye(self.n, dtype=complex), (z.shape[0], self.n, self.n)).copy()
        J[:, self.k, :] += g
        return out, J

    def hess(self, z):
        z = _pts(z, self.n)
        out = np.zeros((z.shape[0], self.n, self.n, self.n), dtype=complex)
        out[:, self.k] = self.phi.hess(z)
        return out


class OneVarOnCoord(MapPrimitive):
    """``z -> (z_1, .., f(z_k), .., z_n)`` for a one-variable map ``f``."""

    name = "onevar"

    def __init__(self, f, n: int, index: int = -1):
        self.f = f
        self.n = n
        self.k = index % n

    def eval(self, z):
        z = _pts(z, self.n)
        out = z.copy()
        out[:, self.k] = self.f.value(z[:, self.k])
        return out

    def eval_jac(self, z):
        z = _pts(z, self.n)
        v, d = self.f.value_deriv(z[:, self.k])
        out = z.copy()
        out[:, self.k] = v
        J = np.broadcast_to(np.eye(self.n, dtype=complex), (z.shape[0], self.n, self.n)).copy()
        J[:, self.k, self.k] = d
        return out, J

    def jac(self, z):
        return self.eval_jac(z)[1]

    def hess(self, z):
        z = _pts(z, self.n)
        out = np.zeros((z.shape[0], self.n, self.n, self.n), dtype=complex)
        out[:, self.k, self.k, self.k] = self.f.second_deriv(z[:, self.k])
        return out


class FiberScale(MapPrimitive):
    """``z -> (h(z_k) z', f(z_k))``: scale the other coordinates by ``h(z_k)``.

    ``f`` may be ``None`` to leave ``z_k`` unchanged.
    """

    name = "fiber-scale"

    def __init__(self, h, f, n: int, index: int = -1):
        self.h = h
        self.f = f
        self.n = n
        self.k = index % n

    def eval_jac(self, z):
        z = _pts(z, self.n)
        hv, hd = self.h.value_deriv(z[:, self.k])
        out = z * hv[:, None]
        J = np.zeros((z.shape[0], self.n, self.n), dtype=complex)
        idx = np.arange(self.n)
        J[:, idx, idx] = hv[:, None]
        J[:, :, self.k] = z * hd[:, None]
        if self.f is None:
            out[:, self.k] = z[:, self.k]
            J[:, self.k, :] = 0
            J[:, self.k, self.k] = 1
        else:
            fv, fd = self.f.value_deriv(z[:, self.k])
            out[:, self.k] = fv
            J[:, self.k, :] = 0
            J[:, self.k, self.k] = fd
        return out, J

    def eval(self, z):
        return self.eval_jac(z)[0]

    def jac(self, z):
        return self.eval_jac(z)[1]

    def hess(self, z):
        raise NotImplementedError("second derivatives are not needed for fibre scalings")


class ScaledIsotopy(MapPrimitive):
    """``z -> inner(t z) / t`` for ``0 < t <= 1``."""

    name = "scaled-isotopy"

    def __init__(self, inner: "MapExpr | MapPrimitive", t: float):
        if not (0 < t <= 1):
            raise ValueError("isotopy parameter must lie in (0, 1]")
        self.inner = inner
        self.t = float(t)
        self.n = inner.n

    def eval(self, z):
        if self.t == 1.0:
            return self.inner.eval(z)
        return self.inner.eval(self.t * _pts(z, self.n)) / self.t

    def eval_jac(self, z):
        if self.t == 1.0:
            return self.inner.eval_jac(z)
        v, J = self.inner.eval_jac(self.t * _pts(z, self.n))
        return v / self.t, J

    def jac(self, z):
        return self.eval_jac(z)[1]

    def hess(self, z):
        return self.t * self.inner.hess(self.t * _pts(z, self.n))

    def describe(self):
        return {"kind": self.name, "t": self.t, "inner": self.inner.describe()}


class MapExpr:
    """Composition ``P_m o ... o P_1`` of primitives (applied left to right)."""

    def __init__(self, primitives: Sequence[MapPrimitive]):
        if not primitives:
            raise ValueError("a map expression needs at least one primitive")
        self.primitives = list(primitives)
        self.n = self.primitives[0].n
        if any(p.n != self.n for p in self.primitives):
            raise ValueError("primitive dimensions differ")

    def then(self, other: "MapExpr | MapPrimitive") -> "MapExpr":
        more = other.primitives if isinstance(other, MapExpr) else [other]
        return MapExpr(self.primitives + list(more))

    def eval(self, z):
        z = np.asarray(z, dtype=complex)
        shape = z.shape
        w = _pts(z, self.n)
        for p in self.primitives:
            w = p.eval(w)
        return w.reshape(shape)

    def eval_jac(self, z):
        w = _pts(z, self.n)
        J = None
        for p in self.primitives:
            w, Jp = p.eval_jac(w)
            J = Jp if J is None else np.einsum("pij,pjk->pik", Jp, J)
        return w, J

    def jac(self, z):
        return self.eval_jac(z)[1]

    def hess(self, z):
        w = _pts(z, self.n)
        J = np.broadcast_to(np.eye(self.n, dtype=complex), (w.shape[0], self.n, self.n)).copy()
        Hs = np.zeros((w.shape[0], self.n, self.n, self.n), dtype=complex)
        for p in self.primitives:
            Jp = p.jac(w)
            Hp = p.hess(w)
            Hs = np.einsum("pklm,pli,pmj->pkij", Hp, J, J) + np.einsum("pkl,plij->pkij", Jp, Hs)
            J = np.einsum("pij,pjk->pik", Jp, J)
            w = p.eval(w)
        return Hs

    def describe(self) -> dict:
        return {"kind": "composition", "primitives": [p.describe() for p in self.primitives]}

    def invert(self, target, guess=None, tol: float = 1e-12, max_iter: int = 50):
        """Newton inversion ``F(z) = target`` using the analytic Jacobian.

        Returns ``(z, converged_mask, iterations)``; the step tolerance is
        relative to ``max(1, |z|)``.
        """
        y = _pts(target, self.n)
        z = y.copy() if guess is None else _pts(guess, self.n).copy()
        done = np.zeros(y.shape[0], dtype=bool)
        it = 0
        for it in range(1, max_iter + 1):
            Fz, J = self.eval_jac(z)
            r = Fz - y
            step = np.linalg.solve(J, r[..., None])[..., 0]
            bad = ~np.all(np.isfinite(step), axis=1)
            step[bad] = 0
            z = z - step
            size = np.linalg.norm(step, axis=1)
            done = (size <= tol * np.maximum(1.0, np.linalg.norm(z, axis=1))) & ~bad
            if done.all():
                break
        return z, done, it


# ---------------------------------------------------------------------------
# derivative oracles


def fd_complex_jacobian(fun, z, h: float = 1e-6) -> np.ndarray:
    """Central-difference ``dF/dz`` and ``dF/dconj(z)`` of a map ``C^n -> C^m``.

    Returns ``(dz, dzbar)`` with shapes ``(P, m, n)``.
    """
    z = np.atleast_2d(np.asarray(z, dtype=complex))
    P, n = z.shape
    cols_dz, cols_dzb = [], []
    for j in range(n):
        e = np.zeros(n, dtype=complex)
        e[j] = 1.0
        fx = (np.asarray(fun(z + h * e)) - np.asarray(fun(z - h * e))) / (2 * h)
        fy = (np.asarray(fun(z + 1j * h * e)) - np.asarray(fun(z - 1j * h * e))) / (2 * h)
        fx = fx.reshape(P, -1)
        fy = fy.reshape(P, -1)
        cols_dz.append(0.5 * (fx - 1j * fy))
        cols_dzb.append(0.5 * (fx + 1j * fy))
    return np.stack(cols_dz, axis=-1), np.stack(cols_dzb, axis=-1)


def _cplx_list(a) -> list:
    a = np.asarray(a)
    if a.ndim == 0:
        return [float(a.real), float(a.imag)]
    return [_cplx_list(x) for x in a]
