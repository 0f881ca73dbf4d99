"""Real-valued Hermitian polynomials and their second-order jets.

A Hermitian polynomial is a finite sum ``sum c_ab z^a conj(z)^b`` whose term
list is closed under ``(a, b, c) -> (b, a, conj(c))``; such a sum is real at
every point.  All derivatives here are computed symbolically on the term
list, so jets are exact up to floating point evaluation.

Real coordinates are ordered ``(x_1, ..., x_n, y_1, ..., y_n)`` with
``z_k = x_k + i y_k``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

MAX_DEGREE = 8
PARTNER_TOL = 1e-12


@dataclass(frozen=True)
class Term:
    alpha: tuple[int, ...]
    beta: tuple[int, ...]
    coeff: complex


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    violations: tuple[str, ...] = ()

    def __bool__(self) -> bool:
        return self.ok


@dataclass(frozen=True)
class Jet2:
    """Value and first/second Wirtinger derivatives of a real function."""

    value: float
    dbar_grad: np.ndarray  # d rho / d z_i
    holo_hess: np.ndarray  # d^2 rho / d z_i d z_j
    levi: np.ndarray  # d^2 rho / d z_i d conj(z_j)
    real_hess: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.dbar_grad.shape[0]

    @property
    def real_grad(self) -> np.ndarray:
        """Gradient in ``(x, y)`` coordinates: ``(2 Re g, -2 Im g)``."""
        g = self.dbar_grad
        return np.concatenate([2.0 * g.real, -2.0 * g.imag])


def real_hessian(holo_hess: np.ndarray, levi: np.ndarray) -> np.ndarray:
    """Assemble the real Hessian from the holomorphic Hessian and Levi matrix."""
    H = np.asarray(holo_hess)
    L = np.asarray(levi)
    hxx = 2.0 * H.real + 2.0 * L.real
    hyy = -2.0 * H.real + 2.0 * L.real
    hxy = -2.0 * H.imag + 2.0 * L.imag
    out = np.block([[hxx, hxy], [hxy.T, hyy]])
    return 0.5 * (out + out.T)


def _falling(k: np.ndarray, d: int) -> np.ndarray:
    out = np.ones_like(k, dtype=float)
    for m in range(d):
        out = out * (k - m)
    return out


class HermitianPolynomial:
    """Polynomial ``sum c z^alpha conj(z)^beta`` in ``n`` complex variables.

    The constructor keeps the term list as given (so that :func:`validate`
    can report on raw input) but rejects malformed multi-indices.  Use
    :meth:`from_terms` to obtain the canonical form.
    """

    def __init__(self, n: int, terms: Iterable[Term | tuple]):
        if int(n) < 1:
            raise ValueError("dimension n must be a positive integer")
        self.n = int(n)
        parsed = []
        for idx, t in enumerate(terms):
            if not isinstance(t, Term):
                a, b, c = t
                t = Term(tuple(int(v) for v in a), tuple(int(v) for v in b), complex(c))
            if len(t.alpha) != self.n or len(t.beta) != self.n:
                raise ValueError(f"term {idx}: multi-index length differs from n={self.n}")
            if min(t.alpha + t.beta) < 0:
                raise ValueError(f"term {idx}: negative exponent")
            if max(t.alpha + t.beta) > MAX_DEGREE:
                raise ValueError(f"term {idx}: exponent exceeds the per-variable cap {MAX_DEGREE}")
            parsed.append(t)
        self.terms: tuple[Term, ...] = tuple(parsed)
        if parsed:
            self._alpha = np.array([t.alpha for t in parsed], dtype=int)
            self._beta = np.array([t.beta for t in parsed], dtype=int)
            self._coeff = np.array([t.coeff for t in parsed], dtype=complex)
        else:
            self._alpha = np.zeros((0, self.n), dtype=int)
            self._beta = np.zeros((0, self.n), dtype=int)
            self._coeff = np.zeros(0, dtype=complex)

    # construction -------------------------------------------------------
    @classmethod
    def from_terms(cls, n: int, terms: Iterable[Term | tuple]) -> "HermitianPolynomial":
        return cls(n, terms).canonical()

    def canonical(self) -> "HermitianPolynomial":
        """Merge duplicate monomials, drop zeros and sort lexicographically."""
        acc: dict[tuple, complex] = {}
        for t in self.terms:
            key = (t.alpha, t.beta)
            acc[key] = acc.get(key, 0j) + t.coeff
        keep = [Term(a, b, c) for (a, b), c in sorted(acc.items()) if c != 0]
        return HermitianPolynomial(self.n, keep)

    @classmethod
    def from_dict(cls, data: dict) -> "HermitianPolynomial":
        n = int(data["n"])
        terms = []
        for idx, t in enumerate(data["terms"]):
            try:
                c = complex(float(t.get("re", 0.0)), float(t.get("im", 0.0)))
                terms.append(Term(tuple(t["alpha"]), tuple(t["beta"]), c))
            except (KeyError, TypeError) as exc:
                raise ValueError(f"term {idx}: malformed entry ({exc})") from exc
        return cls(n, terms)

    @classmethod
    def load(cls, path: str | Path) -> "HermitianPolynomial":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "terms": [
                {"alpha": list(t.alpha), "beta": list(t.beta), "re": t.coeff.real, "im": t.coeff.imag}
                for t in self.terms
            ],
        }

    def __repr__(self) -> str:
        return f"HermitianPolynomial(n={self.n}, terms={len(self.terms)})"

    def __eq__(self, other: object) -> bool:
        return isinstance(other, HermitianPolynomial) and self.n == other.n and self.terms == other.terms

    def __hash__(self) -> int:
        return hash((self.n, self.terms))

    # algebra --------------------------------------------------------------
    def __add__(self, other: "HermitianPolynomial") -> "HermitianPolynomial":
        if other.n != self.n:
            raise ValueError("dimension mismatch")
        return HermitianPolynomial.from_terms(self.n, self.terms + other.terms)

    def scaled(self, factor: float) -> "HermitianPolynomial":
        return HermitianPolynomial.from_terms(
            self.n, [Term(t.alpha, t.beta, t.coeff * factor) for t in self.terms]
        )

    def substitute_affine(self, A: np.ndarray, b) -> "HermitianPolynomial":
        """Exact expansion of ``w -> rho(A w + b)`` for complex ``A`` and ``b``."""
        A = np.asarray(A, dtype=complex)
        b = np.asarray(b, dtype=complex)
        n_in = A.shape[1]
        if A.shape[0] != self.n or b.shape != (self.n,):
            raise ValueError("affine substitution has the wrong shape")
        zero = (0,) * (2 * n_in)

        def unit(k: int) -> tuple:
            return tuple(int(i == k) for i in range(2 * n_in))

        lin = []
        for i in range(self.n):
            d = {zero: b[i]} if b[i] != 0 else {}
            for k in range(n_in):
                if A[i, k] != 0:
                    d[unit(k)] = d.get(unit(k), 0) + A[i, k]
            lin.append(d)
        clin = [{k[n_in:] + k[:n_in]: np.conj(c) for k, c in d.items()} for d in lin]

        def powers(d: dict) -> list[dict]:
            out = [{zero: 1.0 + 0j}]
            for _ in range(MAX_DEGREE):
                out.append(_pmul(out[-1], d))
            return out

        zp = [powers(d) for d in lin]
        cp = [powers(d) for d in clin]
        total: dict[tuple, complex] = {}
        for t in self.terms:
            acc = {zero: t.coeff}
            for i in range(self.n):
                if t.alpha[i]:
                    acc = _pmul(acc, zp[i][t.alpha[i]])
                if t.beta[i]:
                    acc = _pmul(acc, cp[i][t.beta[i]])
            for k, c in acc.items():
                total[k] = total.get(k, 0) + c
        terms = [Term(k[:n_in], k[n_in:], complex(c)) for k, c in total.items() if c != 0]
        out = HermitianPolynomial.from_terms(n_in, terms)
        # restore exact Hermitian pairing that rounding may have broken
        return out.hermitized()

    def hermitized(self) -> "HermitianPolynomial":
        """Average each coefficient with the conjugate of its partner."""
        acc: dict[tuple, complex] = {}
        for t in self.terms:
            acc[(t.alpha, t.beta)] = acc.get((t.alpha, t.beta), 0) + 0.5 * t.coeff
            acc[(t.beta, t.alpha)] = acc.get((t.beta, t.alpha), 0) + 0.5 * np.conj(t.coeff)
        return HermitianPolynomial.from_terms(self.n, [Term(a, b, c) for (a, b), c in acc.items()])

    def degree(self) -> int:
        if not self.terms:
            return 0
        return int((self._alpha.sum(axis=1) + self._beta.sum(axis=1)).max())

    # evaluation -------------------------------------------------------------
    def _points(self, points) -> tuple[np.ndarray, tuple]:
        z = np.asarray(points, dtype=complex)
        if z.shape[-1] != self.n:
            raise ValueError(f"point dimension {z.shape[-1]} does not match n={self.n}")
        shape = z.shape[:-1]
        return z.reshape(-1, self.n), shape

    @staticmethod
    def _monomials(z: np.ndarray, alpha: np.ndarray, beta: np.ndarray) -> np.ndarray:
        """Matrix ``(P, T)`` of ``z^alpha conj(z)^beta``."""
        P, n = z.shape
        T = alpha.shape[0]
        out = np.ones((P, T), dtype=complex)
        if T == 0:
            return out
        top = int(max(alpha.max(), beta.max(), 0))
        pw = np.ones((top + 1, P, n), dtype=complex)
        for k in range(1, top + 1):
            pw[k] = pw[k - 1] * z
        cpw = pw.conj()
        for i in range(n):
            out *= pw[alpha[:, i], :, i].T * cpw[beta[:, i], :, i].T
        return out

    def _derived(self, da: Sequence[int], db: Sequence[int]):
        da = np.asarray(da, dtype=int)
        db = np.asarray(db, dtype=int)
        factor = np.ones(len(self.terms))
        for i in range(self.n):
            factor = factor * _falling(self._alpha[:, i], da[i]) * _falling(self._beta[:, i], db[i])
        keep = factor != 0
        return (
            self._coeff[keep] * factor[keep],
            self._alpha[keep] - da,
            self._beta[keep] - db,
        )

    def _sum(self, z: np.ndarray, coeff, alpha, beta) -> np.ndarray:
        if len(coeff) == 0:
            return np.zeros(z.shape[0], dtype=complex)
        return self._monomials(z, alpha, beta) @ coeff

    def eval_complex(self, points) -> np.ndarray:
        z, shape = self._points(points)
        return self._sum(z, self._coeff, self._alpha, self._beta).reshape(shape)

    def eval(self, points) -> np.ndarray | float:
        """Real value at one point or an array of points (last axis = n)."""
        out = self.eval_complex(points).real
        return float(out) if out.ndim == 0 else out

    def dbar_grad(self, points) -> np.ndarray:
        """Wirtinger gradient ``d rho / d z_i`` at each point, shape ``(..., n)``."""
        z, shape = self._points(points)
        cols = []
        for i in range(self.n):
            e = np.zeros(self.n, dtype=int)
            e[i] = 1
            cols.append(self._sum(z, *self._derived(e, np.zeros(self.n, dtype=int))))
        return np.stack(cols, axis=-1).reshape(shape + (self.n,))

    def jet_arrays(self, points):
        """Vectorised jet: value (P,), gradient (P,n), holo Hessian and Levi (P,n,n)."""
        z, shape = self._points(points)
        n = self.n
        zero = np.zeros(n, dtype=int)
        P = z.shape[0]
        value = self._sum(z, self._coeff, self._alpha, self._beta).real
        grad = np.zeros((P, n), dtype=complex)
        H = np.zeros((P, n, n), dtype=complex)
        L = np.zeros((P, n, n), dtype=complex)
        for i in range(n):
            ei = np.eye(n, dtype=int)[i]
            grad[:, i] = self._sum(z, *self._derived(ei, zero))
            for j in range(n):
                ej = np.eye(n, dtype=int)[j]
                if j >= i:
                    H[:, i, j] = self._sum(z, *self._derived(ei + ej, zero))
                    H[:, j, i] = H[:, i, j]
                L[:, i, j] = self._sum(z, *self._derived(ei, ej))
        # exact symmetries of the Hermitian structure
        L = 0.5 * (L + np.conj(np.swapaxes(L, 1, 2)))
        return (
            value.reshape(shape),
            grad.reshape(shape + (n,)),
            H.reshape(shape + (n, n)),
            L.reshape(shape + (n, n)),
        )

    def jet(self, point) -> Jet2:
        p = np.asarray(point, dtype=complex)
        if p.ndim != 1:
            raise ValueError("jet expects a single point; use jet_arrays for batches")
        value, grad, H, L = self.jet_arrays(p)
        return Jet2(float(value), grad, H, L, real_hessian(H, L))


def _pmul(p: dict, q: dict) -> dict:
    out: dict[tuple, complex] = {}
    for ka, ca in p.items():
        for kb, cb in q.items():
            k = tuple(x + y for x, y in zip(ka, kb))
            out[k] = out.get(k, 0) + ca * cb
    return out


def eval_jet(poly: HermitianPolynomial, point) -> Jet2:
    """Exact second-order jet of ``poly`` at ``point``."""
    return poly.jet(point)


def validate(poly: HermitianPolynomial) -> ValidationReport:
    """Check Hermitian symmetry and canonical form of the raw term list."""
    violations: list[str] = []
    terms = poly.terms
    index: dict[tuple, list[int]] = {}
    for k, t in enumerate(terms):
        index.setdefault((t.alpha, t.beta), []).append(k)
    for key, ks in index.items():
        if len(ks) > 1:
            violations.append(f"terms {ks}: duplicate monomial alpha={list(key[0])} beta={list(key[1])}")
    for k, t in enumerate(terms):
        if t.coeff == 0:
            violations.append(f"term {k}: zero coefficient")
        if k > 0 and (terms[k - 1].alpha, terms[k - 1].beta) > (t.alpha, t.beta):
            violations.append(f"terms {k - 1},{k}: not in canonical lexicographic order")
    for k, t in enumerate(terms):
        partners = index.get((t.beta, t.alpha), [])
        if not partners:
            violations.append(
                f"term {k}: missing Hermitian partner for alpha={list(t.alpha)} beta={list(t.beta)}"
            )
            continue
        j = partners[0]
        want = np.conj(t.coeff)
        got = terms[j].coeff
        if abs(got - want) > PARTNER_TOL * max(1.0, abs(want)):
            if j == k:
                violations.append(f"term {k}: diagonal monomial has non-real coefficient {t.coeff}")
            elif k < j:
                violations.append(f"terms {k},{j}: partner coefficients are not conjugate")
    return ValidationReport(not violations, tuple(violations))


def quadratic_from_jet(value: float, grad, H, L) -> HermitianPolynomial:
    """Hermitian polynomial equal to the second-order Taylor expansion at 0.

    ``value + 2 Re(grad . z) + Re(z^T H z) + z^T L conj(z)``.
    """
    grad = np.asarray(grad, dtype=complex)
    H = np.asarray(H, dtype=complex)
    L = np.asarray(L, dtype=complex)
    n = grad.shape[0]
    zero = (0,) * n
    e = [tuple(int(i == k) for i in range(n)) for k in range(n)]
    terms: list[Term] = []
    if value != 0:
        terms.append(Term(zero, zero, complex(value)))
    for i in range(n):
        terms.append(Term(e[i], zero, grad[i]))
        terms.append(Term(zero, e[i], np.conj(grad[i])))
    for i in range(n):
        for j in range(n):
            a = tuple(x + y for x, y in zip(e[i], e[j]))
            terms.append(Term(a, zero, 0.5 * H[i, j]))
            terms.append(Term(zero, a, 0.5 * np.conj(H[i, j])))
            terms.append(Term(e[i], e[j], L[i, j]))
    return HermitianPolynomial.from_terms(n, terms)


def norm_squared(n: int) -> HermitianPolynomial:
    """``|z_1|^2 + ... + |z_n|^2``."""
    terms = []
    for k in range(n):
        e = tuple(int(i == k) for i in range(n))
        terms.append(Term(e, e, 1.0))
    return HermitianPolynomial.from_terms(n, terms)


def constant(n: int, c: float) -> HermitianPolynomial:
    return HermitianPolynomial.from_terms(n, [Term((0,) * n, (0,) * n, complex(c))])


def re_monomial(n: int, alpha: Sequence[int], c: complex = 1.0) -> HermitianPolynomial:
    """``Re(c z^alpha)`` as a Hermitian polynomial."""
    zero = (0,) * n
    a = tuple(int(v) for v in alpha)
    return HermitianPolynomial.from_terms(n, [Term(a, zero, 0.5 * c), Term(zero, a, 0.5 * np.conj(c))])


def unit_ball(n: int) -> HermitianPolynomial:
    """Defining polynomial ``|z|^2 - 1`` of the unit ball."""
    return norm_squared(n) + constant(n, -1.0)
