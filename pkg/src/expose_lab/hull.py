"""Maximum-principle evidence for a hull obstruction.

The domain ``{|z|^2 + |1/z|^2 + |w|^2 < 3}`` meets the line ``w = 0`` in the
annulus ``phi^{-1} < |z| < phi`` (``phi`` the golden ratio).  Any polynomial
``q(z, w)`` restricted to ``w = 0`` obeys the maximum principle on the disk
``|z| <= rho0``, so ``|q(p)|`` at the inner boundary point ``p = (phi^{-1}, 0)``
is dominated by the maximum of ``|q|`` on the circle ``|z| = rho0``.  The
run below samples random polynomials and reports the tightest ratio.  It is
evidence of the mechanism, not a proof of anything.
"""

from __future__ import annotations

import numpy as np


def annulus_radii() -> tuple[float, float]:
    """Roots of ``x + 1/x = 3`` in ``|z|^2``, returned as radii."""
    s5 = np.sqrt(5.0)
    return float(np.sqrt((3.0 - s5) / 2.0)), float(np.sqrt((3.0 + s5) / 2.0))


def monomials(degree: int) -> list[tuple[int, int]]:
    return [(i, j) for i in range(degree + 1) for j in range(degree + 1 - i)]


def random_polynomials(count: int, degree: int, seed: int) -> tuple[list[tuple[int, int]], np.ndarray]:
    """Complex Gaussian coefficients over monomials ``z^i w^j`` with ``i + j <= degree``."""
    mons = monomials(degree)
    rng = np.random.default_rng(seed)
    coeffs = rng.standard_normal((count, len(mons))) + 1j * rng.standard_normal((count, len(mons)))
    # a random total degree per polynomial, so low degrees are represented too
    degs = rng.integers(0, degree + 1, size=count)
    total = np.array([i + j for i, j in mons])
    coeffs[total[None, :] > degs[:, None]] = 0.0
    return mons, coeffs


def evaluate(mons, coeffs: np.ndarray, z, w) -> np.ndarray:
    """``q_k(z_m, w_m)`` as an array of shape ``(polys, points)``."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    w = np.broadcast_to(np.asarray(w, dtype=complex), z.shape)
    basis = np.stack([z**i * w**j for i, j in mons])
    return coeffs @ basis


def hull_evidence_demo(rho0: float = 1.0, count: int = 1000, degree: int = 8, seed: int = 0,
                       circle_points: int = 4096, extra=None) -> dict:
    """Compare ``|q(p)|`` with ``max_{|z| = rho0} |q(z, 0)|`` for random ``q``.

    ``extra`` may hold additional coefficient rows (over :func:`monomials`)
    checked alongside the random ones.
    """
    inner, outer = annulus_radii()
    if not inner < rho0 <= 1.0:
        raise ValueError(f"rho0 must lie in ({inner:.6f}, 1]")
    mons, coeffs = random_polynomials(count, degree, seed)
    if extra is not None:
        coeffs = np.vstack([np.asarray(extra, dtype=complex), coeffs])
    circle = rho0 * np.exp(2j * np.pi * np.arange(circle_points) / circle_points)
    on_circle = np.abs(evaluate(mons, coeffs, circle, 0.0)).max(axis=1)
    at_p = np.abs(evaluate(mons, coeffs, inner, 0.0))[:, 0]
    zero = on_circle == 0
    ratio = np.where(zero, np.where(at_p == 0, 1.0, np.inf), at_p / np.where(zero, 1.0, on_circle))
    violations = int(np.count_nonzero(ratio > 1.0 + 1e-12))
    return {
        "label": "evidence",
        "annulus": [inner, outer],
        "p": [inner, 0.0],
        "rho0": rho0,
        "count": int(coeffs.shape[0]),
        "degree": degree,
        "seed": seed,
        "circle_points": circle_points,
        "violations": violations,
        "tightest_ratio": float(ratio.max()),
    }
