"""Reference computations independent of the SOS machinery.

These provide the cross-checks used throughout the test-suite: a power-type
iteration for nonnegative tensors with min/max Rayleigh-ratio brackets, a
multi-start projected gradient ascent giving certified lower bounds on the
maximum H-eigenvalue, and the scalar root characterizing the hyper-star
Laplacian spectrum.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NegativeCoefficient, OddOrder
from .tensor import SymmetricTensor

__all__ = [
    "NqzResult",
    "nqz",
    "AscentResult",
    "projected_ascent",
    "hyper_star_lambda",
]


@dataclass
class NqzResult:
    lam: float
    lower: float
    upper: float
    vector: np.ndarray
    iterations: int
    converged: bool


def nqz(tensor: SymmetricTensor, tol: float = 1e-10, max_iter: int = 10000,
        start=None) -> NqzResult:
    """Power-type iteration for the maximum H-eigenvalue of a nonnegative tensor.

    Iterates y = A x^{m-1}, brackets the eigenvalue by min and max of
    y_i / x_i^{m-1}, and renormalizes x <- y^{1/(m-1)}.  Stops when the
    bracket width falls below tol.  The iteration is not convergent for
    every nonnegative tensor; non-convergence is reported in the result,
    not raised.
    """
    if any(c < 0 for c in tensor.terms.values()):
        raise NegativeCoefficient("power iteration requires a nonnegative tensor")
    m, n = tensor.order, tensor.dim
    x = np.ones(n) if start is None else np.asarray(start, dtype=float).copy()
    if np.any(x <= 0):
        raise NegativeCoefficient("start vector must be strictly positive")
    x /= np.max(x)
    lower, upper = -np.inf, np.inf
    tiny = np.finfo(float).tiny
    for it in range(1, max_iter + 1):
        y = tensor.apply(x)
        ratios = y / np.maximum(x, tiny) ** (m - 1)
        lower, upper = float(np.min(ratios)), float(np.max(ratios))
        if upper - lower <= tol:
            return NqzResult(0.5 * (lower + upper), lower, upper, x, it, True)
        x = np.maximum(y, 0.0) ** (1.0 / (m - 1))
        x /= np.max(x)
    return NqzResult(0.5 * (lower + upper), lower, upper, x, max_iter, False)


@dataclass
class AscentResult:
    lam: float
    vector: np.ndarray
    starts: int


def projected_ascent(tensor: SymmetricTensor, starts: int = 50, seed: int = 42,
                     max_iter: int = 500, tol: float = 1e-12) -> AscentResult:
    """Multi-start gradient ascent of A x^m on the unit m-norm sphere.

    Returns the best Rayleigh value found.  This is a certified lower bound
    on the maximum H-eigenvalue (each iterate is feasible), never an upper
    bound.  Deterministic for a fixed seed; steps use backtracking from 1.
    """
    m, n = tensor.order, tensor.dim
    if m % 2:
        raise OddOrder(f"order {m} is odd")
    rng = np.random.default_rng(seed)

    def norm_m(v):
        return np.sum(np.abs(v) ** m) ** (1.0 / m)

    best_val = -np.inf
    best_x = np.zeros(n)
    for _ in range(starts):
        x = rng.standard_normal(n)
        x /= norm_m(x)
        val = tensor.evaluate(x)
        for _ in range(max_iter):
            grad = m * tensor.apply(x)
            step = 1.0
            improved = False
            gnorm = np.linalg.norm(grad)
            if gnorm == 0.0:
                break
            while step > 1e-14:
                cand = x + step * grad / gnorm
                nm = norm_m(cand)
                if nm > 0:
                    cand = cand / nm
                    cand_val = tensor.evaluate(cand)
                    if cand_val > val + 1e-15:
                        x, val = cand, cand_val
                        improved = True
                        break
                step *= 0.5
            if not improved:
                break
            if step < tol:
                break
        if val > best_val:
            best_val, best_x = val, x
    return AscentResult(float(best_val), best_x, starts)


def hyper_star_lambda(m: int, k: int) -> float:
    """Maximum H-eigenvalue of the Laplacian of a k-edge, m-uniform hyper-star.

    The unique root of (1-x)^(m-1) (x-k) + k in the open interval (k, k+1),
    found by bisection and polished by Newton to 1e-12.
    """
    if m < 2 or k < 1:
        raise DimensionMismatch(f"need m >= 2 and k >= 1, got m={m}, k={k}")

    def f(x):
        return (1.0 - x) ** (m - 1) * (x - k) + k

    def fprime(x):
        return (-(m - 1)) * (1.0 - x) ** (m - 2) * (x - k) + (1.0 - x) ** (m - 1)

    lo, hi = float(k), float(k + 1)
    flo = f(lo)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0.0:
            lo = hi = mid
            break
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
        if hi - lo < 1e-13:
            break
    x = 0.5 * (lo + hi)
    for _ in range(50):
        fp = fprime(x)
        if fp == 0:
            break
        step = f(x) / fp
        x -= step
        x = min(max(x, float(k)), float(k + 1))
        if abs(step) < 1e-14:
            break
    return float(x)
