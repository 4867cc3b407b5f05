"""Built-in benchmark families and random structured instances."""
from __future__ import annotations

import numpy as np

from .errors import DimensionMismatch
from .tensor import SymmetricTensor
from .wstructure import WDecomposition, validate

__all__ = [
    "example31_tensor",
    "example31_decomposition",
    "random_w_tensor",
]


def example31_tensor(n: int) -> SymmetricTensor:
    """Order-4 family with diagonal n and one multilinear term per group of
    four consecutive indices (entry -1/6, monomial coefficient -4).

    Its maximum H-eigenvalue is n + 1 in closed form, which makes the family
    the standard correctness anchor at any size.  Requires n divisible by 4.
    """
    if n % 4 or n < 4:
        raise DimensionMismatch(f"n must be a positive multiple of 4, got {n}")
    terms: dict[tuple[int, ...], float] = {(i,) * 4: float(n) for i in range(1, n + 1)}
    for l in range(1, n // 4 + 1):
        terms[(4 * l - 3, 4 * l - 2, 4 * l - 1, 4 * l)] = -4.0
    return SymmetricTensor(4, n, terms)


def example31_decomposition(n: int) -> WDecomposition:
    """The natural disjoint blocks {4l-3..4l} of :func:`example31_tensor`."""
    tensor = example31_tensor(n)
    gamma = [tuple(range(4 * l - 3, 4 * l + 1)) for l in range(1, n // 4 + 1)]
    subtensors = [
        SymmetricTensor(4, 4, {
            (1, 1, 1, 1): float(n), (2, 2, 2, 2): float(n),
            (3, 3, 3, 3): float(n), (4, 4, 4, 4): float(n),
            (1, 2, 3, 4): -4.0,
        })
        for _ in gamma
    ]
    return validate(tensor, gamma, subtensors)


def random_w_tensor(seed, m: int = 4, n: int = 10, overlap_prob: float = 0.5):
    """Random validated block-structured tensor for agreement tests.

    Builds a chain of blocks over 1..n, consecutive blocks overlapping in at
    most one index, each block either carrying a single mixed monomial of
    arbitrary sign or a handful of nonnegative mixed monomials.  Returns the
    assembled tensor together with its validated decomposition.
    """
    rng = np.random.default_rng(seed) if not isinstance(seed, np.random.Generator) else seed
    if n < 2:
        raise DimensionMismatch(f"need n >= 2, got {n}")

    spans = []
    start = 1
    while True:
        size = int(rng.integers(2, 5))
        end = min(start + size - 1, n)
        if n - end == 1:
            end = n
        spans.append((start, end))
        if end == n:
            break
        start = end if rng.random() < overlap_prob else end + 1

    gamma = [tuple(range(a, b + 1)) for a, b in spans]
    subtensors = []
    for g in gamma:
        k = len(g)
        terms: dict[tuple[int, ...], float] = {
            (j,) * m: float(rng.uniform(0.5, 3.0)) for j in range(1, k + 1)
        }
        if rng.random() < 0.5:
            while True:
                idx = tuple(sorted(rng.integers(1, k + 1, size=m)))
                if len(set(idx)) > 1:
                    break
            terms[idx] = float(rng.uniform(-3.0, 3.0))
        else:
            for _ in range(int(rng.integers(1, 4))):
                idx = tuple(sorted(rng.integers(1, k + 1, size=m)))
                if len(set(idx)) > 1:
                    terms[idx] = terms.get(idx, 0.0) + float(rng.uniform(0.0, 2.0))
        subtensors.append(SymmetricTensor(m, k, terms))

    total: dict[tuple[int, ...], float] = {}
    for g, sub in zip(gamma, subtensors):
        for idx, c in sub.terms.items():
            key = tuple(sorted(g[j - 1] for j in idx))
            total[key] = total.get(key, 0.0) + c
    tensor = SymmetricTensor(m, n, total)
    return tensor, validate(tensor, gamma, subtensors)
