"""Sparse symmetric tensors stored in monomial-coefficient form.

An order-m, dimension-n symmetric tensor is identified with its homogeneous
degree-m polynomial.  We store the polynomial: a map from canonical
multi-indices (nondecreasing m-tuples over 1..n) to the coefficient of the
corresponding monomial.  The classical symmetric entry a_(i1..im) relates to
the monomial coefficient through the multinomial count of the index pattern,

    coeff(alpha) = (m! / prod_j mult_j(alpha)!) * a_alpha,

so the two views convert exactly for rational data.  The monomial view makes
polynomial-level operations (block splitting, even-order lifting, evaluation)
plain dictionary arithmetic, and dense storage is never materialized.
"""
from __future__ import annotations

import json
import math
from collections import Counter
from fractions import Fraction
from typing import Iterable, Mapping

import numpy as np

from .errors import DimMismatch, DuplicateEntry, InvalidIndex, OrderMismatch

__all__ = [
    "canonicalize",
    "multinomial",
    "SymmetricTensor",
    "tensor_to_json",
    "tensor_from_json",
    "save_tensor",
    "load_tensor",
]


def canonicalize(indices: Iterable[int], dim: int) -> tuple[int, ...]:
    """Sort a multi-index into canonical (nondecreasing) form.

    Raises InvalidIndex if any coordinate falls outside 1..dim.
    """
    idx = tuple(sorted(int(i) for i in indices))
    if idx and (idx[0] < 1 or idx[-1] > dim):
        raise InvalidIndex(f"index {idx} has coordinates outside [1, {dim}]")
    return idx


def multinomial(index: tuple[int, ...]) -> int:
    """Number of distinct orderings of a multi-index: m! / prod(mult_j!)."""
    out = math.factorial(len(index))
    for mult in Counter(index).values():
        out //= math.factorial(mult)
    return out


def _as_float(value) -> float:
    """Accept ints, floats and exact rational strings such as '-1/6'."""
    if isinstance(value, str):
        return float(Fraction(value))
    return float(value)


class SymmetricTensor:
    """Sparse symmetric tensor; immutable after construction.

    ``terms`` maps canonical multi-indices to monomial coefficients, i.e. the
    coefficient of x^alpha in the associated polynomial.  Use
    :meth:`from_entries` when the data is given as symmetric entries.
    """

    __slots__ = ("order", "dim", "_terms", "_idx_mat", "_coeffs")

    def __init__(self, order: int, dim: int, terms: Mapping[tuple[int, ...], float] | None = None):
        if order < 1 or dim < 1:
            raise OrderMismatch(f"order and dim must be positive, got m={order}, n={dim}")
        self.order = int(order)
        self.dim = int(dim)
        clean: dict[tuple[int, ...], float] = {}
        if terms:
            for idx, val in (terms.items() if isinstance(terms, Mapping) else terms):
                idx = tuple(idx)
                if len(idx) != self.order:
                    raise OrderMismatch(f"multi-index {idx} has length {len(idx)}, expected {self.order}")
                if list(idx) != sorted(idx):
                    raise InvalidIndex(f"multi-index {idx} is not in canonical order")
                if idx[0] < 1 or idx[-1] > self.dim:
                    raise InvalidIndex(f"index {idx} outside [1, {self.dim}]")
                val = float(val)
                if val != 0.0:
                    clean[idx] = clean.get(idx, 0.0) + val
        self._terms = {k: clean[k] for k in sorted(clean) if clean[k] != 0.0}
        self._idx_mat = None
        self._coeffs = None

    # ------------------------------------------------------------------
    # construction
    # ------------------------------------------------------------------

    @classmethod
    def from_monomials(cls, order, dim, terms) -> "SymmetricTensor":
        """Build from (canonical multi-index, monomial coefficient) pairs."""
        return cls(order, dim, dict(terms))

    @classmethod
    def from_entries(cls, order, dim, entries) -> "SymmetricTensor":
        """Build from (canonical multi-index, symmetric entry) pairs.

        Each entry value a_alpha is scaled by the multinomial count of its
        index pattern.  Duplicate canonical indices are rejected.
        """
        seen: set[tuple[int, ...]] = set()
        terms: dict[tuple[int, ...], float] = {}
        for idx, val in (entries.items() if isinstance(entries, Mapping) else entries):
            idx = tuple(int(i) for i in idx)
            if len(idx) != order:
                raise OrderMismatch(f"multi-index {idx} has length {len(idx)}, expected {order}")
            if list(idx) != sorted(idx):
                raise InvalidIndex(f"multi-index {idx} is not in canonical order")
            if idx in seen:
                raise DuplicateEntry(f"duplicate canonical index {idx}")
            seen.add(idx)
            terms[idx] = multinomial(idx) * _as_float(val)
        return cls(order, dim, terms)

    @classmethod
    def zero(cls, order, dim) -> "SymmetricTensor":
        return cls(order, dim, {})

    @classmethod
    def identity(cls, order, dim) -> "SymmetricTensor":
        """Diagonal tensor with unit entries: polynomial sum_i x_i^m."""
        return cls(order, dim, {(i,) * order: 1.0 for i in range(1, dim + 1)})

    @classmethod
    def from_matrix(cls, mat) -> "SymmetricTensor":
        """Order-2 tensor from a symmetric matrix (x^T M x)."""
        a = np.asarray(mat, dtype=float)
        n = a.shape[0]
        if a.shape != (n, n):
            raise DimMismatch(f"matrix must be square, got {a.shape}")
        terms = {}
        for i in range(1, n + 1):
            for j in range(i, n + 1):
                v = a[i - 1, j - 1] if i == j else a[i - 1, j - 1] + a[j - 1, i - 1]
                if v != 0.0:
                    terms[(i, j)] = v
        return cls(2, n, terms)

    # ------------------------------------------------------------------
    # views
    # ------------------------------------------------------------------

    @property
    def terms(self) -> dict[tuple[int, ...], float]:
        """Monomial-coefficient map (copy; keys canonical, values nonzero)."""
        return dict(self._terms)

    @property
    def nnz(self) -> int:
        return len(self._terms)

    def coeff(self, indices) -> float:
        """Monomial coefficient of a (not necessarily sorted) multi-index."""
        return self._terms.get(canonicalize(indices, self.dim), 0.0)

    def entry(self, indices) -> float:
        """Symmetric entry a_alpha = coeff(alpha) / multinomial(alpha)."""
        idx = canonicalize(indices, self.dim)
        if len(idx) != self.order:
            raise OrderMismatch(f"multi-index {idx} has length {len(idx)}, expected {self.order}")
        return self._terms.get(idx, 0.0) / multinomial(idx)

    def to_entries(self) -> dict[tuple[int, ...], float]:
        """Entry-form view: canonical multi-index -> symmetric entry."""
        return {idx: c / multinomial(idx) for idx, c in self._terms.items()}

    def diagonal_coefficient(self, i: int) -> float:
        """Coefficient of x_i^m (equals the diagonal entry a_(i..i))."""
        return self._terms.get((i,) * self.order, 0.0)

    def mixed_terms(self) -> dict[tuple[int, ...], float]:
        """Off-diagonal monomials only."""
        return {idx: c for idx, c in self._terms.items() if len(set(idx)) > 1}

    def support(self) -> set[int]:
        """Indices appearing in some nonzero monomial."""
        out: set[int] = set()
        for idx in self._terms:
            out.update(idx)
        return out

    # ------------------------------------------------------------------
    # algebra
    # ------------------------------------------------------------------

    def _check_compatible(self, other: "SymmetricTensor"):
        if self.order != other.order:
            raise OrderMismatch(f"orders differ: {self.order} vs {other.order}")
        if self.dim != other.dim:
            raise DimMismatch(f"dims differ: {self.dim} vs {other.dim}")

    def __add__(self, other: "SymmetricTensor") -> "SymmetricTensor":
        self._check_compatible(other)
        terms = dict(self._terms)
        for idx, c in other._terms.items():
            terms[idx] = terms.get(idx, 0.0) + c
        return SymmetricTensor(self.order, self.dim, terms)

    def __sub__(self, other: "SymmetricTensor") -> "SymmetricTensor":
        return self + (-other)

    def __neg__(self) -> "SymmetricTensor":
        return SymmetricTensor(self.order, self.dim, {k: -v for k, v in self._terms.items()})

    def __mul__(self, scalar: float) -> "SymmetricTensor":
        s = float(scalar)
        return SymmetricTensor(self.order, self.dim, {k: s * v for k, v in self._terms.items()})

    __rmul__ = __mul__

    def add_scaled_identity(self, c: float) -> "SymmetricTensor":
        """Shift every diagonal monomial coefficient by c."""
        c = float(c)
        if c == 0.0:
            return self
        terms = dict(self._terms)
        for i in range(1, self.dim + 1):
            key = (i,) * self.order
            terms[key] = terms.get(key, 0.0) + c
        return SymmetricTensor(self.order, self.dim, terms)

    def allclose(self, other: "SymmetricTensor", tol: float = 1e-12) -> bool:
        self._check_compatible(other)
        keys = set(self._terms) | set(other._terms)
        return all(abs(self._terms.get(k, 0.0) - other._terms.get(k, 0.0)) <= tol for k in keys)

    # ------------------------------------------------------------------
    # evaluation
    # ------------------------------------------------------------------

    def _arrays(self):
        if self._idx_mat is None:
            if self._terms:
                idx = np.array(list(self._terms.keys()), dtype=np.int64) - 1
                coeffs = np.array(list(self._terms.values()), dtype=float)
            else:
                idx = np.zeros((0, self.order), dtype=np.int64)
                coeffs = np.zeros(0)
            self._idx_mat, self._coeffs = idx, coeffs
        return self._idx_mat, self._coeffs

    def _check_vector(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise DimMismatch(f"expected vector of length {self.dim}, got shape {x.shape}")
        return x

    def evaluate(self, x) -> float:
        """Value of the associated polynomial at x."""
        x = self._check_vector(x)
        idx, coeffs = self._arrays()
        if not len(coeffs):
            return 0.0
        return float(coeffs @ np.prod(x[idx], axis=1))

    def apply(self, x) -> np.ndarray:
        """Vector with components sum_{i2..im} a_(i,i2..im) x_{i2}..x_{im}.

        Computed as grad(p)/m from the monomial form; satisfies
        x . apply(x) == evaluate(x).
        """
        x = self._check_vector(x)
        idx, coeffs = self._arrays()
        y = np.zeros(self.dim)
        if not len(coeffs):
            return y
        vals = x[idx]                                   # (nnz, m)
        m = self.order
        # products over all positions except one, via prefix/suffix cumprods
        left = np.ones_like(vals)
        right = np.ones_like(vals)
        if m > 1:
            left[:, 1:] = np.cumprod(vals[:, :-1], axis=1)
            right[:, :-1] = np.cumprod(vals[:, :0:-1], axis=1)[:, ::-1]
        contrib = (coeffs / m)[:, None] * left * right  # (nnz, m)
        np.add.at(y, idx.ravel(), contrib.ravel())
        return y

    # ------------------------------------------------------------------
    # serialization
    # ------------------------------------------------------------------

    def to_json_dict(self) -> dict:
        return {
            "order": self.order,
            "dim": self.dim,
            "form": "monomial",
            "terms": [{"idx": list(k), "val": v} for k, v in self._terms.items()],
        }

    def __repr__(self):
        return f"SymmetricTensor(order={self.order}, dim={self.dim}, nnz={self.nnz})"


def tensor_to_json(t: SymmetricTensor) -> str:
    return json.dumps(t.to_json_dict(), indent=1)


def tensor_from_json(text: str | dict) -> SymmetricTensor:
    """Parse the tensor interchange format.

    ``{"order": m, "dim": n, "form": "monomial"|"entries", "terms":
    [{"idx": [...], "val": c}, ...]}`` with 1-based canonical indices.
    Values may be numbers or exact rational strings ("-1/6").
    """
    doc = json.loads(text) if isinstance(text, str) else text
    try:
        order, dim, form = doc["order"], doc["dim"], doc.get("form", "monomial")
        raw = [(tuple(item["idx"]), item["val"]) for item in doc.get("terms", [])]
    except (KeyError, TypeError) as exc:
        raise InvalidIndex(f"malformed tensor document: {exc}") from exc
    if form == "monomial":
        pairs = []
        for idx, val in raw:
            if list(idx) != sorted(idx):
                raise InvalidIndex(f"multi-index {idx} is not in canonical order")
            pairs.append((idx, _as_float(val)))
        return SymmetricTensor(order, dim, dict(pairs))
    if form == "entries":
        return SymmetricTensor.from_entries(order, dim, raw)
    raise InvalidIndex(f"unknown tensor form {form!r}")


def save_tensor(t: SymmetricTensor, path) -> None:
    with open(path, "w") as fh:
        fh.write(tensor_to_json(t))
        fh.write("\n")


def load_tensor(path) -> SymmetricTensor:
    with open(path) as fh:
        return tensor_from_json(fh.read())
