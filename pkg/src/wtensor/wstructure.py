"""Block decompositions of symmetric tensors with controlled overlap.

A decomposition splits the polynomial A x^m into block polynomials over index
sets Gamma_1..Gamma_s that (in some processing order) overlap the union of
their predecessors in at most one index, sum exactly to A x^m, and whose
blocks each have either a single mixed monomial or only nonnegative
off-diagonal coefficients.  Tensors admitting such a split get their maximum
H-eigenvalue from a block-diagonal SDP instead of one large Gram matrix.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .errors import (
    BlockNotW,
    CoverageGap,
    InvalidDecomposition,
    OverlapTooLarge,
    SumMismatch,
    WeightSumMismatch,
)
from .tensor import SymmetricTensor

__all__ = [
    "SINGLE_MIXED_TERM",
    "NONNEG_OFF_DIAGONAL",
    "BlockKind",
    "WDecomposition",
    "classify_block",
    "validate",
    "detect",
    "reallocate_diagonal",
    "decomposition_from_json",
    "decomposition_to_json",
]

SINGLE_MIXED_TERM = "single_mixed_term"
NONNEG_OFF_DIAGONAL = "nonneg_off_diagonal"

COEFF_TOL = 1e-12   # float comparison tolerance for the exact-sum condition


@dataclass(frozen=True)
class BlockKind:
    """Sign structure of one block.

    ``single_mixed_term`` carries the unique off-diagonal canonical monomial
    (in global indices, None when the block is purely diagonal);
    ``nonneg_off_diagonal`` means every off-diagonal coefficient is >= 0.
    """
    kind: str
    mixed_index: tuple[int, ...] | None = None


@dataclass(frozen=True)
class WDecomposition:
    """Validated block decomposition of a symmetric tensor.

    gamma holds the index sets as sorted tuples of global indices; the
    subtensor for gamma[l] lives on local indices 1..len(gamma[l]) mapping
    onto sorted(gamma[l]).  ``order_used`` records the block processing order
    under which the chain-overlap condition was verified.
    """
    order: int
    dim: int
    gamma: tuple[tuple[int, ...], ...]
    subtensors: tuple[SymmetricTensor, ...]
    kinds: tuple[BlockKind, ...]
    order_used: tuple[int, ...] = field(default=())

    @property
    def n_blocks(self) -> int:
        return len(self.gamma)

    def coverage(self) -> dict[int, list[int]]:
        """Map each global index i to the blocks containing it."""
        cov: dict[int, list[int]] = {i: [] for i in range(1, self.dim + 1)}
        for l, g in enumerate(self.gamma):
            for i in g:
                cov[i].append(l)
        return cov

    def global_terms(self, l: int) -> dict[tuple[int, ...], float]:
        """Monomial map of block l translated to global indices."""
        g = self.gamma[l]
        return {
            tuple(sorted(g[j - 1] for j in idx)): c
            for idx, c in self.subtensors[l].terms.items()
        }

    def assemble(self) -> SymmetricTensor:
        """Sum of the block polynomials as a global tensor."""
        total: dict[tuple[int, ...], float] = {}
        for l in range(self.n_blocks):
            for idx, c in self.global_terms(l).items():
                total[idx] = total.get(idx, 0.0) + c
        return SymmetricTensor(self.order, self.dim, total)


def classify_block(sub: SymmetricTensor, gamma: tuple[int, ...]) -> BlockKind:
    """Classify one block, raising BlockNotW when neither case applies."""
    mixed = sub.mixed_terms()
    if all(c >= 0.0 for c in mixed.values()):
        return BlockKind(NONNEG_OFF_DIAGONAL)
    if len(mixed) == 1:
        (local_idx,) = mixed
        global_idx = tuple(sorted(gamma[j - 1] for j in local_idx))
        return BlockKind(SINGLE_MIXED_TERM, global_idx)
    raise BlockNotW(
        f"block {gamma} has {len(mixed)} mixed terms including negative coefficients"
    )


def _chain_order(gamma: Sequence[tuple[int, ...]]) -> tuple[int, ...] | None:
    """Find a processing order with chain overlaps <= 1, or None.

    The given order is tried first; on failure one greedy pass repeatedly
    picks the earliest unprocessed block overlapping the processed union in
    at most one index.
    """
    s = len(gamma)
    if s == 1:
        return (0,)

    def ok(order):
        seen: set[int] = set()
        for l in order:
            if seen and len(seen & set(gamma[l])) > 1:
                return False
            seen |= set(gamma[l])
        return True

    identity = tuple(range(s))
    if ok(identity):
        return identity
    remaining = list(range(s))
    order: list[int] = []
    seen: set[int] = set()
    while remaining:
        pick = None
        for l in remaining:
            if not seen or len(seen & set(gamma[l])) <= 1:
                pick = l
                break
        if pick is None:
            return None
        order.append(pick)
        seen |= set(gamma[pick])
        remaining.remove(pick)
    return tuple(order)


def validate(
    tensor: SymmetricTensor,
    gamma: Sequence[Sequence[int]],
    subtensors: Sequence[SymmetricTensor],
) -> WDecomposition:
    """Check all three block conditions and classify every block.

    Conditions checked: (a) some processing order keeps chain overlaps at
    one index or less, (b) block polynomials sum exactly to the tensor's
    polynomial (coefficient-wise, tolerance 1e-12), (c) every block is a
    single-mixed-term or nonnegative-off-diagonal block.
    """
    if not gamma:
        raise InvalidDecomposition("empty block list")
    if len(gamma) != len(subtensors):
        raise InvalidDecomposition(
            f"{len(gamma)} index sets but {len(subtensors)} subtensors"
        )
    gam = tuple(tuple(sorted(set(int(i) for i in g))) for g in gamma)
    for g in gam:
        if not g:
            raise InvalidDecomposition("empty index set")
        if g[0] < 1 or g[-1] > tensor.dim:
            raise CoverageGap(f"block {g} outside [1, {tensor.dim}]")
    if len(set(gam)) != len(gam):
        raise InvalidDecomposition("duplicate index sets")

    covered = set()
    for g in gam:
        covered.update(g)
    if covered != set(range(1, tensor.dim + 1)):
        missing = sorted(set(range(1, tensor.dim + 1)) - covered)
        raise CoverageGap(f"indices not covered by any block: {missing[:10]}")

    for l, (g, sub) in enumerate(zip(gam, subtensors)):
        if sub.order != tensor.order:
            raise InvalidDecomposition(f"block {l}: order {sub.order} != {tensor.order}")
        if sub.dim != len(g):
            raise InvalidDecomposition(f"block {l}: dim {sub.dim} != |Gamma|={len(g)}")

    order_used = _chain_order(gam)
    if order_used is None:
        raise OverlapTooLarge("no block ordering keeps chain overlaps at <= 1 index")

    deco = WDecomposition(
        order=tensor.order,
        dim=tensor.dim,
        gamma=gam,
        subtensors=tuple(subtensors),
        kinds=tuple(classify_block(sub, g) for g, sub in zip(gam, subtensors)),
        order_used=order_used,
    )

    total = deco.assemble()
    keys = set(total.terms) | set(tensor.terms)
    for key in sorted(keys):
        a = total.terms.get(key, 0.0)
        b = tensor.terms.get(key, 0.0)
        if abs(a - b) > COEFF_TOL * max(1.0, abs(b)):
            raise SumMismatch(
                f"monomial {key}: blocks sum to {a}, tensor has {b}"
            )
    return deco


def detect(tensor: SymmetricTensor) -> WDecomposition | None:
    """Recover a disjoint block decomposition from the mixed-term support.

    Indices linked by a mixed monomial are grouped into connected
    components; each component becomes a block carrying its mixed terms and
    the full diagonal of its indices.  Indices free of mixed terms form one
    extra diagonal-only block.  Returns None when some component has several
    mixed terms with a negative one among them (overlapping structures such
    as shared-vertex hypergraph Laplacians are not discovered here).
    """
    n = tensor.dim
    parent = list(range(n + 1))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    def union(a, b):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)

    mixed = tensor.mixed_terms()
    for idx in mixed:
        base = idx[0]
        for j in idx[1:]:
            union(base, j)

    groups: dict[int, list[int]] = {}
    linked = set()
    for idx in mixed:
        linked.update(idx)
    for i in sorted(linked):
        groups.setdefault(find(i), []).append(i)

    gamma = [tuple(sorted(g)) for _, g in sorted(groups.items())]
    isolated = tuple(sorted(set(range(1, n + 1)) - linked))
    if isolated:
        gamma.append(isolated)

    subtensors = []
    for g in gamma:
        local = {v: j + 1 for j, v in enumerate(g)}
        terms: dict[tuple[int, ...], float] = {}
        for i in g:
            c = tensor.diagonal_coefficient(i)
            if c != 0.0:
                terms[(local[i],) * tensor.order] = c
        for idx, c in mixed.items():
            if idx[0] in local and set(idx) <= set(g):
                terms[tuple(local[j] for j in idx)] = c
        subtensors.append(SymmetricTensor(tensor.order, len(g), terms))

    try:
        return validate(tensor, gamma, subtensors)
    except BlockNotW:
        return None


def reallocate_diagonal(
    deco: WDecomposition,
    weights: Mapping[int, Mapping[int, float] | Sequence[float]],
) -> WDecomposition:
    """Re-split shared diagonal coefficients among incident blocks.

    ``weights[i]`` gives the new diagonal coefficient of x_i^m in each block
    of Lambda(i), either keyed by block position or aligned with it.  The
    per-index weights must sum to the current global diagonal coefficient.
    """
    cov = deco.coverage()
    m = deco.order
    new_diag: dict[tuple[int, int], float] = {}
    total = deco.assemble()
    for i, w in weights.items():
        lam = cov.get(i)
        if not lam:
            raise WeightSumMismatch(f"index {i} is not covered by any block")
        if isinstance(w, Mapping):
            alloc = {int(l): float(v) for l, v in w.items()}
            if set(alloc) != set(lam):
                raise WeightSumMismatch(f"index {i}: weights keyed by {sorted(alloc)}, blocks are {lam}")
        else:
            if len(w) != len(lam):
                raise WeightSumMismatch(f"index {i}: {len(w)} weights for {len(lam)} blocks")
            alloc = dict(zip(lam, map(float, w)))
        target = total.diagonal_coefficient(i)
        if abs(sum(alloc.values()) - target) > COEFF_TOL * max(1.0, abs(target)):
            raise WeightSumMismatch(
                f"index {i}: weights sum to {sum(alloc.values())}, diagonal is {target}"
            )
        for l, v in alloc.items():
            new_diag[(i, l)] = v

    subtensors = []
    for l, (g, sub) in enumerate(zip(deco.gamma, deco.subtensors)):
        terms = sub.terms
        for j, i in enumerate(g, start=1):
            if (i, l) in new_diag:
                key = (j,) * m
                terms[key] = new_diag[(i, l)]
                if terms[key] == 0.0:
                    del terms[key]
        subtensors.append(SymmetricTensor(m, len(g), terms))
    return validate(total, deco.gamma, subtensors)


# ----------------------------------------------------------------------
# interchange format
# ----------------------------------------------------------------------

def decomposition_to_json(deco: WDecomposition) -> dict:
    return {
        "gamma": [list(g) for g in deco.gamma],
        "subtensors": [sub.to_json_dict() for sub in deco.subtensors],
    }


def decomposition_from_json(doc: dict, tensor: SymmetricTensor) -> WDecomposition:
    from .tensor import tensor_from_json

    gamma = doc["gamma"]
    subtensors = [tensor_from_json(d) for d in doc["subtensors"]]
    return validate(tensor, gamma, subtensors)
