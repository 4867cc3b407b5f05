"""Uniform hypergraphs and their adjacency / Laplacian tensors.

Degree-diagonal minus adjacency gives the Laplacian; for hyper-stars and
hyper-trees (every pair of edges sharing at most one vertex) the Laplacian
splits into one block per edge, with shared vertices dividing their degree
equally among incident edges.  Generators follow fixed vertex-numbering
formulas so instances are bit-reproducible.
"""
from __future__ import annotations

from dataclasses import dataclass

from .errors import DimensionMismatch, InvalidIndex, NotATree, UnsupportedTopology
from .tensor import SymmetricTensor
from .wstructure import WDecomposition, validate

__all__ = [
    "UniformHypergraph",
    "adjacency_tensor",
    "laplacian",
    "signless_laplacian",
    "gen_hyper_star",
    "gen_hyper_path",
    "gen_hyper_tree",
    "laplacian_w_decomposition",
    "save_edge_list",
    "load_edge_list",
]


@dataclass(frozen=True)
class UniformHypergraph:
    """Simple m-uniform hypergraph on vertices 1..n."""
    n: int
    m: int
    edges: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        seen = set()
        for e in self.edges:
            if len(e) != self.m or len(set(e)) != self.m:
                raise InvalidIndex(f"edge {e} is not a set of {self.m} distinct vertices")
            if min(e) < 1 or max(e) > self.n:
                raise InvalidIndex(f"edge {e} outside [1, {self.n}]")
            if tuple(e) != tuple(sorted(e)):
                raise InvalidIndex(f"edge {e} must be sorted")
            if e in seen:
                raise InvalidIndex(f"duplicate edge {e}")
            seen.add(e)

    @property
    def degrees(self) -> list[int]:
        d = [0] * (self.n + 1)
        for e in self.edges:
            for v in e:
                d[v] += 1
        return d[1:]


def _graph(n, m, edges) -> UniformHypergraph:
    return UniformHypergraph(n, m, tuple(tuple(sorted(e)) for e in edges))


def adjacency_tensor(g: UniformHypergraph) -> SymmetricTensor:
    """Entry 1/(m-1)! on every permutation of each edge.

    In monomial form each edge monomial gets coefficient m!/(m-1)! = m.
    """
    return SymmetricTensor(g.m, g.n, {e: float(g.m) for e in g.edges})


def _degree_diagonal(g: UniformHypergraph) -> SymmetricTensor:
    return SymmetricTensor(
        g.m, g.n, {(i,) * g.m: float(d) for i, d in enumerate(g.degrees, start=1) if d}
    )


def laplacian(g: UniformHypergraph) -> SymmetricTensor:
    return _degree_diagonal(g) - adjacency_tensor(g)


def signless_laplacian(g: UniformHypergraph) -> SymmetricTensor:
    return _degree_diagonal(g) + adjacency_tensor(g)


def gen_hyper_star(m: int, k: int) -> UniformHypergraph:
    """k edges of size m all sharing the center vertex 1; n = k(m-1)+1."""
    if m < 2 or k < 1:
        raise DimensionMismatch(f"need m >= 2 and k >= 1, got m={m}, k={k}")
    n = k * (m - 1) + 1
    edges = [
        (1,) + tuple(range((m - 1) * (j - 1) + 2, (m - 1) * j + 2))
        for j in range(1, k + 1)
    ]
    return _graph(n, m, edges)


def gen_hyper_path(m: int, k: int) -> UniformHypergraph:
    """k consecutive edges overlapping in single junction vertices; n = k(m-1)+1."""
    if m < 2 or k < 1:
        raise DimensionMismatch(f"need m >= 2 and k >= 1, got m={m}, k={k}")
    n = k * (m - 1) + 1
    edges = [
        tuple(range((l - 1) * (m - 1) + 1, l * (m - 1) + 2))
        for l in range(1, k + 1)
    ]
    return _graph(n, m, edges)


def gen_hyper_tree(tree_edges, m: int) -> UniformHypergraph:
    """Blow a tree up to an m-uniform hypergraph.

    Each base edge gains m-2 fresh vertices; fresh labels are assigned per
    edge, in the given edge order, as the smallest positive integers not yet
    used.  Base edges must form a tree (connected, |E| = |V|-1).
    """
    if m < 2:
        raise DimensionMismatch(f"need m >= 2, got m={m}")
    base = [tuple(sorted((int(a), int(b)))) for a, b in tree_edges]
    verts = sorted({v for e in base for v in e})
    if len(base) != len(verts) - 1:
        raise NotATree(f"{len(base)} edges on {len(verts)} vertices")
    # connectivity check
    adj = {v: set() for v in verts}
    for a, b in base:
        if a == b:
            raise NotATree(f"self-loop at {a}")
        adj[a].add(b)
        adj[b].add(a)
    stack, seen = [verts[0]], {verts[0]}
    while stack:
        for w in adj[stack.pop()]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    if seen != set(verts):
        raise NotATree("base edge set is not connected")

    used = set(verts)
    edges = []
    next_fresh = 1
    for a, b in base:
        fresh = []
        while len(fresh) < m - 2:
            if next_fresh not in used:
                fresh.append(next_fresh)
                used.add(next_fresh)
            next_fresh += 1
        edges.append(tuple(sorted((a, b, *fresh))))
    return _graph(max(used), m, edges)


def laplacian_w_decomposition(g: UniformHypergraph) -> WDecomposition:
    """One Laplacian block per hyperedge.

    A vertex of degree d contributes diagonal d/d = 1 to each incident
    block, so every block is the all-ones diagonal plus the edge monomial
    with coefficient -m.  Requires every edge pair to overlap in at most one
    vertex (stars, paths, trees).
    """
    edges = g.edges
    for a in range(len(edges)):
        for b in range(a + 1, len(edges)):
            if len(set(edges[a]) & set(edges[b])) > 1:
                raise UnsupportedTopology(
                    f"edges {edges[a]} and {edges[b]} share more than one vertex"
                )
    gamma = []
    subtensors = []
    for e in edges:
        k = len(e)
        # equal split: vertex of degree d puts d/d = 1 in each incident block
        terms: dict[tuple[int, ...], float] = {
            (j,) * g.m: 1.0 for j in range(1, k + 1)
        }
        terms[tuple(range(1, k + 1))] = -float(g.m)
        gamma.append(e)
        subtensors.append(SymmetricTensor(g.m, k, terms))
    # vertices missed by every edge keep their (zero) degree in one extra block
    loose = sorted(set(range(1, g.n + 1)) - {v for e in edges for v in e})
    if loose:
        gamma.append(tuple(loose))
        subtensors.append(SymmetricTensor.zero(g.m, len(loose)))
    return validate(laplacian(g), gamma, subtensors)


# ----------------------------------------------------------------------
# edge-list text format: first line "m n", then one edge per line
# ----------------------------------------------------------------------

def save_edge_list(g: UniformHypergraph, path) -> None:
    with open(path, "w") as fh:
        fh.write(f"{g.m} {g.n}\n")
        for e in g.edges:
            fh.write(" ".join(map(str, e)) + "\n")


def load_edge_list(path) -> UniformHypergraph:
    with open(path) as fh:
        lines = [ln.split() for ln in fh if ln.strip()]
    m, n = int(lines[0][0]), int(lines[0][1])
    edges = [tuple(int(v) for v in ln) for ln in lines[1:]]
    return _graph(n, m, edges)
