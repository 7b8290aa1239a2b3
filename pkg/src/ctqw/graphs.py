"""Graph families, link removal and adjacency operators.

Node labelling is fixed per family so that special nodes can be addressed by
index:

* ``complete(n)``: nodes ``0..n-1``.
* ``complete_bipartite(m1, m2)``: partition 1 is ``0..m1-1``, partition 2 is
  ``m1..m1+m2-1``.
* ``star(n)``: ``complete_bipartite(n-1, 1)``, so the centre is node ``n-1``.
* ``binary_tree(l)``: level order; node ``i`` (0-based) has children
  ``2i+1`` and ``2i+2``.  The root is 0 and column ``j`` (1-based) holds
  nodes ``2**(j-1)-1 .. 2**j-2``.
* ``hypercube(d)``: node index is the integer value of the bit string.
* ``path(n)``: ``i`` is linked to ``i+1``.

Graphs derived from a complete graph keep a compact "complete minus removed
pairs" representation so that ``complete(10**4)`` and its broken-link variants
can be handled through the matrix-free operator without materialising
fifty million edges.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.linalg import LinearOperator

from .errors import (
    ConstraintUnsatisfiable,
    EdgeNotPresent,
    InvalidNode,
    InvalidParameter,
    UnsupportedFamily,
)

FAMILIES = ("complete", "complete_bipartite", "star", "binary_tree", "hypercube", "path")


def _pair(i, j):
    i, j = int(i), int(j)
    return (i, j) if i < j else (j, i)


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph on nodes ``0..n-1``.

    ``base="explicit"``: ``pairs`` is the edge set.
    ``base="complete"``: ``pairs`` is the set of pairs *removed* from K_n.
    """

    n: int
    pairs: frozenset = frozenset()
    base: str = "explicit"

    def __post_init__(self):
        if self.n < 0:
            raise InvalidParameter("node count must be non-negative")
        if self.base not in ("explicit", "complete"):
            raise InvalidParameter(f"unknown base {self.base!r}")
        for i, j in self.pairs:
            if i == j:
                raise InvalidParameter(f"self-loop at node {i}")
            if not (0 <= i < self.n and 0 <= j < self.n):
                raise InvalidParameter(f"edge ({i}, {j}) outside [0, {self.n})")
            if i > j:
                raise InvalidParameter(f"pair ({i}, {j}) not in canonical order")

    @classmethod
    def from_edges(cls, n, edges):
        pairs = set()
        for i, j in edges:
            if int(i) == int(j):
                raise InvalidParameter(f"self-loop at node {i}")
            p = _pair(i, j)
            if p in pairs:
                raise InvalidParameter(f"duplicate edge {p}")
            pairs.add(p)
        return cls(int(n), frozenset(pairs))

    @property
    def num_edges(self):
        if self.base == "complete":
            return self.n * (self.n - 1) // 2 - len(self.pairs)
        return len(self.pairs)

    @property
    def edges(self):
        """Sorted list of edges ``(i, j)`` with ``i < j``."""
        if self.base == "complete":
            return [p for p in combinations(range(self.n), 2) if p not in self.pairs]
        return sorted(self.pairs)

    def has_edge(self, i, j):
        if i == j or not (0 <= i < self.n and 0 <= j < self.n):
            return False
        p = _pair(i, j)
        return (p not in self.pairs) if self.base == "complete" else (p in self.pairs)

    def degrees(self):
        deg = np.zeros(self.n, dtype=int)
        for i, j in self.pairs:
            deg[i] += 1
            deg[j] += 1
        if self.base == "complete":
            return (self.n - 1) - deg
        return deg

    def check_node(self, v, what="node"):
        if not (isinstance(v, (int, np.integer)) and 0 <= v < self.n):
            raise InvalidNode(f"{what} {v!r} outside [0, {self.n})")
        return int(v)

    def adjacency(self):
        """Dense symmetric 0/1 adjacency matrix."""
        if self.base == "complete":
            A = np.ones((self.n, self.n)) - np.eye(self.n)
            if self.pairs:
                idx = np.array(sorted(self.pairs))
                A[idx[:, 0], idx[:, 1]] = 0.0
                A[idx[:, 1], idx[:, 0]] = 0.0
            return A
        A = np.zeros((self.n, self.n))
        if self.pairs:
            idx = np.array(sorted(self.pairs))
            A[idx[:, 0], idx[:, 1]] = 1.0
            A[idx[:, 1], idx[:, 0]] = 1.0
        return A

    def operator(self):
        """Matrix-free adjacency; the inf-norm bound is ``norm_bound``."""
        return AdjacencyOperator(self)

    def to_edgelist(self):
        lines = [str(self.n)]
        lines.extend(f"{i} {j}" for i, j in self.edges)
        return "\n".join(lines) + "\n"


class AdjacencyOperator(LinearOperator):
    """Adjacency action ``x -> A x`` without a dense matrix."""

    def __init__(self, graph):
        self.graph = graph
        n = graph.n
        if graph.pairs:
            idx = np.array(sorted(graph.pairs))
            rows = np.concatenate([idx[:, 0], idx[:, 1]])
            cols = np.concatenate([idx[:, 1], idx[:, 0]])
            self._sparse = coo_matrix(
                (np.ones(rows.size), (rows, cols)), shape=(n, n)
            ).tocsr()
        else:
            self._sparse = None
        deg = graph.degrees()
        self.norm_bound = float(deg.max()) if n else 0.0
        super().__init__(dtype=np.float64, shape=(n, n))

    def _matvec(self, x):
        x = np.asarray(x).reshape(-1)
        if self.graph.base == "complete":
            y = x.sum() - x
            if self._sparse is not None:
                y = y - self._sparse @ x
            return y
        if self._sparse is None:
            return np.zeros_like(x)
        return self._sparse @ x

    def _rmatvec(self, x):
        return self._matvec(np.conj(x)).conj()


def complete(n):
    if n < 1:
        raise InvalidParameter("complete graph needs n >= 1")
    return Graph(int(n), frozenset(), base="complete")


def complete_bipartite(m1, m2):
    if m1 < 1 or m2 < 1:
        raise InvalidParameter("complete bipartite graph needs m1 >= 1 and m2 >= 1")
    m1, m2 = int(m1), int(m2)
    return Graph(m1 + m2, frozenset((i, m1 + j) for i in range(m1) for j in range(m2)))


def star(n):
    if n < 2:
        raise InvalidParameter("star graph needs n >= 2")
    return complete_bipartite(n - 1, 1)


def binary_tree(levels):
    if levels < 1:
        raise InvalidParameter("binary tree needs at least one level")
    n = 2**levels - 1
    pairs = set()
    for i in range(2 ** (levels - 1) - 1):
        pairs.add((i, 2 * i + 1))
        pairs.add((i, 2 * i + 2))
    return Graph(n, frozenset(pairs))


def tree_column(levels, j):
    """Node indices of column ``j`` (1-based) of ``binary_tree(levels)``."""
    if not 1 <= j <= levels:
        raise InvalidParameter(f"column {j} outside 1..{levels}")
    return list(range(2 ** (j - 1) - 1, 2**j - 1))


def hypercube(d):
    if d < 1:
        raise InvalidParameter("hypercube needs d >= 1")
    n = 2**d
    pairs = set()
    for x in range(n):
        for b in range(d):
            y = x ^ (1 << b)
            if x < y:
                pairs.add((x, y))
    return Graph(n, frozenset(pairs))


def path(n):
    if n < 1:
        raise InvalidParameter("path needs n >= 1")
    return Graph(int(n), frozenset((i, i + 1) for i in range(n - 1)))


@dataclass(frozen=True)
class FamilySpec:
    """A named graph family with its parameters.

    ``params`` keys: complete/star/path use ``n``; complete_bipartite uses
    ``m1`` and ``m2``; binary_tree uses ``levels``; hypercube uses ``d``.
    """

    family: str
    params: dict = field(default_factory=dict)

    @property
    def n(self):
        p = self.params
        if self.family in ("complete", "star", "path"):
            return int(p["n"])
        if self.family == "complete_bipartite":
            return int(p["m1"]) + int(p["m2"])
        if self.family == "binary_tree":
            return 2 ** int(p["levels"]) - 1
        if self.family == "hypercube":
            return 2 ** int(p["d"])
        raise UnsupportedFamily(self.family)


_REQUIRED = {
    "complete": ("n",),
    "star": ("n",),
    "path": ("n",),
    "complete_bipartite": ("m1", "m2"),
    "binary_tree": ("levels",),
    "hypercube": ("d",),
}


def build(spec):
    """Build the graph described by a :class:`FamilySpec`."""
    if spec.family not in _REQUIRED:
        raise UnsupportedFamily(f"unknown family {spec.family!r}")
    missing = [k for k in _REQUIRED[spec.family] if spec.params.get(k) is None]
    if missing:
        raise InvalidParameter(f"{spec.family} requires {', '.join(missing)}")
    p = {k: int(spec.params[k]) for k in _REQUIRED[spec.family]}
    if spec.family == "complete":
        return complete(p["n"])
    if spec.family == "complete_bipartite":
        return complete_bipartite(p["m1"], p["m2"])
    if spec.family == "star":
        return star(p["n"])
    if spec.family == "binary_tree":
        return binary_tree(p["levels"])
    if spec.family == "hypercube":
        return hypercube(p["d"])
    return path(p["n"])


def adjacency(g):
    return g.adjacency()


def remove_links(g, broken):
    """Return ``g`` without the links in ``broken``; node count unchanged."""
    removed = set()
    for i, j in broken:
        p = _pair(i, j)
        if not g.has_edge(*p) or p in removed:
            raise EdgeNotPresent(f"edge {p} not in graph")
        removed.add(p)
    if g.base == "complete":
        return Graph(g.n, g.pairs | removed, base="complete")
    return Graph(g.n, g.pairs - removed)


def _rng(seed):
    # PCG64 through numpy's Generator: documented, bit-stable across platforms.
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(seed))


def _max_matching_size(edges):
    import networkx as nx

    G = nx.Graph()
    G.add_edges_from(edges)
    return len(nx.max_weight_matching(G, maxcardinality=True))


def sample_broken(g, r, constraint="none", avoid=None, seed=0, max_tries=20000):
    """Uniformly sample ``r`` links of ``g`` to break.

    ``constraint`` is ``"none"``, ``"at_most_one_per_node"`` or
    ``"avoid_node"``; ``avoid`` (a node index) excludes every link incident to
    that node and may be combined with ``"at_most_one_per_node"``.
    ``seed`` is an int, a sequence of ints, or a ``numpy.random.Generator``.
    """
    if constraint not in ("none", "at_most_one_per_node", "avoid_node"):
        raise InvalidParameter(f"unknown constraint {constraint!r}")
    if constraint == "avoid_node" and avoid is None:
        raise InvalidParameter("avoid_node constraint needs a node")
    if avoid is not None:
        avoid = g.check_node(avoid, "avoided node")
    if r < 0:
        raise InvalidParameter("r must be non-negative")
    if r == 0:
        return []
    rng = _rng(seed)
    matching = constraint == "at_most_one_per_node"

    if matching and g.base == "complete" and not g.pairs:
        # Uniform r-matching of K_n: a uniform 2r-subset, then a uniform pairing.
        nodes = np.array([v for v in range(g.n) if v != avoid])
        if 2 * r > nodes.size:
            raise ConstraintUnsatisfiable(
                f"{r} disjoint links need {2 * r} nodes, only {nodes.size} available"
            )
        chosen = rng.choice(nodes, size=2 * r, replace=False)
        return sorted(_pair(chosen[2 * k], chosen[2 * k + 1]) for k in range(r))

    edges = [e for e in g.edges if avoid is None or avoid not in e]
    if r > len(edges):
        raise ConstraintUnsatisfiable(f"cannot break {r} of {len(edges)} admissible links")
    if not matching:
        idx = rng.choice(len(edges), size=r, replace=False)
        return sorted(edges[k] for k in idx)

    if r > _max_matching_size(edges):
        raise ConstraintUnsatisfiable(f"no matching of size {r} among admissible links")
    # Rejection sampling is exactly uniform over r-matchings.
    for _ in range(max_tries):
        idx = rng.choice(len(edges), size=r, replace=False)
        pick = [edges[k] for k in idx]
        if len({v for e in pick for v in e}) == 2 * r:
            return sorted(pick)
    # Dense regime: randomised greedy, uniform only approximately.
    while True:
        order = rng.permutation(len(edges))
        used, pick = set(), []
        for k in order:
            i, j = edges[k]
            if i not in used and j not in used:
                pick.append(edges[k])
                used.update((i, j))
                if len(pick) == r:
                    return sorted(pick)


def parse_edgelist(text):
    """Parse the edge-list format: first line ``n``, then ``i j`` per line.

    Blank lines are ignored and ``#`` starts a comment.
    """
    n = None
    edges = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        try:
            if n is None:
                if len(parts) != 1:
                    raise ValueError
                n = int(parts[0])
                continue
            if len(parts) != 2:
                raise ValueError
            edges.append((int(parts[0]), int(parts[1])))
        except ValueError:
            raise InvalidParameter(f"line {lineno}: cannot parse {raw!r}") from None
    if n is None:
        raise InvalidParameter("edge list is missing the node count")
    return Graph.from_edges(n, edges)


def read_edgelist(path_):
    with open(path_, encoding="utf-8") as fh:
        return parse_edgelist(fh.read())


def relabel(g, perm):
    """Graph with node ``v`` renamed to ``perm[v]``."""
    perm = [int(p) for p in perm]
    if sorted(perm) != list(range(g.n)):
        raise InvalidParameter("perm must be a permutation of range(n)")
    return Graph.from_edges(g.n, [(perm[i], perm[j]) for i, j in g.edges])


def is_connected(g):
    if g.n == 0:
        return True
    seen = {0}
    stack = [0]
    A = g.adjacency()
    while stack:
        v = stack.pop()
        for u in np.flatnonzero(A[v]):
            if u not in seen:
                seen.add(int(u))
                stack.append(int(u))
    return len(seen) == g.n


def hamming_weight(x):
    return bin(x).count("1")


def dicke_state(d, k):
    """Uniform superposition of the d-bit strings with Hamming weight k."""
    v = np.zeros(2**d)
    idx = [x for x in range(2**d) if hamming_weight(x) == k]
    v[idx] = 1.0 / math.sqrt(len(idx))
    return v
