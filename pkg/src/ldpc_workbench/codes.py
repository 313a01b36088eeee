"""Tanner graphs, the regular configuration-model ensemble and alist files.

A :class:`TannerGraph` stores one record per edge (socket pair), so the
raw configuration-model multigraph is representable.  Graphs drawn with
:func:`sample_regular` have their multi-edges resolved modulo 2: an edge of
even multiplicity contributes nothing to any parity check and is deleted;
an edge of odd multiplicity is kept once.  The code defined by the graph is
unchanged by this resolution.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .gf2 import ParityCheckMatrix

__all__ = [
    "TannerGraph",
    "RegularEnsemble",
    "draw_sockets",
    "resolve_multiedges",
    "sample_regular",
    "read_alist",
    "write_alist",
    "parse_alist",
    "format_alist",
    "girth",
    "tree_neighborhood_fraction",
    "example_hamming_graph",
]


class TannerGraph:
    """Bipartite variable/check graph with explicit edge identity.

    Attributes ``edge_var`` and ``edge_chk`` give the endpoints of each edge.
    ``var_ptr``/``var_edges`` and ``chk_ptr``/``chk_edges`` are CSR indices
    from nodes to incident edge ids.
    """

    def __init__(self, n: int, m: int, edge_var, edge_chk):
        edge_var = np.asarray(edge_var, dtype=np.int64)
        edge_chk = np.asarray(edge_chk, dtype=np.int64)
        if edge_var.shape != edge_chk.shape or edge_var.ndim != 1:
            raise ValueError("edge endpoint arrays must be 1-d and of equal length")
        if n <= 0 or m < 0:
            raise ValueError("graph needs at least one variable node")
        if edge_var.size and (edge_var.min() < 0 or edge_var.max() >= n):
            raise ValueError("variable index out of range")
        if edge_chk.size and (edge_chk.min() < 0 or edge_chk.max() >= m):
            raise ValueError("check index out of range")
        order = np.lexsort((edge_var, edge_chk))
        self.n = int(n)
        self.m = int(m)
        self.edge_var = edge_var[order]
        self.edge_chk = edge_chk[order]
        self.var_deg = np.bincount(self.edge_var, minlength=n)
        self.chk_deg = np.bincount(self.edge_chk, minlength=m)
        self.chk_ptr = np.concatenate([[0], np.cumsum(self.chk_deg)])
        self.chk_edges = np.arange(self.n_edges, dtype=np.int64)
        self.var_edges = np.argsort(self.edge_var, kind="stable")
        self.var_ptr = np.concatenate([[0], np.cumsum(self.var_deg)])

    @property
    def n_edges(self) -> int:
        return int(self.edge_var.size)

    @property
    def is_simple(self) -> bool:
        keys = self.edge_chk * self.n + self.edge_var
        return np.unique(keys).size == keys.size

    def var_neighbors(self, i: int) -> np.ndarray:
        return self.edge_chk[self.var_edges[self.var_ptr[i]:self.var_ptr[i + 1]]]

    def chk_neighbors(self, a: int) -> np.ndarray:
        return self.edge_var[self.chk_ptr[a]:self.chk_ptr[a + 1]]

    @classmethod
    def from_dense(cls, H) -> "TannerGraph":
        H = np.asarray(H)
        if not np.all((H == 0) | (H == 1)):
            raise ValueError("parity-check entries must be 0 or 1")
        chk, var = np.nonzero(H)
        return cls(H.shape[1], H.shape[0], var, chk)

    def to_dense(self) -> np.ndarray:
        H = np.zeros((self.m, self.n), dtype=np.uint8)
        np.add.at(H, (self.edge_chk, self.edge_var), 1)
        return H % 2

    def to_parity_check(self) -> ParityCheckMatrix:
        return ParityCheckMatrix.from_dense(self.to_dense())

    def syndrome(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.int64)
        if x.shape != (self.n,):
            raise ValueError(f"word must have length {self.n}")
        return (np.bincount(self.edge_chk, weights=x[self.edge_var], minlength=self.m).astype(np.int64) & 1)

    def is_codeword(self, x) -> bool:
        return not self.syndrome(x).any()

    def unsat_count(self, x) -> int:
        return int(self.syndrome(x).sum())

    def check_groups(self) -> list[np.ndarray]:
        """Edge ids of the checks grouped by degree, one ``(checks, d)`` matrix per degree.

        Edges are stored sorted by check, so each row is a contiguous range.
        """
        if getattr(self, "_groups", None) is None:
            groups = []
            for d in np.unique(self.chk_deg):
                if d == 0:
                    continue
                starts = self.chk_ptr[:-1][self.chk_deg == d]
                groups.append(starts[:, None] + np.arange(d)[None, :])
            self._groups = groups
        return self._groups

    def __repr__(self) -> str:
        return f"TannerGraph(n={self.n}, m={self.m}, edges={self.n_edges})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, TannerGraph):
            return NotImplemented
        return (self.n, self.m) == (other.n, other.m) and np.array_equal(self.edge_var, other.edge_var) \
            and np.array_equal(self.edge_chk, other.edge_chk)


@dataclass(frozen=True)
class RegularEnsemble:
    """The ``(l, k)`` regular ensemble on ``n`` variable nodes."""

    l: int
    k: int
    n: int

    def __post_init__(self):
        if self.l < 1 or self.k < 2:
            raise ValueError("need variable degree >= 1 and check degree >= 2")
        if self.n < 1 or (self.n * self.l) % self.k:
            raise ValueError(f"n*l = {self.n * self.l} is not divisible by k = {self.k}")

    @property
    def m(self) -> int:
        return self.n * self.l // self.k

    @property
    def sockets(self) -> int:
        return self.n * self.l

    @property
    def design_rate(self) -> float:
        return 1.0 - self.l / self.k


def draw_sockets(ens: RegularEnsemble, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Configuration model: match variable and check sockets by a uniform permutation."""
    var = np.repeat(np.arange(ens.n, dtype=np.int64), ens.l)
    chk = np.repeat(np.arange(ens.m, dtype=np.int64), ens.k)
    return var, chk[rng.permutation(ens.sockets)]


def resolve_multiedges(var: np.ndarray, chk: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray, int]:
    """Keep one copy of each odd-multiplicity edge; drop the even ones.

    Returns the simple edge list and the number of node pairs that were
    joined by more than one socket pair.
    """
    keys = chk * n + var
    uniq, counts = np.unique(keys, return_counts=True)
    keep = uniq[counts % 2 == 1]
    return keep % n, keep // n, int(np.count_nonzero(counts > 1))


def sample_regular(ens: RegularEnsemble, rng: np.random.Generator) -> TannerGraph:
    var, chk = draw_sockets(ens, rng)
    v, c, _ = resolve_multiedges(var, chk, ens.n)
    return TannerGraph(ens.n, ens.m, v, c)


def example_hamming_graph() -> TannerGraph:
    """The seven-bit example code whose columns are the binary numbers 1..7."""
    H = np.array([[1, 0, 1, 0, 1, 0, 1], [0, 1, 1, 0, 0, 1, 1], [0, 0, 0, 1, 1, 1, 1]])
    return TannerGraph.from_dense(H)


# ----------------------------------------------------------------------
# alist format
def format_alist(graph: TannerGraph) -> str:
    """Serialise in the alist layout (1-indexed, zero padded)."""
    if graph.n_edges == 0:
        raise ValueError("refusing to write a graph with no edges")
    if not graph.is_simple:
        raise ValueError("alist files describe simple graphs only")
    maxv = int(graph.var_deg.max())
    maxc = int(graph.chk_deg.max()) if graph.m else 0
    lines = [f"{graph.n} {graph.m}", f"{maxv} {maxc}",
             " ".join(map(str, graph.var_deg)), " ".join(map(str, graph.chk_deg))]
    for i in range(graph.n):
        nb = sorted(int(a) + 1 for a in graph.var_neighbors(i))
        lines.append(" ".join(map(str, nb + [0] * (maxv - len(nb)))))
    for a in range(graph.m):
        nb = sorted(int(i) + 1 for i in graph.chk_neighbors(a))
        lines.append(" ".join(map(str, nb + [0] * (maxc - len(nb)))))
    return "\n".join(lines) + "\n"


def parse_alist(text: str) -> TannerGraph:
    lines = [ln.split() for ln in text.strip().splitlines() if ln.strip()]
    try:
        n, m = map(int, lines[0])
        maxv, maxc = map(int, lines[1])
        vdeg = list(map(int, lines[2]))
        cdeg = list(map(int, lines[3]))
        vlists = [[int(t) for t in ln if int(t) != 0] for ln in lines[4:4 + n]]
        clists = [[int(t) for t in ln if int(t) != 0] for ln in lines[4 + n:4 + n + m]]
    except (ValueError, IndexError) as exc:
        raise ValueError(f"malformed alist: {exc}") from None
    if len(vdeg) != n or len(cdeg) != m or len(vlists) != n or len(clists) != m:
        raise ValueError("malformed alist: counts do not match the header")
    if len(lines) != 4 + n + m:
        raise ValueError("malformed alist: unexpected trailing lines")
    if max(vdeg, default=0) > maxv or max(cdeg, default=0) > maxc:
        raise ValueError("malformed alist: degree exceeds the declared maximum")
    var_side, chk_side = [], []
    for i, (d, nb) in enumerate(zip(vdeg, vlists)):
        if len(nb) != d or len(set(nb)) != d:
            raise ValueError(f"malformed alist: variable {i + 1} degree mismatch")
        if any(not 1 <= a <= m for a in nb):
            raise ValueError(f"malformed alist: check index out of range at variable {i + 1}")
        var_side += [(a - 1, i) for a in nb]
    for a, (d, nb) in enumerate(zip(cdeg, clists)):
        if len(nb) != d or len(set(nb)) != d:
            raise ValueError(f"malformed alist: check {a + 1} degree mismatch")
        if any(not 1 <= i <= n for i in nb):
            raise ValueError(f"malformed alist: variable index out of range at check {a + 1}")
        chk_side += [(a, i - 1) for i in nb]
    if sorted(var_side) != sorted(chk_side):
        raise ValueError("malformed alist: variable and check lists disagree")
    if not var_side:
        raise ValueError("alist describes a graph with no edges")
    chk, var = np.array(sorted(chk_side)).T
    return TannerGraph(n, m, var, chk)


def write_alist(graph: TannerGraph, path) -> None:
    Path(path).write_text(format_alist(graph))


def read_alist(path) -> TannerGraph:
    return parse_alist(Path(path).read_text())


# ----------------------------------------------------------------------
# structure
def girth(graph: TannerGraph) -> float:
    """Length of the shortest cycle (``inf`` for a forest).

    Breadth-first search from every variable node; every cycle of a
    bipartite graph passes through one.  Parallel edges count as 2-cycles.
    """
    n = graph.n
    best = math.inf
    other = (graph.edge_var, graph.edge_chk + n)
    adj_ptr = [graph.var_ptr, graph.chk_ptr]
    adj_edges = [graph.var_edges, graph.chk_edges]

    def incident(node):
        side = 0 if node < n else 1
        idx = node if side == 0 else node - n
        return adj_edges[side][adj_ptr[side][idx]:adj_ptr[side][idx + 1]], side

    for src in range(n):
        dist = {src: 0}
        via = {src: -1}
        queue = deque([src])
        while queue:
            u = queue.popleft()
            if 2 * dist[u] + 1 >= best:
                break
            edges, side = incident(u)
            for e in edges:
                if e == via[u]:
                    continue
                w = int(other[1][e]) if side == 0 else int(other[0][e])
                if w in dist:
                    best = min(best, dist[u] + dist[w] + 1)
                else:
                    dist[w] = dist[u] + 1
                    via[w] = e
                    queue.append(w)
    return best


def _directed_neighborhood_is_tree(graph: TannerGraph, root_edge: int, radius: int) -> bool:
    """Is the radius-``radius`` neighbourhood of the directed edge ``i -> a`` a tree?

    The neighbourhood holds variables reachable from ``i`` by non-reversing
    paths with at most ``radius`` variable-to-variable steps whose first
    edge is not the root edge, the checks along those paths, and any check
    all of whose sockets land on those variables.  The root edge and ``a``
    belong to the picture, so returning to ``a`` closes a cycle.
    """
    i = int(graph.edge_var[root_edge])
    a = int(graph.edge_chk[root_edge])
    seen_v = {i}
    seen_c = {a}
    used = {root_edge}
    frontier = [i]
    for _ in range(radius):
        nxt = []
        for v in frontier:
            for e in graph.var_edges[graph.var_ptr[v]:graph.var_ptr[v + 1]]:
                e = int(e)
                if e in used:
                    continue
                c = int(graph.edge_chk[e])
                if c in seen_c:
                    return False
                seen_c.add(c)
                used.add(e)
                for e2 in range(graph.chk_ptr[c], graph.chk_ptr[c + 1]):
                    if e2 == e:
                        continue
                    j = int(graph.edge_var[e2])
                    if j in seen_v:
                        return False
                    seen_v.add(j)
                    used.add(e2)
                    nxt.append(j)
        frontier = nxt
    for v in frontier:
        for e in graph.var_edges[graph.var_ptr[v]:graph.var_ptr[v + 1]]:
            e = int(e)
            if e in used:
                continue
            c = int(graph.edge_chk[e])
            if c == a:
                continue
            if all(int(j) in seen_v for j in graph.chk_neighbors(c)):
                return False
    return True


def tree_neighborhood_fraction(ens: RegularEnsemble, radius: int, trials: int, rng: np.random.Generator,
                               trials_per_graph: int = 1) -> float:
    """Monte Carlo probability that a random directed neighbourhood is a tree.

    Works on the raw configuration-model multigraph, where parallel edges
    are the typical short cycles.  ``trials_per_graph`` directed edges are
    examined on each drawn graph.
    """
    if radius < 0 or trials < 1:
        raise ValueError("need radius >= 0 and at least one trial")
    if radius == 0:
        return 1.0
    hits = 0
    done = 0
    while done < trials:
        var, chk = draw_sockets(ens, rng)
        g = TannerGraph(ens.n, ens.m, var, chk)
        for _ in range(min(trials_per_graph, trials - done)):
            hits += _directed_neighborhood_is_tree(g, int(rng.integers(g.n_edges)), radius)
            done += 1
    return hits / trials
