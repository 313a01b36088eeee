"""Random k-SAT, a generic binary factor-graph BP engine and tree probes.

Variables take values in ``{0, 1}`` with ``1`` meaning *True*.  A literal
is a pair ``(variable, negated)``; it is satisfied when the variable equals
``0`` if negated and ``1`` otherwise.  Clause compatibility functions are
``1`` unless every literal is violated.

The generic engine :func:`generic_bp` works for arbitrary factors given as
dense tables, so the same code runs parity checks, clauses and unary
channel evidence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "Factor",
    "FactorGraph",
    "BpMarginals",
    "generic_bp",
    "parity_factor",
    "CnfFormula",
    "example_formula",
    "to_factor_graph",
    "read_dimacs",
    "write_dimacs",
    "parse_dimacs",
    "format_dimacs",
    "brute_force_marginals",
    "random_ksat",
    "TreeFormula",
    "sample_tree_formula",
    "decay_probe",
    "root_influence",
]


@dataclass
class Factor:
    scope: tuple[int, ...]
    table: np.ndarray  # shape (2,) * len(scope), non-negative

    def __post_init__(self):
        self.scope = tuple(int(v) for v in self.scope)
        self.table = np.asarray(self.table, dtype=float)
        if self.table.shape != (2,) * len(self.scope):
            raise ValueError("factor table shape must be (2,)*arity")
        if len(set(self.scope)) != len(self.scope):
            raise ValueError("a factor may not mention a variable twice")
        if np.any(self.table < 0):
            raise ValueError("compatibility values must be non-negative")


@dataclass
class FactorGraph:
    n_vars: int
    factors: list[Factor]

    def __post_init__(self):
        for f in self.factors:
            if any(not 0 <= v < self.n_vars for v in f.scope):
                raise ValueError("factor scope refers to an unknown variable")

    def var_factors(self) -> list[list[int]]:
        adj = [[] for _ in range(self.n_vars)]
        for a, f in enumerate(self.factors):
            for v in f.scope:
                adj[v].append(a)
        return adj

    def weight(self, x) -> float:
        x = tuple(int(b) for b in x)
        w = 1.0
        for f in self.factors:
            w *= f.table[tuple(x[v] for v in f.scope)]
        return w


def parity_factor(scope) -> Factor:
    """Even-parity indicator on ``scope``."""
    d = len(scope)
    idx = np.indices((2,) * d).sum(axis=0)
    return Factor(tuple(scope), (idx % 2 == 0).astype(float))


@dataclass
class BpMarginals:
    marginals: np.ndarray  # (n_vars, 2)
    iterations: int
    contradiction: bool = False
    var_to_factor: dict = field(default_factory=dict, repr=False)
    factor_to_var: dict = field(default_factory=dict, repr=False)
    history: list = field(default_factory=list, repr=False)


def _factor_message(table: np.ndarray, incoming: list, pos: int) -> np.ndarray:
    """Sum of ``table`` times the incoming messages over every axis but ``pos``."""
    T = table
    d = table.ndim
    for q, msg in enumerate(incoming):
        if q != pos:
            shape = [1] * d
            shape[q] = 2
            T = T * msg.reshape(shape)
    axes = tuple(q for q in range(d) if q != pos)
    return T.sum(axis=axes) if axes else T.copy()


def _normalise(msg):
    s = msg.sum()
    return msg / s if s > 0 else None


def generic_bp(graph: FactorGraph, iterations: int, damping: float = 0.0, init: dict | None = None,
               record: bool = False) -> BpMarginals:
    """Flooding BP on a binary factor graph.

    Factor messages start uniform.  Each iteration computes every factor
    message from the current variable messages, then every variable message
    from the new factor messages.  ``damping`` mixes the previous variable
    message into the new one.  After ``iterations`` rounds the marginals are
    the normalised products of all incoming factor messages.  A message that
    vanishes identically signals contradictory evidence; the run stops and
    ``contradiction`` is set.
    """
    if not 0.0 <= damping < 1.0:
        raise ValueError("damping must lie in [0, 1)")
    adj = graph.var_factors()
    uniform = np.array([0.5, 0.5])
    nu = {(i, a): uniform.copy() for a, f in enumerate(graph.factors) for i in f.scope}
    nu_hat = {(a, i): uniform.copy() for (i, a) in nu}
    if init:
        nu.update({key: np.asarray(val, dtype=float) for key, val in init.items()})
    history = []
    contradiction = False
    t = 0
    for t in range(1, iterations + 1):
        new_hat = {}
        for a, f in enumerate(graph.factors):
            incoming = [nu[(j, a)] for j in f.scope]
            for pos, i in enumerate(f.scope):
                msg = _normalise(_factor_message(f.table, incoming, pos))
                if msg is None:
                    contradiction = True
                    break
                new_hat[(a, i)] = msg
            if contradiction:
                break
        if contradiction:
            break
        nu_hat = new_hat
        new_nu = {}
        for i in range(graph.n_vars):
            for a in adj[i]:
                msg = np.ones(2)
                for b in adj[i]:
                    if b != a:
                        msg = msg * nu_hat[(b, i)]
                msg = _normalise(msg)
                if msg is None:
                    contradiction = True
                    break
                if damping:
                    msg = (1.0 - damping) * msg + damping * nu[(i, a)]
                new_nu[(i, a)] = msg
            if contradiction:
                break
        if contradiction:
            break
        nu = new_nu
        if record:
            history.append(({k: v.copy() for k, v in nu.items()}, {k: v.copy() for k, v in nu_hat.items()}))
    marg = np.zeros((graph.n_vars, 2))
    for i in range(graph.n_vars):
        msg = np.ones(2)
        for a in adj[i]:
            msg = msg * nu_hat[(a, i)]
        s = msg.sum()
        if s <= 0:
            contradiction = True
            marg[i] = np.nan
        else:
            marg[i] = msg / s
    return BpMarginals(marginals=marg, iterations=t, contradiction=contradiction,
                       var_to_factor=nu, factor_to_var=nu_hat, history=history)


# ----------------------------------------------------------------------
@dataclass
class CnfFormula:
    n_vars: int
    clauses: list[tuple[tuple[int, bool], ...]]
    repeated: int = 0  # clauses drawn more than once (random formulas only)

    def __post_init__(self):
        clean = []
        for c in self.clauses:
            c = tuple((int(v), bool(neg)) for v, neg in c)
            if not c:
                raise ValueError("empty clause")
            if any(not 0 <= v < self.n_vars for v, _ in c):
                raise ValueError("literal refers to an unknown variable")
            if len({v for v, _ in c}) != len(c):
                raise ValueError("a clause may not mention a variable twice")
            clean.append(c)
        self.clauses = clean

    @property
    def n_clauses(self) -> int:
        return len(self.clauses)

    def satisfied(self, x) -> bool:
        x = np.asarray(x)
        return all(any(x[v] == (0 if neg else 1) for v, neg in c) for c in self.clauses)


def example_formula() -> CnfFormula:
    """Five variables, five clauses: (~1|~2|~4)(1|~2)(2|4|5)(1|2|~5)(1|~3|5)."""
    lits = [[-1, -2, -4], [1, -2], [2, 4, 5], [1, 2, -5], [1, -3, 5]]
    return CnfFormula(5, [tuple((abs(t) - 1, t < 0) for t in c) for c in lits])


def _clause_table(clause) -> np.ndarray:
    T = np.ones((2,) * len(clause))
    T[tuple(1 if neg else 0 for _, neg in clause)] = 0.0
    return T


def to_factor_graph(formula: CnfFormula) -> FactorGraph:
    return FactorGraph(formula.n_vars, [Factor(tuple(v for v, _ in c), _clause_table(c))
                                        for c in formula.clauses])


def format_dimacs(formula: CnfFormula) -> str:
    lines = [f"p cnf {formula.n_vars} {formula.n_clauses}"]
    for c in formula.clauses:
        lines.append(" ".join(str(-(v + 1) if neg else v + 1) for v, neg in c) + " 0")
    return "\n".join(lines) + "\n"


def parse_dimacs(text: str) -> CnfFormula:
    header = None
    tokens: list[int] = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("c") or line.startswith("%"):
            continue
        if line.startswith("p"):
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise ValueError(f"malformed DIMACS header: {line!r}")
            header = (int(parts[2]), int(parts[3]))
            continue
        if header is None:
            raise ValueError("DIMACS clause before the header")
        tokens += [int(t) for t in line.split()]
    if header is None:
        raise ValueError("missing DIMACS header")
    clauses, cur = [], []
    for t in tokens:
        if t == 0:
            clauses.append(tuple((abs(x) - 1, x < 0) for x in cur))
            cur = []
        else:
            cur.append(t)
    if cur:
        raise ValueError("last clause is not terminated by 0")
    if len(clauses) != header[1]:
        raise ValueError(f"header announces {header[1]} clauses, found {len(clauses)}")
    return CnfFormula(header[0], clauses)


def write_dimacs(formula: CnfFormula, path) -> None:
    Path(path).write_text(format_dimacs(formula))


def read_dimacs(path) -> CnfFormula:
    return parse_dimacs(Path(path).read_text())


def brute_force_marginals(formula: CnfFormula, max_vars: int = 24) -> tuple[np.ndarray, int]:
    """Exact ``P(x_i = True)`` under the uniform law on solutions, and the solution count.

    An unsatisfiable formula has no uniform measure and raises ``ValueError``.
    """
    n = formula.n_vars
    if n > max_vars:
        raise ValueError(f"{n} variables exceed the enumeration budget {max_vars}")
    counts = np.zeros(n)
    total = 0
    chunk = 1 << min(n, 18)
    shifts = np.arange(n, dtype=np.int64)
    for start in range(0, 1 << n, chunk):
        idx = np.arange(start, min(1 << n, start + chunk), dtype=np.int64)
        X = ((idx[:, None] >> shifts) & 1).astype(np.int8)
        ok = np.ones(idx.size, dtype=bool)
        for c in formula.clauses:
            sat = np.zeros(idx.size, dtype=bool)
            for v, neg in c:
                sat |= X[:, v] == (0 if neg else 1)
            ok &= sat
        total += int(ok.sum())
        counts += X[ok].sum(axis=0)
    if total == 0:
        raise ValueError("formula is unsatisfiable")
    return counts / total, total


def random_ksat(n: int, alpha: float, k: int, rng: np.random.Generator, allow_repeats: bool = True) -> CnfFormula:
    """``round(n alpha)`` clauses on uniform ``k``-subsets with uniform signs."""
    if k < 1 or n < k:
        raise ValueError("need n >= k >= 1")
    m = int(round(n * alpha))
    if m > math.comb(n, k) * 2 ** k:
        raise ValueError("more clauses requested than distinct clauses exist")
    clauses, seen = [], set()
    repeated = 0
    while len(clauses) < m:
        vars_ = rng.choice(n, size=k, replace=False)
        signs = rng.integers(0, 2, size=k).astype(bool)
        c = tuple(sorted(zip(vars_.tolist(), signs.tolist())))
        if c in seen:
            if not allow_repeats:
                continue
            repeated += 1
        seen.add(c)
        clauses.append(c)
    return CnfFormula(n, clauses, repeated)


# ----------------------------------------------------------------------
@dataclass
class TreeFormula:
    """A formula whose factor graph is a tree rooted at variable ``0``."""

    formula: CnfFormula
    depth: np.ndarray  # generation of each variable (root = 0)
    parent_clause: np.ndarray  # clause through which each variable hangs (-1 for the root)
    clause_parent: np.ndarray  # variable each clause hangs from
    t: int

    @property
    def boundary(self) -> np.ndarray:
        return np.flatnonzero(self.depth == self.t)


def sample_tree_formula(k: int, alpha: float, t: int, rng: np.random.Generator) -> TreeFormula:
    """Galton-Watson tree: every variable above depth ``t`` gets Poisson(k alpha) clauses.

    Each clause holds its parent plus ``k - 1`` new variables with uniform
    signs on all ``k`` literals.
    """
    if t < 0 or k < 2:
        raise ValueError("need t >= 0 and k >= 2")
    depth = [0]
    parent_clause = [-1]
    clause_parent = []
    clauses = []
    frontier = [0]
    for gen in range(t):
        nxt = []
        for v in frontier:
            for _ in range(rng.poisson(k * alpha)):
                kids = list(range(len(depth), len(depth) + k - 1))
                a = len(clauses)
                depth += [gen + 1] * (k - 1)
                parent_clause += [a] * (k - 1)
                signs = rng.integers(0, 2, size=k).astype(bool)
                clauses.append(tuple(zip([v] + kids, signs.tolist())))
                clause_parent.append(v)
                nxt += kids
        frontier = nxt
    return TreeFormula(formula=CnfFormula(len(depth), clauses), depth=np.array(depth),
                       parent_clause=np.array(parent_clause, dtype=np.int64),
                       clause_parent=np.array(clause_parent, dtype=np.int64), t=t)


def _root_log_ratio(tree: TreeFormula, boundary_values: np.ndarray) -> np.ndarray:
    """Half log-ratio ``P(root=T)/P(root=F)`` for each row of boundary values.

    Exact elimination from the leaves up; ``nan`` marks an assignment that
    cannot be extended to a solution.
    """
    f = tree.formula
    nb = boundary_values.shape[0]
    Z = np.ones((f.n_vars, nb, 2))
    for col, v in enumerate(tree.boundary):
        Z[v] = 0.0
        Z[v, np.arange(nb), boundary_values[:, col]] = 1.0
    order = np.argsort(-tree.depth[tree.clause_parent]) if f.n_clauses else []
    for a in order:
        clause = f.clauses[a]
        (p, pneg), kids = clause[0], clause[1:]
        free = np.ones(nb)
        viol = np.ones(nb)
        for v, neg in kids:
            free *= Z[v].sum(axis=1)
            viol *= Z[v][:, 1 if neg else 0]
        msg = np.stack([free, free], axis=1)
        msg[:, 1 if pneg else 0] -= viol
        # rescale to keep magnitudes tame in deep trees
        scale = msg.max(axis=1, keepdims=True)
        scale[scale == 0] = 1.0
        Z[p] *= msg / scale
    r = Z[0]
    with np.errstate(divide="ignore", invalid="ignore"):
        h = 0.5 * (np.log(r[:, 1]) - np.log(r[:, 0]))
    h[(r[:, 0] == 0) & (r[:, 1] == 0)] = np.nan
    return h


def decay_probe(tree: TreeFormula, method: str = "exhaustive", samples: int = 1000,
                rng: np.random.Generator | None = None, max_boundary: int = 20) -> tuple[float, float]:
    """Extremes of the root half log-ratio over admissible boundary assignments.

    ``exhaustive`` tries every boundary assignment; ``sampled`` draws
    ``samples`` uniform ones (so the spread it reports is a lower bound);
    ``auto`` is exhaustive up to ``max_boundary`` boundary variables and
    sampled beyond.
    Returns ``(h_max, h_min)``; both are zero for an empty boundary.
    """
    nb = tree.boundary.size
    if nb == 0 or tree.t == 0:
        return 0.0, 0.0
    if method == "auto":
        method = "exhaustive" if nb <= max_boundary else "sampled"
    if method == "exhaustive":
        if nb > max_boundary:
            raise ValueError(f"boundary of {nb} variables exceeds the exhaustive budget {max_boundary}")
        idx = np.arange(1 << nb, dtype=np.int64)
        vals = ((idx[:, None] >> np.arange(nb)) & 1).astype(np.int64)
    elif method == "sampled":
        rng = rng if rng is not None else np.random.default_rng()
        vals = rng.integers(0, 2, size=(samples, nb))
    else:
        raise ValueError("method must be 'exhaustive', 'sampled' or 'auto'")
    h = _root_log_ratio(tree, vals)
    h = h[~np.isnan(h)]
    if h.size == 0:
        raise ValueError("no admissible boundary assignment")
    return float(h.max()), float(h.min())


def root_influence(h_max: float, h_min: float) -> float:
    """Largest change in ``P(root = True)`` caused by the boundary."""
    return _sigmoid2(h_max) - _sigmoid2(h_min)


def _sigmoid2(h: float) -> float:
    if h == math.inf:
        return 1.0
    if h == -math.inf:
        return 0.0
    return 1.0 / (1.0 + math.exp(-2.0 * h))
