"""Decoders for codes on Tanner graphs.

* :func:`bp_decode` runs belief propagation with the flooding schedule on
  half log-likelihood messages.
* :func:`bit_flip_decode` is the greedy flipping algorithm that repeatedly
  flips a random bit that sits in more unsatisfied than satisfied checks.
* :func:`map_decode_bruteforce` enumerates a small code exactly and returns
  word-MAP and symbol-MAP decisions with the exact posterior marginals.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .channels import ChannelModel
from .codes import TannerGraph
from .gf2 import CodeSpace, ParityCheckMatrix
from .messages import L_MAX, atanh_from_log, log_abs_tanh

__all__ = [
    "BpResult",
    "FlipResult",
    "MapResult",
    "bp_decode",
    "bp_check_messages",
    "bit_flip_decode",
    "map_decode_bruteforce",
    "unsat_count",
]


@dataclass
class BpResult:
    bits: np.ndarray
    llr: np.ndarray  # posterior half-LLR B_i + sum of incoming check messages
    iterations: int
    converged: bool
    ties: int = 0
    error_trace: list[int] | None = None
    messages: list[tuple[np.ndarray, np.ndarray]] | None = field(default=None, repr=False)


def bp_check_messages(graph: TannerGraph, h: np.ndarray, l_max: float = L_MAX) -> np.ndarray:
    """Check-to-variable messages ``u`` from variable-to-check messages ``h``.

    Extrinsic products are formed from prefix and suffix sums of
    ``ln|tanh h|`` so no subtraction (and no cancellation) takes place.
    """
    u = np.zeros_like(h)
    logt = log_abs_tanh(h)
    neg = np.where(h < 0.0, -1.0, 1.0)
    for idx in graph.check_groups():
        L = logt[idx]
        S = neg[idx]
        d = idx.shape[1]
        pre = np.zeros_like(L)
        suf = np.zeros_like(L)
        spre = np.ones_like(S)
        ssuf = np.ones_like(S)
        if d > 1:
            pre[:, 1:] = np.cumsum(L[:, :-1], axis=1)
            suf[:, :-1] = np.cumsum(L[:, :0:-1], axis=1)[:, ::-1]
            spre[:, 1:] = np.cumprod(S[:, :-1], axis=1)
            ssuf[:, :-1] = np.cumprod(S[:, :0:-1], axis=1)[:, ::-1]
        # a degree-one check has an empty product and pins its bit to zero
        u[idx] = spre * ssuf * atanh_from_log(pre + suf)
    np.clip(u, -l_max, l_max, out=u)
    return u


def bp_decode(graph: TannerGraph, llrs, max_iter: int = 200, rng: np.random.Generator | None = None,
              truth=None, early_stop: bool = True, l_max: float = L_MAX,
              record_messages: bool = False) -> BpResult:
    """Flooding-schedule belief propagation.

    ``llrs`` are channel half-LLRs (``+-inf`` allowed).  Decisions follow
    the sign of the posterior; an exact zero is settled by a fair coin drawn
    from ``rng``.  With ``early_stop`` the decoder returns as soon as the
    hard decision satisfies every check, including before the first
    iteration.
    """
    B = np.asarray(llrs, dtype=float)
    if B.shape != (graph.n,):
        raise ValueError(f"expected {graph.n} channel LLRs, got shape {B.shape}")
    if np.isnan(B).any():
        raise ValueError("channel LLRs contain NaN")
    if max_iter < 0:
        raise ValueError("max_iter must be non-negative")
    rng = rng if rng is not None else np.random.default_rng()
    truth = None if truth is None else np.asarray(truth, dtype=np.int64)
    ev = graph.edge_var
    Bc = np.clip(B, -l_max, l_max)
    u = np.zeros(graph.n_edges)
    trace = [] if truth is not None else None
    messages = [] if record_messages else None
    ties_total = 0

    def decide(u):
        nonlocal ties_total
        total = B + np.bincount(ev, weights=u, minlength=graph.n)
        bits = (total < 0).astype(np.int64)
        tie = total == 0
        nt = int(tie.sum())
        if nt:
            bits[tie] = rng.integers(0, 2, size=nt)
            ties_total += nt
        if trace is not None:
            trace.append(int(np.count_nonzero(bits != truth)))
        return bits, total

    bits, total = decide(u)
    converged = graph.is_codeword(bits)
    it = 0
    if not (early_stop and converged):
        for it in range(1, max_iter + 1):
            sum_u = np.bincount(ev, weights=u, minlength=graph.n)
            h = np.clip(Bc[ev] + sum_u[ev] - u, -l_max, l_max)
            u = bp_check_messages(graph, h, l_max)
            if messages is not None:
                messages.append((h, u.copy()))
            bits, total = decide(u)
            converged = graph.is_codeword(bits)
            if early_stop and converged:
                break
    return BpResult(bits=bits, llr=total, iterations=it, converged=bool(converged), ties=ties_total,
                    error_trace=trace, messages=messages)


def unsat_count(graph: TannerGraph, x) -> int:
    return graph.unsat_count(x)


# ----------------------------------------------------------------------
@dataclass
class FlipResult:
    bits: np.ndarray
    unsat_trace: np.ndarray
    iterations: int
    converged: bool

    @property
    def residual_unsat(self) -> int:
        return int(self.unsat_trace[-1])


@njit(cache=True)
def _flip_kernel(var_ptr, var_chk, chk_ptr, chk_var, x, max_iter, uniforms):
    n = var_ptr.size - 1
    m = chk_ptr.size - 1
    s = np.zeros(m, dtype=np.int64)
    for a in range(m):
        acc = 0
        for e in range(chk_ptr[a], chk_ptr[a + 1]):
            acc ^= x[chk_var[e]]
        s[a] = acc
    unsat = np.zeros(n, dtype=np.int64)
    deg = np.zeros(n, dtype=np.int64)
    for i in range(n):
        deg[i] = var_ptr[i + 1] - var_ptr[i]
        for e in range(var_ptr[i], var_ptr[i + 1]):
            unsat[i] += s[var_chk[e]]
    pos = np.full(n, -1, dtype=np.int64)
    elig = np.empty(n, dtype=np.int64)
    ne = 0
    for i in range(n):
        if 2 * unsat[i] > deg[i]:
            pos[i] = ne
            elig[ne] = i
            ne += 1
    total = 0
    for a in range(m):
        total += s[a]
    trace = np.empty(max_iter + 1, dtype=np.int64)
    trace[0] = total
    it = 0
    while it < max_iter and ne > 0:
        j = int(uniforms[it] * ne)
        if j >= ne:
            j = ne - 1
        i = elig[j]
        x[i] ^= 1
        for e in range(var_ptr[i], var_ptr[i + 1]):
            a = var_chk[e]
            s[a] ^= 1
            delta = 1 if s[a] == 1 else -1
            total += delta
            for e2 in range(chk_ptr[a], chk_ptr[a + 1]):
                v = chk_var[e2]
                unsat[v] += delta
                ok = 2 * unsat[v] > deg[v]
                if ok and pos[v] < 0:
                    pos[v] = ne
                    elig[ne] = v
                    ne += 1
                elif (not ok) and pos[v] >= 0:
                    last = elig[ne - 1]
                    elig[pos[v]] = last
                    pos[last] = pos[v]
                    pos[v] = -1
                    ne -= 1
        it += 1
        trace[it] = total
    return x, trace[: it + 1], it


def bit_flip_decode(graph: TannerGraph, y, rng: np.random.Generator, max_iter: int | None = None) -> FlipResult:
    """Greedy bit flipping on hard decisions ``y``.

    Each step flips a uniformly chosen bit having more unsatisfied than
    satisfied incident checks, so the number of unsatisfied checks drops by
    at least one per step.  Stops when no such bit exists.
    """
    y = np.asarray(y)
    if y.shape != (graph.n,) or not np.all((y == 0) | (y == 1)):
        raise ValueError("bit flipping needs a hard-decision word of 0/1 values")
    cap = graph.m if max_iter is None else int(max_iter)
    uniforms = rng.random(cap)
    var_chk = graph.edge_chk[graph.var_edges]
    x, trace, it = _flip_kernel(graph.var_ptr, var_chk, graph.chk_ptr, graph.edge_var,
                                y.astype(np.int64).copy(), cap, uniforms)
    return FlipResult(bits=x, unsat_trace=trace, iterations=int(it), converged=bool(trace[-1] == 0))


# ----------------------------------------------------------------------
@dataclass
class MapResult:
    word: np.ndarray  # a word-MAP codeword (lowest index among ties)
    word_ties: int  # number of codewords sharing the maximal likelihood
    marginals: np.ndarray  # P(x_i = 1 | y)
    symbol_bits: np.ndarray
    symbol_ties: np.ndarray  # bits whose posterior is exactly one half
    n_codewords: int
    map_words: np.ndarray = field(repr=False, default=None)


def _code_space(code) -> CodeSpace:
    if isinstance(code, TannerGraph):
        return code.to_parity_check().space()
    if isinstance(code, ParityCheckMatrix):
        return code.space()
    return ParityCheckMatrix.from_dense(np.asarray(code)).space()


def map_decode_bruteforce(code, channel: ChannelModel, y, max_dimension: int = 24,
                          tie_tol: float = 1e-9) -> MapResult:
    """Exact MAP decoding by enumerating every codeword.

    ``code`` may be a Tanner graph, a packed parity-check matrix or a dense
    0/1 matrix.  The energy of ``x`` is ``-sum_i ln Q(y_i | x_i)``.
    """
    space = _code_space(code)
    if space.dimension > max_dimension:
        raise ValueError(f"code dimension {space.dimension} exceeds the enumeration budget {max_dimension}")
    y = np.asarray(y)
    if y.shape[0] != space.n:
        raise ValueError("received word has the wrong length")
    ll0 = np.asarray(channel.log_transition_prob(np.zeros(space.n, dtype=np.int64), y), dtype=float)
    ll1 = np.asarray(channel.log_transition_prob(np.ones(space.n, dtype=np.int64), y), dtype=float)
    words, logl = [], []
    for block in space.enumerate():
        words.append(block)
        logl.append(np.where(block == 1, ll1, ll0).sum(axis=1))
    words = np.vstack(words)
    logl = np.concatenate(logl)
    best = logl.max()
    if not np.isfinite(best):
        raise ValueError("received word is impossible under every codeword")
    w = np.exp(logl - best)
    marg = (w @ words) / w.sum()
    top = np.abs(logl - best) <= tie_tol * (1.0 + abs(best))
    ties = np.abs(marg - 0.5) <= 1e-12
    symbol = (marg > 0.5).astype(np.int64)
    idx = np.flatnonzero(top)
    return MapResult(word=words[idx[0]].astype(np.int64), word_ties=int(idx.size), marginals=marg,
                     symbol_bits=symbol, symbol_ties=ties, n_codewords=int(words.shape[0]),
                     map_words=words[idx].astype(np.int64))
