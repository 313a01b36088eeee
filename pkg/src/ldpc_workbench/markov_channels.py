"""Finite-state Markov channels (generalised Gilbert-Elliott).

A hidden state ``sigma_t`` follows a Markov chain with column-stochastic
transition matrix ``P[next, current]``.  At each step the chain moves and
the *new* state selects the crossover probability of a binary symmetric
channel, so one step has kernel

    p(x_t, y_t, sigma_t | sigma_{t-1}) = 1/2 P[sigma_t, sigma_{t-1}] BSC_{eps[sigma_t]}(y_t | x_t)

for uniformly distributed inputs.  Entropy rates come from the normalised
forward recursion; joint decoding alternates a forward-backward pass over
the state chain with belief-propagation iterations on the code.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numba import njit

from .codes import TannerGraph
from .decoders import bp_check_messages
from .messages import L_MAX

__all__ = [
    "MarkovChannelSpec",
    "steady_state",
    "example_three_state",
    "sample_states",
    "sample_channel",
    "forward_filter",
    "ForwardState",
    "forward_state",
    "load_spec",
    "log2_likelihood",
    "EntropyRates",
    "entropy_rates",
    "channel_llrs",
    "GecDecodeResult",
    "joint_decode_gec",
    "llr_histograms",
]


def steady_state(P: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Stationary distribution of a column-stochastic matrix.

    Solves ``p (I - P^T + E) = e`` with ``E`` the all-ones matrix and ``e``
    the all-ones row; this system is regular exactly when the chain has a
    unique stationary law.  Falls back to power iteration otherwise.
    """
    P = np.asarray(P, dtype=float)
    s = P.shape[0]
    A = np.eye(s) - P.T + np.ones((s, s))
    try:
        p = np.linalg.solve(A.T, np.ones(s))
        if np.all(p >= -tol) and np.max(np.abs(P @ p - p)) <= tol:
            return np.clip(p, 0.0, None) / np.clip(p, 0.0, None).sum()
    except np.linalg.LinAlgError:
        pass
    p = np.full(s, 1.0 / s)
    for _ in range(1_000_000):
        nxt = 0.5 * (p + P @ p)  # lazy chain avoids oscillation on periodic chains
        if np.max(np.abs(nxt - p)) < tol * 1e-2:
            p = nxt
            break
        p = nxt
    return p / p.sum()


@dataclass
class MarkovChannelSpec:
    transition: np.ndarray  # P[next, current]
    eps: np.ndarray
    init: np.ndarray | None = None

    def __post_init__(self):
        P = np.asarray(self.transition, dtype=float)
        eps = np.asarray(self.eps, dtype=float)
        if P.ndim != 2 or P.shape[0] != P.shape[1]:
            raise ValueError("transition matrix must be square")
        if np.any(P < 0) or np.max(np.abs(P.sum(axis=0) - 1.0)) > 1e-12:
            raise ValueError("transition matrix must be column-stochastic (columns sum to one)")
        if eps.shape != (P.shape[0],) or np.any(eps < 0) or np.any(eps > 0.5):
            raise ValueError("need one crossover probability in [0, 1/2] per state")
        self.transition = P
        self.eps = eps
        if self.init is None:
            self.init = steady_state(P)
        else:
            init = np.asarray(self.init, dtype=float)
            if init.shape != eps.shape or abs(init.sum() - 1.0) > 1e-12 or np.any(init < 0):
                raise ValueError("initial distribution must be a probability vector over the states")
            self.init = init

    @property
    def n_states(self) -> int:
        return int(self.eps.size)

    @property
    def ergodic(self) -> bool:
        """Irreducible and aperiodic, i.e. some power of ``P`` is strictly positive.

        By Wielandt's bound it is enough to look at the power ``(s-1)^2 + 1``.
        """
        s = self.n_states
        reach = (self.transition > 0).astype(np.int64)
        power = np.linalg.matrix_power(reach, (s - 1) ** 2 + 1)
        return bool(np.all(power > 0))

    def stationary(self) -> np.ndarray:
        return steady_state(self.transition)

    def average_crossover(self) -> float:
        return float(self.stationary() @ self.eps)


def example_three_state() -> MarkovChannelSpec:
    """Three-state example: two sticky good/medium states and a rarely visited bad one."""
    P = np.array([[0.99, 0.005, 0.02],
                  [0.005, 0.99, 0.02],
                  [0.005, 0.005, 0.96]])
    return MarkovChannelSpec(P, np.array([0.01, 0.11, 0.5]))


# ----------------------------------------------------------------------
@njit(cache=True)
def _sample_chain(cum_cols, init_cum, u0, uniforms):
    n = uniforms.size
    s = init_cum.size
    states = np.empty(n, dtype=np.int64)
    cur = 0
    while cur < s - 1 and u0 > init_cum[cur]:
        cur += 1
    for t in range(n):
        r = uniforms[t]
        nxt = 0
        while nxt < s - 1 and r > cum_cols[nxt, cur]:
            nxt += 1
        states[t] = nxt
        cur = nxt
    return states


def sample_states(spec: MarkovChannelSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    """States ``sigma_1 .. sigma_n`` (the emitting states) of the hidden chain."""
    cum = np.cumsum(spec.transition, axis=0)
    return _sample_chain(cum, np.cumsum(spec.init), rng.random(), rng.random(n))


def sample_channel(spec: MarkovChannelSpec, x, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Pass bits ``x`` through the channel; returns ``(y, states)``."""
    x = np.asarray(x, dtype=np.int64)
    states = sample_states(spec, x.size, rng)
    flips = rng.random(x.size) < spec.eps[states]
    return x ^ flips.astype(np.int64), states


@njit(cache=True)
def _forward(P, eps, init, y, x, use_x, keep):
    n = y.size
    s = eps.size
    nu = init.copy()
    log2sum = 0.0
    hist = np.empty((n if keep else 0, s))
    nxt = np.empty(s)
    for t in range(n):
        lam = 0.0
        for j in range(s):
            acc = 0.0
            for i in range(s):
                acc += P[j, i] * nu[i]
            if use_x:
                e = 0.5 * ((1.0 - eps[j]) if y[t] == x[t] else eps[j])
            else:
                e = 0.5
            nxt[j] = acc * e
            lam += nxt[j]
        if lam <= 0.0:
            return -np.inf, hist
        for j in range(s):
            nu[j] = nxt[j] / lam
            if keep:
                hist[t, j] = nu[j]
        log2sum += math.log2(lam)
    return log2sum, hist


def log2_likelihood(spec: MarkovChannelSpec, y, x=None) -> float:
    """``log2 p(y)`` or ``log2 p(x, y)`` from the normalised forward recursion."""
    y = np.asarray(y, dtype=np.int64)
    xx = y if x is None else np.asarray(x, dtype=np.int64)
    val, _ = _forward(spec.transition, spec.eps, spec.init, y, xx, x is not None, False)
    return float(val)


def forward_filter(spec: MarkovChannelSpec, y, x=None) -> np.ndarray:
    """Normalised forward messages: row ``t`` is ``p(sigma_{t+1} | y_1..y_{t+1}[, x])``."""
    y = np.asarray(y, dtype=np.int64)
    xx = y if x is None else np.asarray(x, dtype=np.int64)
    _, hist = _forward(spec.transition, spec.eps, spec.init, y, xx, x is not None, True)
    return hist


@dataclass
class ForwardState:
    """Normalised forward message after the last observation.

    ``nu`` is ``p(sigma_N | y[, x])`` and ``log2_norm`` the accumulated
    ``sum_t log2 lambda_t``, so ``2**log2_norm * nu`` is the unnormalised
    ``p(sigma_N, y[, x])``.
    """

    nu: np.ndarray
    log2_norm: float

    def unnormalised(self) -> np.ndarray:
        return np.exp2(self.log2_norm) * self.nu


def forward_state(spec: MarkovChannelSpec, y, x=None) -> ForwardState:
    y = np.asarray(y, dtype=np.int64)
    if y.size == 0:
        return ForwardState(nu=spec.init.copy(), log2_norm=0.0)
    xx = y if x is None else np.asarray(x, dtype=np.int64)
    val, hist = _forward(spec.transition, spec.eps, spec.init, y, xx, x is not None, True)
    return ForwardState(nu=hist[-1].copy(), log2_norm=float(val))


def load_spec(path) -> MarkovChannelSpec:
    """Read a JSON object with keys ``P`` (column-stochastic), ``eps`` and optional ``init``."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc.strerror or exc}") from exc
    try:
        return MarkovChannelSpec(np.array(raw["P"], dtype=float), np.array(raw["eps"], dtype=float),
                                 None if raw.get("init") is None else np.array(raw["init"], dtype=float))
    except KeyError as exc:
        raise ValueError(f"{path}: missing key {exc}") from None


@dataclass
class EntropyRates:
    h_y: float  # H(Y)/N in bits
    h_yx: float  # H(Y, X)/N in bits
    n: int

    @property
    def h_y_given_x(self) -> float:
        return self.h_yx - 1.0  # inputs are uniform: H(X)/N = 1

    @property
    def information_rate(self) -> float:
        return self.h_y - self.h_y_given_x


def entropy_rates(spec: MarkovChannelSpec, n: int, rng: np.random.Generator | int | None = None) -> EntropyRates:
    """Monte Carlo entropy rates from one long simulated input/output sequence."""
    if n < 1:
        raise ValueError("sequence length must be positive")
    rng = np.random.default_rng(rng)
    x = rng.integers(0, 2, size=n, dtype=np.int64)
    y, _ = sample_channel(spec, x, rng)
    return EntropyRates(h_y=-log2_likelihood(spec, y) / n, h_yx=-log2_likelihood(spec, y, x) / n, n=n)


# ----------------------------------------------------------------------
@njit(cache=True)
def _bsc(eps, y, x):
    return (1.0 - eps) if y == x else eps


@njit(cache=True)
def _channel_messages(P, eps, init, y, prior1, lo, hi, mu):
    """Forward-backward over positions ``lo..hi-1``; writes ``mu[t, x]`` for those ``t``."""
    s = eps.size
    n = hi - lo
    alpha = np.empty((n + 1, s))
    for i in range(s):
        alpha[0, i] = init[i]
    emit = np.empty((n, s))
    for t in range(n):
        yt = y[lo + t]
        for j in range(s):
            emit[t, j] = (1.0 - prior1[lo + t]) * _bsc(eps[j], yt, 0) + prior1[lo + t] * _bsc(eps[j], yt, 1)
    for t in range(n):
        tot = 0.0
        for j in range(s):
            acc = 0.0
            for i in range(s):
                acc += P[j, i] * alpha[t, i]
            alpha[t + 1, j] = acc * emit[t, j]
            tot += alpha[t + 1, j]
        if tot <= 0.0:
            tot = 1.0
        for j in range(s):
            alpha[t + 1, j] /= tot
    beta = np.ones(s)
    nb = np.empty(s)
    for t in range(n - 1, -1, -1):
        yt = y[lo + t]
        m0 = 0.0
        m1 = 0.0
        for j in range(s):
            pred = 0.0
            for i in range(s):
                pred += P[j, i] * alpha[t, i]
            m0 += pred * _bsc(eps[j], yt, 0) * beta[j]
            m1 += pred * _bsc(eps[j], yt, 1) * beta[j]
        mu[lo + t, 0] = m0
        mu[lo + t, 1] = m1
        tot = 0.0
        for i in range(s):
            acc = 0.0
            for j in range(s):
                acc += P[j, i] * emit[t, j] * beta[j]
            nb[i] = acc
            tot += acc
        if tot <= 0.0:
            tot = 1.0
        for i in range(s):
            beta[i] = nb[i] / tot


@njit(cache=True)
def _windowed_messages(P, eps, init, y, prior1, radius, mu):
    n = y.size
    tmp = np.empty((n, 2))
    for t in range(n):
        lo = max(0, t - radius)
        hi = min(n, t + radius + 1)
        _channel_messages(P, eps, init, y, prior1, lo, hi, tmp)
        mu[t, 0] = tmp[t, 0]
        mu[t, 1] = tmp[t, 1]


def channel_llrs(spec: MarkovChannelSpec, y, prior_llr=None, window: int | None = None,
                 l_max: float = L_MAX) -> np.ndarray:
    """Half-LLRs for each bit from the state chain, excluding the bit's own code prior.

    ``prior_llr`` is the code's current opinion of every bit (half-LLR);
    it shapes the state estimates at the other positions.  ``window``
    restricts each estimate to observations within that distance (the
    windowed forward-backward pass starts from the stationary law).
    """
    y = np.asarray(y, dtype=np.int64)
    n = y.size
    prior = np.zeros(n) if prior_llr is None else np.asarray(prior_llr, dtype=float)
    prior1 = 1.0 / (1.0 + np.exp(np.clip(2.0 * prior, -700, 700)))
    mu = np.empty((n, 2))
    if window is None:
        _channel_messages(spec.transition, spec.eps, spec.init, y, prior1, 0, n, mu)
    else:
        _windowed_messages(spec.transition, spec.eps, spec.stationary(), y, prior1, int(window), mu)
    with np.errstate(divide="ignore"):
        llr = 0.5 * (np.log(mu[:, 0]) - np.log(mu[:, 1]))
    return np.clip(np.nan_to_num(llr, nan=0.0), -l_max, l_max)


@dataclass
class GecDecodeResult:
    bits: np.ndarray
    channel_llr: np.ndarray  # half-LLRs delivered by the state chain in the last round
    posterior_llr: np.ndarray
    iterations: int
    converged: bool
    error_trace: list[int] | None = field(default=None)


def joint_decode_gec(graph: TannerGraph, spec: MarkovChannelSpec, y, rounds: int = 100,
                     rng: np.random.Generator | None = None, window: int | None = None,
                     genie_states=None, truth=None, early_stop: bool = True,
                     l_max: float = L_MAX) -> GecDecodeResult:
    """Alternate channel-state estimation and one BP iteration per round.

    With ``genie_states`` the true state sequence replaces the estimate and
    the channel messages are the per-state BSC LLRs.
    """
    y = np.asarray(y, dtype=np.int64)
    if y.shape != (graph.n,):
        raise ValueError("received word length does not match the code")
    rng = rng if rng is not None else np.random.default_rng()
    ev = graph.edge_var
    u = np.zeros(graph.n_edges)
    trace = [] if truth is not None else None
    truth = None if truth is None else np.asarray(truth)
    if genie_states is not None:
        e = spec.eps[np.asarray(genie_states)]
        with np.errstate(divide="ignore"):
            mag = 0.5 * (np.log1p(-e) - np.log(e))
        genie = np.clip((1 - 2 * y) * mag, -l_max, l_max)
    B = np.zeros(graph.n)
    bits = np.zeros(graph.n, dtype=np.int64)
    total = np.zeros(graph.n)
    converged = False
    it = 0
    for it in range(1, rounds + 1):
        sum_u = np.bincount(ev, weights=u, minlength=graph.n)
        B = genie if genie_states is not None else channel_llrs(spec, y, sum_u, window, l_max)
        h = np.clip(B[ev] + sum_u[ev] - u, -l_max, l_max)
        u = bp_check_messages(graph, h, l_max)
        total = B + np.bincount(ev, weights=u, minlength=graph.n)
        bits = (total < 0).astype(np.int64)
        tie = total == 0
        if tie.any():
            bits[tie] = rng.integers(0, 2, size=int(tie.sum()))
        if trace is not None:
            trace.append(int(np.count_nonzero(bits != truth)))
        converged = graph.is_codeword(bits)
        if early_stop and converged:
            break
    return GecDecodeResult(bits=bits, channel_llr=B, posterior_llr=total, iterations=it,
                           converged=bool(converged), error_trace=trace)


def llr_histograms(llr_half: np.ndarray, bins: int = 200, limit: float = 6.0) -> dict:
    """Histograms in both conventions: half-LLR and full log-likelihood ratio."""
    llr_half = np.asarray(llr_half, dtype=float)
    out = {}
    for name, vals, lim in (("half", llr_half, limit / 2.0), ("full", 2.0 * llr_half, limit)):
        counts, edges = np.histogram(np.clip(vals, -lim, lim), bins=bins, range=(-lim, lim))
        out[name] = (counts, edges)
    return out
