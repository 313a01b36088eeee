"""Replica-symmetric estimate of the conditional entropy and the MAP threshold.

Fixed points of density evolution are found by population dynamics from
two starting points: perfect knowledge (all messages ``+inf``) and no
knowledge (all check messages zero).  For each fixed point the functional

    phi = -l E log2[sum_x P_u(x) P_h(x)]
          + E_y E log2[sum_x Q(y|x)/Q(y|0) prod_{i<=l} P_{u_i}(x)]
          + (l/k) E log2[(1 + prod_{i<=k} tanh h_i) / 2]

is estimated by Monte Carlo, with ``P_u(0) = 1 / (1 + e^{-2u})``.  The
largest value over the fixed points found is the conditional-entropy
estimate per bit, ``H(X|Y)/N`` in bits.  The MAP threshold is where this
estimate turns positive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .channels import ChannelModel
from .density_evolution import ThresholdResult, _bisect, check_population, variable_population
from .messages import L_MAX, LN2, log_abs_tanh, softplus

__all__ = [
    "RsSettings",
    "FixedPoint",
    "RsEstimate",
    "RsResult",
    "cdf_residual",
    "find_fixed_point",
    "rs_functional",
    "conditional_entropy_rs",
    "map_threshold",
]

INITS = ("no_error", "zero")


@dataclass(frozen=True)
class RsSettings:
    pop_size: int = 100_000
    t_max: int = 500
    t_min: int = 50
    tol: float = 3e-3
    samples: int = 1_000_000
    l_max: float = L_MAX
    bins: int = 512


@dataclass
class FixedPoint:
    u: np.ndarray = field(repr=False)
    h: np.ndarray = field(repr=False)
    init: str
    iterations: int
    residual: float
    converged: bool


@dataclass
class RsEstimate:
    value: float  # bits per variable
    stderr: float


@dataclass
class RsResult:
    value: float
    per_init: dict[str, tuple[RsEstimate, FixedPoint]]


def cdf_residual(a: np.ndarray, b: np.ndarray, l_max: float = L_MAX, bins: int = 512) -> float:
    """Largest gap between two empirical CDFs on a grid over ``[-l_max, l_max]``.

    The atoms at ``-inf`` and ``+inf`` are compared separately.
    """
    grid = np.linspace(-l_max, l_max, bins + 1)
    sa, sb = np.sort(a), np.sort(b)
    fa = np.searchsorted(sa, grid, side="right") / sa.size
    fb = np.searchsorted(sb, grid, side="right") / sb.size
    gaps = [np.max(np.abs(fa - fb)),
            abs(np.mean(a == -np.inf) - np.mean(b == -np.inf)),
            abs(np.mean(a == np.inf) - np.mean(b == np.inf))]
    return float(max(gaps))


def find_fixed_point(l: int, k: int, channel: ChannelModel, init: str = "zero",
                     settings: RsSettings = RsSettings(), rng: np.random.Generator | int | None = None) -> FixedPoint:
    """Iterate population dynamics until successive variable populations agree.

    The stopping test compares the CDF residual against ``settings.tol`` or
    against the sampling noise of two independent populations of this size,
    whichever is larger; otherwise the run stops at ``t_max`` and reports
    ``converged=False``.  The returned ``u`` population is regenerated from
    the final ``h`` population by the check rule.
    """
    if init not in INITS:
        raise ValueError(f"init must be one of {INITS}")
    if not channel.symmetric:
        raise ValueError("the replica-symmetric functional is implemented for symmetric channels")
    rng = np.random.default_rng(rng)
    n = settings.pop_size
    u = np.full(n, np.inf) if init == "no_error" else np.zeros(n)
    h = None
    tol = max(settings.tol, 1.5 * math.sqrt(2.0 / n))
    residual = math.inf
    t = 0
    converged = False
    for t in range(1, settings.t_max + 1):
        h_new = variable_population(u, channel.sample_llr_given_zero(n, rng), l, rng, settings.l_max)
        u = check_population(h_new, k, n, rng, settings.l_max)
        if h is not None:
            residual = cdf_residual(h, h_new, settings.l_max, settings.bins)
        h = h_new
        if residual <= tol and (t >= settings.t_min or residual == 0.0):
            converged = True
            break
    u = check_population(h, k, n, rng, settings.l_max)
    return FixedPoint(u=u, h=h, init=init, iterations=t, residual=residual, converged=converged)


def _edge_term(u, h):
    with np.errstate(invalid="ignore"):
        val = softplus(-2.0 * (u + h)) - softplus(-2.0 * u) - softplus(-2.0 * h)
    return np.nan_to_num(val, nan=0.0) / LN2


def _variable_term(u, llr):
    with np.errstate(invalid="ignore"):
        total = llr + u.sum(axis=1)
        val = softplus(-2.0 * total) - softplus(-2.0 * u).sum(axis=1)
    return np.nan_to_num(val, nan=0.0) / LN2


def _check_term(h):
    sign = np.prod(np.where(h < 0, -1.0, 1.0), axis=1)
    L = log_abs_tanh(h).sum(axis=1)
    with np.errstate(divide="ignore"):
        val = np.where(sign > 0, np.log1p(np.exp(L)), np.log(-np.expm1(L))) - LN2
    return val / LN2


def _h2_of_product(log_t: np.ndarray) -> np.ndarray:
    """``h2((1 + T) / 2)`` in bits where ``ln T = log_t`` (``T`` in ``[0, 1]``)."""
    with np.errstate(divide="ignore", invalid="ignore"):
        T = np.exp(log_t)
        one_minus = -np.expm1(log_t)
        a = (1.0 + T) / 2.0
        b = one_minus / 2.0
        val = -(a * np.log(a)) - np.where(b > 0, b * np.log(b), 0.0)
    return val / LN2


def _sign_pattern_entropy(mags: np.ndarray) -> np.ndarray:
    """Entropy (bits) of independent message signs modulo a global flip.

    ``mags`` holds ``|m_j|`` for each sample (rows); the sign of message
    ``j`` is ``+`` with probability ``1 / (1 + e^{-2|m_j|})``.
    """
    r = mags.shape[1]
    lp = -softplus(-2.0 * mags)  # log P(+)
    lm = -softplus(2.0 * mags)  # log P(-)
    pats = ((np.arange(1 << (r - 1))[:, None] >> np.arange(r - 1)) & 1).astype(bool)
    pats = np.hstack([np.zeros((pats.shape[0], 1), dtype=bool), pats])
    out = np.zeros(mags.shape[0])
    for pat in pats:
        a = np.where(pat, lm, lp).sum(axis=1)
        b = np.where(pat, lp, lm).sum(axis=1)
        logz = np.logaddexp(a, b)
        with np.errstate(invalid="ignore"):
            out -= np.where(np.isfinite(logz), np.exp(logz) * logz, 0.0)
    return out / LN2


def rs_functional(fp: FixedPoint, l: int, k: int, channel: ChannelModel, samples: int = 1_000_000,
                  rng: np.random.Generator | int | None = None, chunk: int = 250_000,
                  symmetrized: bool = True) -> RsEstimate:
    """Monte Carlo estimate of the functional (bits) with its standard error.

    With ``symmetrized`` each term is averaged exactly over the message
    signs given their magnitudes, which is valid for the symmetric
    densities produced by density evolution on symmetric channels.  The
    terms become bounded entropies:

        l E h2((1 + t_u t_h) / 2) - E H(signs of B, u_1..u_l mod flip)
        + E h2((1 + t_B) / 2) - (l/k) E h2((1 + prod t_h) / 2)

    with ``t = tanh|message|``.  The plain estimator samples the
    definition directly and is much noisier.
    """
    rng = np.random.default_rng(rng)
    parts = [[], [], []]
    left = samples
    while left > 0:
        s = min(chunk, left)
        left -= s
        u1 = fp.u[rng.integers(0, fp.u.size, s)]
        h1 = fp.h[rng.integers(0, fp.h.size, s)]
        ul = fp.u[rng.integers(0, fp.u.size, (s, l))]
        B = channel.sample_llr_given_zero(s, rng)
        hk = fp.h[rng.integers(0, fp.h.size, (s, k))]
        if symmetrized:
            parts[0].append(-_h2_of_product(log_abs_tanh(u1) + log_abs_tanh(h1)))
            mags = np.abs(np.column_stack([B, ul]))
            parts[1].append(_h2_of_product(log_abs_tanh(B)) - _sign_pattern_entropy(mags))
            parts[2].append(-_h2_of_product(log_abs_tanh(hk).sum(axis=1)))
        else:
            parts[0].append(_edge_term(u1, h1))
            parts[1].append(_variable_term(ul, B))
            parts[2].append(_check_term(hk))
    t1, t2, t3 = (np.concatenate(p) for p in parts)
    value = -l * t1.mean() + t2.mean() + (l / k) * t3.mean()
    var = (l * l * t1.var() + t2.var() + (l / k) ** 2 * t3.var()) / samples
    return RsEstimate(value=float(value), stderr=float(math.sqrt(var)))


def conditional_entropy_rs(l: int, k: int, channel: ChannelModel, settings: RsSettings = RsSettings(),
                           seed: int = 0, inits=INITS) -> RsResult:
    """Largest functional value over the fixed points reached from each start."""
    per = {}
    for j, init in enumerate(inits):
        fp = find_fixed_point(l, k, channel, init, settings, rng=np.random.default_rng([seed, j]))
        est = rs_functional(fp, l, k, channel, settings.samples, rng=np.random.default_rng([seed, j, 1]))
        per[init] = (est, fp)
    return RsResult(value=max(e.value for e, _ in per.values()), per_init=per)


def map_threshold(l: int, k: int, family: str = "bsc", lo: float | None = None, hi: float | None = None,
                  tol: float = 1e-3, settings: RsSettings = RsSettings(), seed: int = 0,
                  zero_tol: float = 1e-9) -> ThresholdResult:
    """Bisection on the sign of the conditional-entropy estimate.

    The perfect-knowledge fixed point always gives exactly zero, so only
    the fixed point reached from zero messages is evaluated.  A parameter
    counts as decodable (below threshold) when that value is at most
    ``zero_tol``.
    """
    if lo is None:
        lo = {"bsc": 0.02, "bec": 0.2}[family]
    if hi is None:
        hi = {"bsc": 0.3, "bec": 0.95}[family]

    def classify(param):
        res = conditional_entropy_rs(l, k, ChannelModel(family, param), settings, seed, inits=("zero",))
        est, fp = res.per_init["zero"]
        return est.value <= zero_tol, fp.iterations

    return _bisect(classify, lo, hi, tol)
