"""Density evolution for regular LDPC ensembles.

Message densities are represented by populations of samples (population
dynamics).  One step draws ``k - 1`` variable messages per check output and
``l - 1`` check messages plus a fresh channel LLR per variable output.  The
all-zero codeword is assumed, which is legitimate for symmetric channels.

For the erasure channel the recursion collapses to a scalar, handled
exactly by :func:`bec_recursion`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channels import ChannelModel
from .messages import L_MAX, binary_entropy, check_update, clamp_finite

__all__ = [
    "DeSettings",
    "DeTrajectory",
    "ThresholdResult",
    "check_population",
    "variable_population",
    "decision_statistics",
    "run_de",
    "bp_threshold",
    "bec_recursion",
    "bec_threshold",
    "shannon_limit",
]


@dataclass(frozen=True)
class DeSettings:
    pop_size: int = 100_000
    t_max: int = 500
    floor: float = 1e-4
    l_max: float = L_MAX


@dataclass
class DeTrajectory:
    """Per-iteration bit error probability and entropy; index ``t`` is after ``t`` iterations."""

    pb: np.ndarray
    entropy: np.ndarray
    u: np.ndarray = field(repr=False)
    h: np.ndarray = field(repr=False)

    @property
    def iterations(self) -> int:
        return int(self.pb.size - 1)


def check_population(h: np.ndarray, k: int, size: int, rng: np.random.Generator,
                     l_max: float = L_MAX) -> np.ndarray:
    """New check-to-variable samples from ``k - 1`` random variable samples each."""
    idx = rng.integers(0, h.size, size=(size, k - 1))
    return clamp_finite(check_update(h[idx], axis=1), l_max)


def variable_population(u: np.ndarray, llr: np.ndarray, l: int, rng: np.random.Generator,
                        l_max: float = L_MAX) -> np.ndarray:
    """New variable-to-check samples: channel LLR plus ``l - 1`` random check samples."""
    idx = rng.integers(0, u.size, size=(llr.size, l - 1))
    with np.errstate(invalid="ignore"):
        return clamp_finite(llr + u[idx].sum(axis=1), l_max)


def decision_statistics(u: np.ndarray, llr: np.ndarray, l: int, rng: np.random.Generator) -> tuple[float, float]:
    """Bit error probability and mean posterior entropy (bits) of ``B + sum of l u``.

    Ties count as half an error.
    """
    idx = rng.integers(0, u.size, size=(llr.size, l))
    with np.errstate(invalid="ignore"):
        total = llr + u[idx].sum(axis=1)
    total[np.isnan(total)] = 0.0
    pb = float(np.mean(total < 0) + 0.5 * np.mean(total == 0))
    with np.errstate(over="ignore"):
        p_wrong = 1.0 / (1.0 + np.exp(2.0 * np.abs(total)))
    return pb, float(np.mean(binary_entropy(p_wrong)))


def run_de(l: int, k: int, channel: ChannelModel, settings: DeSettings = DeSettings(),
           rng: np.random.Generator | int | None = None, init_u: np.ndarray | None = None,
           stop_below_floor: bool = False) -> DeTrajectory:
    """Population dynamics for ``settings.t_max`` iterations.

    ``init_u`` seeds the check-message population (default: all zero, the
    usual BP start).  With ``stop_below_floor`` the run ends as soon as the
    error probability falls under ``settings.floor``.
    """
    if l < 2 or k < 2:
        raise ValueError("degrees must be at least 2")
    if not channel.symmetric:
        raise ValueError("density evolution under the all-zero codeword needs a symmetric channel")
    rng = np.random.default_rng(rng)
    n = settings.pop_size
    u = np.zeros(n) if init_u is None else clamp_finite(np.asarray(init_u, dtype=float), settings.l_max)
    h = np.zeros(n)
    pbs, ents = [], []
    pb, ent = decision_statistics(u, channel.sample_llr_given_zero(n, rng), l, rng)
    pbs.append(pb)
    ents.append(ent)
    for _ in range(settings.t_max):
        h = variable_population(u, channel.sample_llr_given_zero(n, rng), l, rng, settings.l_max)
        u = check_population(h, k, n, rng, settings.l_max)
        pb, ent = decision_statistics(u, channel.sample_llr_given_zero(n, rng), l, rng)
        pbs.append(pb)
        ents.append(ent)
        if stop_below_floor and pb < settings.floor:
            break
    return DeTrajectory(pb=np.array(pbs), entropy=np.array(ents), u=u, h=h)


@dataclass
class ThresholdResult:
    lower: float  # largest parameter classified as decodable
    upper: float  # smallest parameter classified as not decodable
    probes: list[tuple[float, bool, int]]  # (parameter, decodable, iterations used)
    monotone: bool = True

    @property
    def estimate(self) -> float:
        return 0.5 * (self.lower + self.upper)


def _bisect(classify, lo: float, hi: float, tol: float) -> ThresholdResult:
    probes = []

    def probe(x):
        ok, used = classify(x)
        probes.append((x, ok, used))
        return ok

    if not probe(lo):
        raise ValueError(f"lower end {lo} is not below threshold")
    if probe(hi):
        raise ValueError(f"upper end {hi} is not above threshold")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if probe(mid):
            lo = mid
        else:
            hi = mid
    good = [x for x, ok, _ in probes if ok]
    bad = [x for x, ok, _ in probes if not ok]
    monotone = not good or not bad or max(good) < min(bad)
    return ThresholdResult(lower=lo, upper=hi, probes=probes, monotone=monotone)


def bp_threshold(l: int, k: int, family: str = "bsc", lo: float | None = None, hi: float | None = None,
                 tol: float = 1e-3, settings: DeSettings = DeSettings(), seed: int = 0) -> ThresholdResult:
    """BP threshold by bisection on whether population dynamics reaches the floor.

    Every probe reuses the same seed, so neighbouring probes see the same
    random numbers and the classification is as smooth as possible in the
    channel parameter.
    """
    if lo is None:
        lo = {"bsc": 0.005, "bec": 0.01, "awgn": 0.3}[family]
    if hi is None:
        hi = {"bsc": shannon_limit(1.0 - l / k), "bec": l / k, "awgn": 2.0}[family]

    def classify(param):
        traj = run_de(l, k, ChannelModel(family, param), settings, rng=seed, stop_below_floor=True)
        return bool(traj.pb[-1] < settings.floor), traj.iterations

    return _bisect(classify, lo, hi, tol)


# ----------------------------------------------------------------------
# erasure channel
def bec_recursion(eps: float, l: int, k: int, iterations: int) -> np.ndarray:
    """Erasure probability of variable-to-check messages, ``x_0 = eps``."""
    xs = np.empty(iterations + 1)
    x = eps
    xs[0] = x
    for t in range(iterations):
        x = eps * (1.0 - (1.0 - x) ** (k - 1)) ** (l - 1)
        xs[t + 1] = x
    return xs


def _bec_survives(eps: float, l: int, k: int, max_iter: int = 200_000) -> bool:
    """Does the recursion from ``eps`` stay at a positive fixed point?"""
    x = eps
    for _ in range(max_iter):
        nxt = eps * (1.0 - (1.0 - x) ** (k - 1)) ** (l - 1)
        if nxt < 1e-12:
            return False
        if x - nxt < 1e-15:
            return True
        x = nxt
    return True


def bec_threshold(l: int, k: int, tol: float = 1e-8) -> float:
    """Largest erasure probability for which the recursion goes to zero."""
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _bec_survives(mid, l, k):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def shannon_limit(rate: float, family: str = "bsc") -> float:
    """Largest channel parameter whose capacity still exceeds ``rate``."""
    if not 0.0 < rate < 1.0:
        raise ValueError("rate must lie in (0, 1)")
    if family == "bec":
        return 1.0 - rate
    if family != "bsc":
        raise ValueError("closed form only for bsc and bec")
    lo, hi = 0.0, 0.5
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if 1.0 - binary_entropy(mid) > rate:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
