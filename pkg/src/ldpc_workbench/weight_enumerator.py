"""Average weight enumerator of the regular ensemble.

For the configuration model with ``F = N l`` sockets and ``M = N l / k``
checks, the expected number of codewords of weight ``w`` is

    N(w) = (lw)! (F - lw)! / F!  *  C(N, w)  *  [z^{lw}] q_k(z)^M,

with ``q_k(z) = ((1 + z)^k + (1 - z)^k) / 2``.  :func:`expected_weight_enumerator`
evaluates it exactly with rational arithmetic.  Large-``N`` behaviour is
described by the growth rate ``phi(omega) = lim (1/N) ln N(N omega)``,
computed by a saddle point in :func:`growth_rate`.

All logarithms here are natural unless a name says ``bits``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .messages import binary_entropy, binary_entropy_nats

__all__ = [
    "check_polynomial",
    "coeff_power",
    "expected_weight_enumerator",
    "log_expected_weight_enumerator",
    "SaddlePoint",
    "saddle_point",
    "growth_rate",
    "growth_curve",
    "omega_star",
    "rce_exponent",
    "gilbert_varshamov",
]


def check_polynomial(k: int) -> list[int]:
    """Coefficients of ``q_k(z)``: ``C(k, m)`` for even ``m``, zero otherwise."""
    return [math.comb(k, m) if m % 2 == 0 else 0 for m in range(k + 1)]


def coeff_power(poly: list[int], power: int, degree: int) -> int:
    """Exact ``[z^degree] poly(z)^power`` for a polynomial with non-negative integer coefficients.

    Uses Kronecker substitution: evaluate at ``2^b`` with ``b`` wide enough
    that no coefficient of the power can spill into its neighbour, then
    raise a single big integer to ``power``.
    """
    if any(c < 0 for c in poly):
        raise ValueError("coefficients must be non-negative")
    if degree < 0 or degree > (len(poly) - 1) * power:
        return 0
    if power == 0:
        return 1 if degree == 0 else 0
    bits = (sum(poly) ** power).bit_length() + 1
    packed = 0
    for c in reversed(poly):
        packed = (packed << bits) | c
    full = packed ** power
    return (full >> (bits * degree)) & ((1 << bits) - 1)


def _check_args(l: int, k: int, n: int) -> int:
    if l < 1 or k < 2 or n < 1:
        raise ValueError("need l >= 1, k >= 2, n >= 1")
    if (n * l) % k:
        raise ValueError("n*l must be divisible by k")
    return n * l // k


def expected_weight_enumerator(l: int, k: int, n: int, w: int) -> Fraction:
    """Exact ensemble average number of weight-``w`` codewords."""
    m = _check_args(l, k, n)
    if not 0 <= w <= n:
        raise ValueError("weight must lie in [0, n]")
    F = n * l
    lw = l * w
    count = coeff_power(check_polynomial(k), m, lw)
    if count == 0:
        return Fraction(0)
    return Fraction(math.factorial(lw) * math.factorial(F - lw) * math.comb(n, w) * count,
                    math.factorial(F))


def log_expected_weight_enumerator(l: int, k: int, n: int, w: int) -> float:
    """Natural log of :func:`expected_weight_enumerator` via log-gamma; ``-inf`` when it vanishes."""
    m = _check_args(l, k, n)
    F = n * l
    lw = l * w
    count = coeff_power(check_polynomial(k), m, lw)
    if count == 0:
        return -math.inf
    return (math.lgamma(lw + 1) + math.lgamma(F - lw + 1) - math.lgamma(F + 1)
            + math.lgamma(n + 1) - math.lgamma(w + 1) - math.lgamma(n - w + 1) + math.log(count))


# ----------------------------------------------------------------------
@dataclass
class SaddlePoint:
    z: float
    residual: float
    iterations: int


def _moments(k: int, t: float) -> tuple[float, float, float]:
    """Log-partition, mean and variance of the even-parity count at ``z = e^t``."""
    m = np.arange(0, k + 1, 2, dtype=float)
    logw = np.array([math.log(math.comb(k, int(j))) for j in m]) + m * t
    top = logw.max()
    w = np.exp(logw - top)
    s0 = w.sum()
    mean = (m * w).sum() / s0
    var = ((m - mean) ** 2 * w).sum() / s0
    return top + math.log(s0), mean, var


def saddle_point(k: int, omega: float, tol: float = 1e-12, max_iter: int = 200) -> SaddlePoint:
    """Solve ``omega = (z/k) q_k'(z) / q_k(z)`` for ``z > 0``.

    Newton's method in ``t = ln z`` from ``z0 = omega / (1 - omega)``,
    safeguarded by a bracket on ``z in [1e-12, 1e12]``.  The left side is
    the mean of an exponential family in ``t`` divided by ``k``, hence
    strictly increasing, so the root is unique when it exists.
    """
    if not 0.0 < omega < 1.0:
        raise ValueError("omega must lie strictly between 0 and 1")
    lo, hi = math.log(1e-12), math.log(1e12)
    cap = _moments(k, hi)[1] / k
    if omega >= cap:
        raise ValueError(f"no saddle point: omega={omega} is beyond the reachable {cap:.6g}")
    if omega <= _moments(k, lo)[1] / k:
        raise ValueError(f"no saddle point: omega={omega} is below the bracket")
    t = math.log(omega / (1.0 - omega))
    t = min(max(t, lo), hi)
    resid = math.inf
    for it in range(1, max_iter + 1):
        _, mean, var = _moments(k, t)
        resid = mean / k - omega
        if abs(resid) <= tol:
            return SaddlePoint(z=math.exp(t), residual=abs(resid), iterations=it)
        if resid > 0:
            hi = t
        else:
            lo = t
        step = t - resid * k / var if var > 0 else math.nan
        t = step if lo < step < hi else 0.5 * (lo + hi)
    raise RuntimeError(f"saddle point did not converge (residual {resid:.3g})")


def growth_rate(l: int, k: int, omega: float) -> tuple[float, float]:
    """Return ``(phi(omega), z)``; ``phi`` is in nats per bit.

    For odd ``k`` and ``omega`` at or above ``(k-1)/k`` no codeword of that
    relative weight exists and ``(-inf, inf)`` is returned.
    """
    if not 0.0 < omega < 1.0:
        raise ValueError("omega must lie strictly between 0 and 1")
    if k % 2 == 1 and omega >= (k - 1) / k - 1e-12:
        return -math.inf, math.inf
    sp = saddle_point(k, omega)
    t = math.log(sp.z)
    logq = _moments(k, t)[0]
    phi = (1 - l) * float(binary_entropy_nats(omega)) + (l / k) * logq - omega * l * t
    return float(phi), sp.z


def growth_curve(l: int, k: int, omegas) -> tuple[np.ndarray, np.ndarray]:
    vals = [growth_rate(l, k, float(w)) for w in omegas]
    return np.array([v[0] for v in vals]), np.array([v[1] for v in vals])


def omega_star(l: int, k: int, tol: float = 1e-10, grid: int = 2000) -> float:
    """Smallest positive zero of the growth rate (the linear-distance gap edge)."""
    omegas = np.linspace(1e-6, 0.5, grid)
    prev_w, prev_phi = omegas[0], growth_rate(l, k, omegas[0])[0]
    if prev_phi >= 0:
        raise ValueError("growth rate is not negative near zero weight; no linear distance gap")
    for w in omegas[1:]:
        phi = growth_rate(l, k, float(w))[0]
        if phi >= 0:
            lo, hi = prev_w, float(w)
            while hi - lo > tol:
                mid = 0.5 * (lo + hi)
                if growth_rate(l, k, mid)[0] < 0:
                    lo = mid
                else:
                    hi = mid
            return 0.5 * (lo + hi)
        prev_w, prev_phi = float(w), phi
    raise ValueError("growth rate stays negative up to omega = 1/2")


# ----------------------------------------------------------------------
def rce_exponent(rate: float, delta) -> np.ndarray | float:
    """Weight exponent ``R - 1 + h2(delta)`` (bits) of the random code ensemble."""
    return rate - 1.0 + binary_entropy(delta)


def gilbert_varshamov(rate: float, tol: float = 1e-12) -> float:
    """Smallest ``delta`` in ``(0, 1/2]`` with ``h2(delta) = 1 - rate``."""
    if not 0.0 < rate < 1.0:
        raise ValueError("rate must lie in (0, 1)")
    lo, hi = 0.0, 0.5
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if binary_entropy(mid) < 1.0 - rate:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
