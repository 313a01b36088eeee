"""Numerically careful primitives for half-log-likelihood messages.

Messages are half log-likelihood ratios, ``h = 0.5 * ln(P(0) / P(1))``.
Infinite values are legal and mean certainty.  Finite arithmetic results
are clamped to ``[-l_max, l_max]``; infinities are kept as they are.

The check-node rule ``u = atanh(prod tanh h_j)`` is evaluated in
sign / log-magnitude form.  Plain ``tanh`` products lose every digit once
``|h|`` exceeds about 19, while the log form stays exact up to the clamp.
"""

from __future__ import annotations

import numpy as np

L_MAX = 25.0
LN2 = float(np.log(2.0))

__all__ = [
    "L_MAX",
    "binary_entropy",
    "binary_entropy_nats",
    "clamp_finite",
    "log_abs_tanh",
    "atanh_from_log",
    "check_update",
    "check_update_reference",
    "softplus",
    "prob_zero",
]


def binary_entropy_nats(x):
    """Binary entropy in nats with the convention ``0 ln 0 = 0``."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    inside = (x > 0.0) & (x < 1.0)
    xi = x[inside]
    out[inside] = -xi * np.log(xi) - (1.0 - xi) * np.log1p(-xi)
    if out.ndim == 0:
        return float(out)
    return out


def binary_entropy(x):
    """Binary entropy in bits."""
    val = binary_entropy_nats(x)
    return val / LN2


def clamp_finite(values: np.ndarray, l_max: float = L_MAX) -> np.ndarray:
    """Clamp finite entries to ``[-l_max, l_max]`` and keep infinities.

    NaN (which only arises from adding opposite certainties) is mapped to
    zero, i.e. to complete ignorance.
    """
    out = np.asarray(values, dtype=float).copy()
    finite = np.isfinite(out)
    np.clip(out, -l_max, l_max, out=out, where=finite)
    out[np.isnan(out)] = 0.0
    return out


def softplus(x):
    """``ln(1 + e^x)`` without overflow; ``softplus(-inf) = 0``."""
    return np.logaddexp(0.0, x)


def prob_zero(h):
    """Probability of bit value 0 under half-LLR ``h``."""
    h = np.asarray(h, dtype=float)
    return np.exp(-softplus(-2.0 * h))


def log_abs_tanh(h: np.ndarray) -> np.ndarray:
    """``ln|tanh h|`` accurate for large ``|h|``; ``-inf`` at zero, ``0`` at infinity."""
    a = np.abs(np.asarray(h, dtype=float))
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        e = np.exp(-2.0 * a)
        # log(1 - e): expm1 form near zero, log1p form once e is small
        head = np.where(e > 0.5, np.log(-np.expm1(-2.0 * a)), np.log1p(-e))
        return head - np.log1p(e)


def atanh_from_log(log_mag: np.ndarray) -> np.ndarray:
    """``atanh(exp(L))`` for ``L <= 0``; ``+inf`` when ``L == 0``."""
    L = np.asarray(log_mag, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        out = 0.5 * (np.log1p(np.exp(L)) - np.log(-np.expm1(L)))
    out = np.where(L == 0.0, np.inf, out)
    out = np.where(L == -np.inf, 0.0, out)
    return out


def check_update(h: np.ndarray, axis: int = -1) -> np.ndarray:
    """``atanh(prod_j tanh h_j)`` reduced along ``axis``.

    Any exact zero makes the result exactly zero.  All-infinite inputs give
    an infinite result, so symbolic certainty propagates.
    """
    h = np.asarray(h, dtype=float)
    sign = np.prod(np.where(h < 0.0, -1.0, 1.0), axis=axis)
    log_mag = np.sum(log_abs_tanh(h), axis=axis)
    return sign * atanh_from_log(log_mag)


def check_update_reference(h: np.ndarray, axis: int = -1) -> np.ndarray:
    """Plain ``tanh``/``atanh`` form, used as an oracle for moderate inputs."""
    return np.arctanh(np.prod(np.tanh(np.asarray(h, dtype=float)), axis=axis))
