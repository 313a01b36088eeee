"""Binary-input memoryless channels.

Four families are supported: the binary symmetric channel (BSC), the binary
erasure channel (BEC), the Z channel (ZC) and the additive white Gaussian
noise channel (AWGN).  Inputs are bits ``0``/``1``; the AWGN channel sends
``0 -> +1`` and ``1 -> -1``.  Erasures are encoded as the integer
:data:`ERASURE` so that output vectors stay plain integer arrays.

For the Z channel, input ``0`` is transmitted noiselessly and input ``1``
is received as ``0`` with probability ``p``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .messages import LN2, binary_entropy

ERASURE = 2

KINDS = ("bsc", "bec", "zc", "awgn")

__all__ = [
    "ERASURE",
    "ChannelModel",
    "BSC",
    "BEC",
    "ZC",
    "AWGN",
    "parse_channel",
    "transition_prob",
    "sample_output",
    "llr",
    "capacity",
    "uniform_input_rate",
    "zc_optimal_input",
    "zc_mutual_information",
]


@dataclass(frozen=True)
class ChannelModel:
    """A binary-input memoryless channel ``Q(y|x)``.

    ``param`` is the crossover probability (BSC, ZC), the erasure
    probability (BEC) or the noise standard deviation (AWGN).
    """

    kind: str
    param: float

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown channel kind {self.kind!r}; expected one of {KINDS}")
        p = float(self.param)
        if not math.isfinite(p):
            raise ValueError("channel parameter must be finite")
        if self.kind == "awgn":
            if p <= 0.0:
                raise ValueError("AWGN noise level must be positive")
        elif not 0.0 <= p <= 1.0:
            raise ValueError(f"{self.kind} parameter must lie in [0, 1], got {p}")

    # ------------------------------------------------------------------
    @property
    def symmetric(self) -> bool:
        """True when an output involution swaps the two inputs."""
        return self.kind != "zc"

    @property
    def hard_output(self) -> bool:
        """True when the output alphabet is exactly ``{0, 1}``."""
        return self.kind in ("bsc", "zc")

    @property
    def discrete(self) -> bool:
        return self.kind != "awgn"

    def output_alphabet(self) -> tuple:
        if self.kind == "bec":
            return (0, 1, ERASURE)
        if self.kind == "awgn":
            raise ValueError("AWGN output alphabet is the real line")
        return (0, 1)

    def involution(self, y):
        """Output map that exchanges the roles of the two inputs."""
        if not self.symmetric:
            raise ValueError("the Z channel has no input-swapping involution")
        y = np.asarray(y)
        if self.kind == "awgn":
            return -y
        if self.kind == "bec":
            return np.where(y == ERASURE, ERASURE, 1 - y)
        return 1 - y

    # ------------------------------------------------------------------
    def _check_y(self, y: np.ndarray) -> None:
        if self.kind == "awgn":
            if not np.all(np.isfinite(y)):
                raise ValueError("AWGN outputs must be finite reals")
            return
        allowed = self.output_alphabet()
        if not np.all(np.isin(y, allowed)):
            raise ValueError(f"output outside the {self.kind} alphabet {allowed}")

    def transition_prob(self, x, y):
        """``Q(y|x)``; a density for AWGN.  Vectorised over ``x`` and ``y``."""
        x = np.asarray(x)
        y = np.asarray(y)
        if not np.all(np.isin(x, (0, 1))):
            raise ValueError("channel inputs must be bits")
        self._check_y(y)
        p = float(self.param)
        if self.kind == "bsc":
            out = np.where(x == y, 1.0 - p, p)
        elif self.kind == "bec":
            out = np.where(y == ERASURE, p, np.where(x == y, 1.0 - p, 0.0))
        elif self.kind == "zc":
            # 0 -> 0 always; 1 -> 0 with probability p
            out = np.where(x == 0, np.where(y == 0, 1.0, 0.0), np.where(y == 0, p, 1.0 - p))
        else:
            s = 1.0 - 2.0 * x
            out = np.exp(-((y - s) ** 2) / (2.0 * p * p)) / (math.sqrt(2.0 * math.pi) * p)
        out = np.asarray(out, dtype=float)
        return float(out) if out.ndim == 0 else out

    def log_transition_prob(self, x, y):
        """``ln Q(y|x)`` with ``-inf`` for impossible pairs."""
        with np.errstate(divide="ignore"):
            if self.kind == "awgn":
                x = np.asarray(x)
                y = np.asarray(y, dtype=float)
                self._check_y(y)
                s = 1.0 - 2.0 * x
                sig = float(self.param)
                return -((y - s) ** 2) / (2 * sig * sig) - 0.5 * math.log(2 * math.pi * sig * sig)
            return np.log(self.transition_prob(x, y))

    def sample(self, x, rng: np.random.Generator) -> np.ndarray:
        """Draw channel outputs for the input bit vector ``x``."""
        x = np.asarray(x, dtype=np.int64)
        if not np.all((x == 0) | (x == 1)):
            raise ValueError("channel inputs must be bits")
        p = float(self.param)
        if self.kind == "awgn":
            return (1.0 - 2.0 * x) + p * rng.standard_normal(x.shape)
        r = rng.random(x.shape)
        if self.kind == "bsc":
            return np.where(r < p, 1 - x, x).astype(np.int64)
        if self.kind == "bec":
            return np.where(r < p, ERASURE, x).astype(np.int64)
        return np.where((x == 1) & (r < p), 0, x).astype(np.int64)

    def llr(self, y) -> np.ndarray:
        """Half log-likelihood ratio ``0.5 ln(Q(y|0)/Q(y|1))``; may be infinite."""
        y = np.asarray(y)
        self._check_y(y)
        p = float(self.param)
        with np.errstate(divide="ignore"):
            if self.kind == "awgn":
                return np.asarray(y, dtype=float) / (p * p)
            if self.kind == "bsc":
                b = 0.5 * (math.log1p(-p) - math.log(p)) if 0 < p < 1 else (np.inf if p == 0 else -np.inf)
                if p == 0.5:
                    b = 0.0
                return np.where(y == 0, b, -b).astype(float)
            if self.kind == "bec":
                return np.where(y == ERASURE, 0.0, np.where(y == 0, np.inf, -np.inf)).astype(float)
            # Z channel: y = 1 can only come from x = 1
            b0 = 0.5 * -math.log(p) if p > 0 else np.inf
            return np.where(y == 0, b0, -np.inf).astype(float)

    def sample_llr_given_zero(self, size: int, rng: np.random.Generator) -> np.ndarray:
        """LLRs of outputs drawn with input 0 (all-zero codeword convention)."""
        return self.llr(self.sample(np.zeros(size, dtype=np.int64), rng))

    # ------------------------------------------------------------------
    def capacity(self) -> float:
        """Capacity in bits per channel use."""
        p = float(self.param)
        if self.kind == "bsc":
            return 1.0 - float(binary_entropy(p))
        if self.kind == "bec":
            return 1.0 - p
        if self.kind == "zc":
            return zc_mutual_information(p, zc_optimal_input(p))
        return _awgn_capacity(p)

    def uniform_input_rate(self) -> float:
        """Mutual information with uniformly distributed inputs, in bits."""
        if self.kind == "zc":
            return zc_mutual_information(float(self.param), 0.5)
        # symmetric channels attain capacity with uniform inputs
        return self.capacity()

    def label(self) -> str:
        return f"{self.kind}:{self.param:g}"


def BSC(p: float) -> ChannelModel:
    return ChannelModel("bsc", p)


def BEC(eps: float) -> ChannelModel:
    return ChannelModel("bec", eps)


def ZC(p: float) -> ChannelModel:
    return ChannelModel("zc", p)


def AWGN(sigma: float) -> ChannelModel:
    return ChannelModel("awgn", sigma)


def parse_channel(text: str) -> ChannelModel:
    """Parse ``"bsc:0.05"``-style descriptions."""
    try:
        kind, value = text.split(":")
    except ValueError:
        raise ValueError(f"channel description must look like 'bsc:0.05', got {text!r}") from None
    return ChannelModel(kind.strip().lower(), float(value))


# ----------------------------------------------------------------------
# Z channel
def zc_optimal_input(p: float) -> float:
    """Capacity-achieving probability of sending the noisy symbol ``1``."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    if p == 0.0:
        return 0.5
    if p == 1.0:
        return 1.0
    q = 1.0 - p
    t = p ** (p / q)
    return t / (1.0 + q * t)


def zc_mutual_information(p: float, prob_one: float) -> float:
    """``I(X;Y)`` in bits for the Z channel when ``P(X=1) = prob_one``."""
    q = 1.0 - p
    return float(binary_entropy(prob_one * q) - prob_one * binary_entropy(p))


# ----------------------------------------------------------------------
def _awgn_capacity(sigma: float) -> float:
    # C = 1 - E_{y|0} log2(1 + e^{-2y/sigma^2}); the integrand is smooth.
    s2 = sigma * sigma

    def integrand(y):
        dens = math.exp(-((y - 1.0) ** 2) / (2 * s2)) / math.sqrt(2 * math.pi * s2)
        return dens * np.logaddexp(0.0, -2.0 * y / s2)

    lo, hi = 1.0 - 40.0 * sigma, 1.0 + 40.0 * sigma
    val, _ = integrate.quad(integrand, lo, hi, epsabs=1e-10, epsrel=1e-10, limit=400, points=[0.0, 1.0])
    return 1.0 - val / LN2


# functional aliases ----------------------------------------------------
def transition_prob(channel: ChannelModel, x, y):
    return channel.transition_prob(x, y)


def sample_output(channel: ChannelModel, x, rng: np.random.Generator):
    return channel.sample(x, rng)


def llr(channel: ChannelModel, y):
    return channel.llr(y)


def capacity(channel: ChannelModel) -> float:
    return channel.capacity()


def uniform_input_rate(channel: ChannelModel) -> float:
    return channel.uniform_input_rate()
