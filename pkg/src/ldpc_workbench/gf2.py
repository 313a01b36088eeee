"""Linear algebra over GF(2) on bit-packed rows.

Rows are packed into ``uint64`` words, least significant bit first, so a
row operation touches ``ceil(n / 64)`` machine words.  Elimination keeps a
reduced row echelon form from which codewords of the null space are read
off directly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

WORD = 64

__all__ = ["ParityCheckMatrix", "CodeSpace", "pack_bits", "unpack_bits"]


def pack_bits(bits: np.ndarray) -> np.ndarray:
    """Pack the last axis of a 0/1 array into little-endian ``uint64`` words."""
    bits = np.asarray(bits, dtype=np.uint8)
    n = bits.shape[-1]
    words = (n + WORD - 1) // WORD
    pad = words * WORD - n
    if pad:
        bits = np.concatenate([bits, np.zeros(bits.shape[:-1] + (pad,), dtype=np.uint8)], axis=-1)
    packed = np.packbits(bits, axis=-1, bitorder="little")
    return packed.view(np.uint64).reshape(bits.shape[:-1] + (words,)) if packed.size else \
        np.zeros(bits.shape[:-1] + (words,), dtype=np.uint64)


def unpack_bits(words: np.ndarray, n: int) -> np.ndarray:
    words = np.ascontiguousarray(words, dtype=np.uint64)
    as_bytes = words.view(np.uint8)
    bits = np.unpackbits(as_bytes, axis=-1, bitorder="little")
    return bits[..., :n].astype(np.uint8)


def _parity(words: np.ndarray) -> np.ndarray:
    """Parity of the popcount along the last axis."""
    return (np.bitwise_count(words).sum(axis=-1) & 1).astype(np.uint8)


@dataclass
class ParityCheckMatrix:
    """An ``m x n`` binary matrix stored as packed rows."""

    n: int
    rows: np.ndarray
    _space: "CodeSpace | None" = field(default=None, repr=False, compare=False)

    @property
    def m(self) -> int:
        return int(self.rows.shape[0])

    @classmethod
    def from_dense(cls, H) -> "ParityCheckMatrix":
        H = np.asarray(H)
        if H.ndim != 2:
            raise ValueError("parity-check matrix must be two-dimensional")
        if not np.all((H == 0) | (H == 1)):
            raise ValueError("parity-check entries must be 0 or 1")
        return cls(n=H.shape[1], rows=pack_bits(H.astype(np.uint8)))

    def to_dense(self) -> np.ndarray:
        return unpack_bits(self.rows, self.n)

    def syndrome(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.uint8)
        if x.shape[-1] != self.n:
            raise ValueError(f"word length {x.shape[-1]} does not match n={self.n}")
        packed = pack_bits(x)
        return _parity(self.rows & packed[..., None, :])

    def is_codeword(self, x) -> bool:
        return not np.any(self.syndrome(x))

    def space(self) -> "CodeSpace":
        if self._space is None:
            self._space = CodeSpace.from_rows(self.rows, self.n)
        return self._space

    def rank(self) -> int:
        return self.space().rank

    def codeword_basis(self) -> np.ndarray:
        """Rows form a basis of the code (the null space of the matrix)."""
        return self.space().basis()

    def sample_codeword(self, rng: np.random.Generator) -> np.ndarray:
        return self.space().sample(rng)


@dataclass
class CodeSpace:
    """Reduced row echelon form plus pivot bookkeeping for a null space."""

    n: int
    rref: np.ndarray  # (rank, words), pivots eliminated from every other row
    pivots: np.ndarray  # pivot column of each rref row
    free: np.ndarray  # non-pivot columns

    @property
    def rank(self) -> int:
        return int(self.rref.shape[0])

    @property
    def dimension(self) -> int:
        return self.n - self.rank

    @classmethod
    def from_rows(cls, rows: np.ndarray, n: int) -> "CodeSpace":
        A = np.array(rows, dtype=np.uint64, copy=True)
        m = A.shape[0]
        pivots = []
        r = 0
        one = np.uint64(1)
        for col in range(n):
            if r == m:
                break
            w, b = divmod(col, WORD)
            bit = one << np.uint64(b)
            has = (A[r:, w] & bit) != 0
            if not has.any():
                continue
            p = r + int(np.argmax(has))
            if p != r:
                A[[r, p]] = A[[p, r]]
            mask = (A[:, w] & bit) != 0
            mask[r] = False
            if mask.any():
                A[mask] ^= A[r]
            pivots.append(col)
            r += 1
        pivots = np.asarray(pivots, dtype=np.int64)
        free = np.setdiff1d(np.arange(n, dtype=np.int64), pivots)
        return cls(n=n, rref=A[:r].copy(), pivots=pivots, free=free)

    def _complete(self, free_bits: np.ndarray) -> np.ndarray:
        """Fill pivot positions so that every rref row is satisfied."""
        free_bits = np.atleast_2d(free_bits).astype(np.uint8)
        x = np.zeros((free_bits.shape[0], self.n), dtype=np.uint8)
        x[:, self.free] = free_bits
        if self.rank:
            packed = pack_bits(x)
            # each rref row has exactly one pivot, so its parity with the pivot
            # bit still zero is the value the pivot must take
            x[:, self.pivots] = _parity(self.rref[None, :, :] & packed[:, None, :])
        return x

    def basis(self) -> np.ndarray:
        k = self.dimension
        return self._complete(np.eye(k, dtype=np.uint8)) if k else np.zeros((0, self.n), dtype=np.uint8)

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        bits = rng.integers(0, 2, size=self.dimension, dtype=np.uint8)
        return self._complete(bits)[0]

    def enumerate(self, chunk: int = 1 << 14):
        """Yield blocks of codewords covering the whole code exactly once."""
        k = self.dimension
        if k > 30:
            raise ValueError(f"code dimension {k} too large to enumerate")
        total = 1 << k
        shifts = np.arange(k, dtype=np.int64)
        for start in range(0, total, chunk):
            idx = np.arange(start, min(total, start + chunk), dtype=np.int64)
            coeffs = ((idx[:, None] >> shifts) & 1).astype(np.uint8)
            yield self._complete(coeffs) if k else np.zeros((1, self.n), dtype=np.uint8)
