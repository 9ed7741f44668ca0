"""Lempel-Ziv (1976) complexity of binary sequences."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ComplexityResult:
    c_raw: int
    c_norm: float
    n: int
    alpha: int = 2


def _as_bytes(seq) -> bytes:
    if isinstance(seq, str):
        arr = np.frombuffer(seq.encode("ascii"), dtype=np.uint8) - ord("0")
    else:
        arr = np.asarray(seq)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("sequence must be a nonempty 1-D bit string")
    if not ((arr == 0) | (arr == 1)).all():
        raise ValueError("sequence must contain only 0 and 1")
    return arr.astype(np.uint8).tobytes()


def _gram_codes(b: bytes) -> bytes:
    """Byte ``i`` packs bits ``i..i+7`` (zero-padded past the end).

    A word of length ``k >= 8`` occurs at ``j`` exactly when its ``k - 7``
    codes occur at ``j``; searching codes instead of bits gives substring
    search a 256-letter alphabet.
    """
    arr = np.frombuffer(b + bytes(7), dtype=np.uint8)
    windows = np.lib.stride_tricks.sliding_window_view(arr, 8)[: len(b)]
    return np.packbits(windows, axis=1).tobytes()


def lz76_complexity(seq) -> int:
    """Number of phrases in the exhaustive-history LZ76 parsing of ``seq``.

    A phrase starting at ``l`` is extended while it still occurs somewhere in
    the history that ends just before its last symbol (overlap allowed). The
    trailing segment counts as one phrase even when it is not novel.
    """
    b = _as_bytes(seq)
    n = len(b)
    g8 = _gram_codes(b)

    def find(start, k, lo_pos):
        # first j >= lo_pos with j <= start - 1 where b[start:start+k] occurs
        if k < 8:
            return b.find(b[start:start + k], lo_pos, start + k - 1)
        m = k - 7
        return g8.find(g8[start:start + m], lo_pos, start + m - 1)

    c = 0
    start = 0
    guess = 1
    while start < n:
        # the phrase length is the first k whose word is new; occurrence is
        # monotone in k, so search outward from the previous phrase length
        end = n - start + 1  # running past the end counts as new
        g = min(guess, end - 1)
        pos = find(start, g, 0)
        lo_pos = 0
        if pos != -1:
            lo, lo_pos, step = g, pos, 1
            while True:
                k = lo + step
                if k >= end:
                    hi = end
                    break
                # a longer word cannot first occur before its prefix does
                pos = find(start, k, lo_pos)
                if pos == -1:
                    hi = k
                    break
                lo, lo_pos, step = k, pos, 2 * step
        else:
            hi, step = g, 1
            while True:
                k = hi - step
                if k <= 0:
                    lo = 0
                    break
                pos = find(start, k, 0)
                if pos != -1:
                    lo, lo_pos = k, pos
                    break
                hi, step = k, 2 * step
        while hi - lo > 1:
            mid = (lo + hi) // 2
            pos = find(start, mid, lo_pos)
            if pos == -1:
                hi = mid
            else:
                lo, lo_pos = mid, pos
        c += 1
        start += hi
        guess = hi
    return c


def normalized_lzc(seq) -> float:
    """``C / n * log2(n)``: tends to 1 for fair coin flips and to 0 for periodic input."""
    n = len(seq)
    if n < 2:
        raise ValueError(f"normalized complexity needs length >= 2, got {n}")
    return lz76_complexity(seq) / n * math.log2(n)


def complexity(seq) -> ComplexityResult:
    n = len(seq)
    c = lz76_complexity(seq)
    c_norm = c / n * math.log2(n) if n >= 2 else 0.0
    return ComplexityResult(c_raw=c, c_norm=c_norm, n=n)


def classify_by_lzc(c_norm: float, threshold: float) -> int:
    # class 1 is the high-complexity class; ties go to class 1
    if not math.isfinite(threshold):
        raise ValueError(f"threshold must be finite, got {threshold!r}")
    return 1 if c_norm >= threshold else 0
