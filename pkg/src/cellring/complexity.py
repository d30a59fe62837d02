"""Lempel-Ziv (LZ76) complexity and threshold complexity spectra of scalar series.

The pattern counter uses the exhaustive-history production rule: a new
component starting at position ``l`` is extended while the current word
``s[l:l+k]`` already occurs in ``s[:l+k-1]``; the last component counts even
when the input ends before it is complete.

Parsing is done in linear time with an online suffix automaton of the
prefix read so far, so a spectrum over N thresholds costs O(N^2) overall.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import DegenerateRange, DomainError


def _as_bits(seq) -> np.ndarray:
    if isinstance(seq, str):
        if not seq or set(seq) - {"0", "1"}:
            raise DomainError("binary string must be non-empty and contain only '0'/'1'")
        return (np.frombuffer(seq.encode("ascii"), dtype=np.uint8) - 48).astype(np.uint8)
    bits = np.asarray(seq)
    if bits.ndim != 1 or bits.size == 0:
        raise DomainError("binary sequence must be one-dimensional and non-empty")
    if bits.dtype != np.uint8:
        if not np.all((bits == 0) | (bits == 1)):
            raise DomainError("binary sequence may only contain 0 and 1")
        bits = bits.astype(np.uint8)
    return bits


def _as_series(series, min_len: int = 1) -> np.ndarray:
    x = np.asarray(series, dtype=np.float64).reshape(-1)
    if x.size < min_len:
        raise DomainError(f"series needs at least {min_len} samples, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise DomainError("series contains non-finite values")
    return x


@njit(cache=True)
def _lz76(s, nxt, link, length):
    # Suffix automaton over s[:j] grown one symbol at a time.  `state`/`wlen`
    # track the current word while it is still a substring of the history.
    n = s.shape[0]
    nxt[0, 0] = -1
    nxt[0, 1] = -1
    link[0] = -1
    length[0] = 0
    nstates = 1
    last = 0
    count = 0
    j = 0
    while j < n:
        state = 0
        wlen = 0
        while j < n:
            ch = s[j]
            t = nxt[state, ch]
            found = t != -1
            if found:
                state = t
                wlen += 1
            cur = nstates
            nstates += 1
            nxt[cur, 0] = -1
            nxt[cur, 1] = -1
            length[cur] = length[last] + 1
            p = last
            while p != -1 and nxt[p, ch] == -1:
                nxt[p, ch] = cur
                p = link[p]
            if p == -1:
                link[cur] = 0
            else:
                q = nxt[p, ch]
                if length[p] + 1 == length[q]:
                    link[cur] = q
                else:
                    cl = nstates
                    nstates += 1
                    length[cl] = length[p] + 1
                    nxt[cl, 0] = nxt[q, 0]
                    nxt[cl, 1] = nxt[q, 1]
                    link[cl] = link[q]
                    while p != -1 and nxt[p, ch] == q:
                        nxt[p, ch] = cl
                        p = link[p]
                    link[q] = cl
                    link[cur] = cl
                    # the word may now be represented by the clone
                    if found and state == q and wlen <= length[cl]:
                        state = cl
            last = cur
            j += 1
            if not found:
                break
        count += 1
    return count


def _buffers(n: int):
    size = 2 * n + 2
    return (
        np.empty((size, 2), dtype=np.int32),
        np.empty(size, dtype=np.int32),
        np.empty(size, dtype=np.int32),
    )


@njit(cache=True)
def _spectrum_counts(order, starts, n, nxt, link, length):
    # Distinct thresholds visited in increasing order.  order[starts[k]:starts[k+1]]
    # lists the samples equal to the k-th smallest value; moving past it clears them.
    m = starts.shape[0] - 1
    bits = np.ones(n, dtype=np.uint8)
    counts = np.empty(m, dtype=np.int64)
    for k in range(m):
        if k > 0:
            for t in range(starts[k - 1], starts[k]):
                bits[order[t]] = 0
        counts[k] = _lz76(bits, nxt, link, length)
    return counts


def binarize(series, threshold: float) -> np.ndarray:
    """Bit ``i`` is 1 iff ``series[i] >= threshold``."""
    x = _as_series(series)
    if not math.isfinite(threshold):
        raise DomainError(f"threshold={threshold!r} is not finite")
    return (x >= threshold).astype(np.uint8)


def lz76_pattern_count(seq) -> int:
    """Number of LZ76 production components of a binary sequence.

    ``seq`` may be a string over ``"01"`` or an integer/boolean array.

    >>> lz76_pattern_count("0001101001000101")
    6
    """
    bits = _as_bits(seq)
    return int(_lz76(bits, *_buffers(bits.size)))


def normalized_complexity(seq) -> float:
    """``c(N) * log2(N) / N``.  Not clipped; short random inputs can exceed 1."""
    bits = _as_bits(seq)
    n = bits.size
    if n < 2:
        raise DomainError("normalized complexity needs N >= 2")
    return lz76_pattern_count(bits) * math.log2(n) / n


def kc_single(series) -> float:
    """Complexity of the series binarized at its mean."""
    x = _as_series(series, min_len=2)
    return normalized_complexity(binarize(x, float(np.mean(x))))


@dataclass(frozen=True)
class ComplexitySpectrum:
    thresholds: np.ndarray
    values: np.ndarray
    max_value: float
    max_index: int

    def __len__(self) -> int:
        return self.values.shape[0]


def _spectrum_naive(x: np.ndarray) -> np.ndarray:
    return np.array([normalized_complexity(binarize(x, t)) for t in x])


def _spectrum_fast(x: np.ndarray) -> np.ndarray:
    n = x.size
    uniq, inverse = np.unique(x, return_inverse=True)
    inverse = inverse.reshape(-1)
    order = np.argsort(inverse, kind="stable")
    starts = np.searchsorted(inverse[order], np.arange(uniq.size + 1))
    counts = _spectrum_counts(order, starts, n, *_buffers(n))
    return counts[inverse] * math.log2(n) / n


def complexity_spectrum(series, method: str = "fast") -> ComplexitySpectrum:
    """Complexity of the series binarized at each of its own samples.

    ``method="naive"`` binarizes and parses once per sample; ``"fast"`` parses
    once per distinct sample value and reuses the result for duplicates.
    Both return bit-identical values.
    """
    x = _as_series(series, min_len=2)
    if method == "fast":
        values = _spectrum_fast(x)
    elif method == "naive":
        values = _spectrum_naive(x)
    else:
        raise DomainError(f"unknown spectrum method {method!r}")
    idx = int(np.argmax(values))
    thresholds = x.copy()
    thresholds.setflags(write=False)
    values.setflags(write=False)
    return ComplexitySpectrum(thresholds, values, float(values[idx]), idx)


def max_complexity(series) -> float:
    """Spectrum maximum K_m^C."""
    return complexity_spectrum(series).max_value


def normalize_series(series) -> np.ndarray:
    """Affine rescale onto [0, 1] using the series minimum and maximum."""
    x = _as_series(series)
    lo, hi = float(np.min(x)), float(np.max(x))
    if not hi > lo:
        raise DegenerateRange(f"series is constant ({lo!r}); cannot rescale")
    return (x - lo) / (hi - lo)
