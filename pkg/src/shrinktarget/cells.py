"""Dyadic cells of the odometer in tower coordinates.

A cell of resolution K is ``[p/2^K, (p+1)/2^K)``.  Reading the binary digits
of ``p`` backwards gives its tower index ``r``: the odometer moves cell ``r``
to cell ``r + 1 (mod 2^K)``, so level ``i`` of the height-``2^K`` Rokhlin tower
is exactly cell ``r = i``.  Sets that are unions of cells are held as boolean
masks indexed by ``r``; tau^k is ``np.roll(mask, k)``.

Everything here is integer arithmetic, hence exact.
"""
from __future__ import annotations

from fractions import Fraction

import numpy as np

from .arcs import ArcSet

MAX_RESOLUTION = 28


def check_resolution(k: int) -> None:
    if not 1 <= k <= MAX_RESOLUTION:
        raise OverflowError(
            f"dyadic resolution 2^{k} is outside the supported range 2^1..2^{MAX_RESOLUTION}")


def bit_reverse(mask: np.ndarray) -> np.ndarray:
    """Permute a length-2^K array by reversing the K-bit index (an involution)."""
    k = int(mask.size).bit_length() - 1
    if mask.size != 1 << k:
        raise ValueError("mask length must be a power of two")
    if k <= 1:
        return mask.copy()
    return np.ascontiguousarray(mask.reshape((2,) * k).transpose(tuple(range(k - 1, -1, -1)))).ravel()


def bit_reverse_int(r: int, k: int) -> int:
    return int(format(r, f"0{k}b")[::-1], 2)


def dyadic_exponent(value: Fraction) -> int:
    """log2 of the denominator; raises if it is not a power of two."""
    d = Fraction(value).denominator
    if d & (d - 1):
        raise ValueError(f"{value} is not a dyadic rational")
    return d.bit_length() - 1


def arcset_resolution(s: ArcSet) -> int:
    k = 0
    for a, b in s.pieces:
        k = max(k, dyadic_exponent(a), dyadic_exponent(b))
    return k


def positions_from_arcset(s: ArcSet, k: int) -> np.ndarray:
    """Boolean mask over cell positions p for a set of resolution <= k."""
    size = 1 << k
    mask = np.zeros(size, dtype=bool)
    for a, b in s.pieces:
        lo, hi = a * size, b * size
        if lo.denominator != 1 or hi.denominator != 1:
            raise ValueError(f"piece [{a}, {b}) is not a union of cells of size 2^-{k}")
        mask[int(lo):int(hi)] = True
    return mask


def arcset_from_positions(mask: np.ndarray) -> ArcSet:
    size = mask.size
    starts, stops = true_runs(mask)
    return ArcSet([(Fraction(int(a), size), Fraction(int(b), size)) for a, b in zip(starts, stops)],
                  _canonical=True)


def tower_from_arcset(s: ArcSet, k: int) -> np.ndarray:
    return bit_reverse(positions_from_arcset(s, k))


def arcset_from_tower(mask: np.ndarray) -> ArcSet:
    return arcset_from_positions(bit_reverse(mask))


def true_runs(mask: np.ndarray):
    """Start and stop indices of maximal runs of True in a linear mask."""
    m = mask.view(np.int8)
    edges = np.flatnonzero(np.diff(m))
    starts = edges[m[edges] == 0] + 1
    stops = edges[m[edges] == 1] + 1
    if m.size and m[0]:
        starts = np.concatenate(([0], starts))
    if m.size and m[-1]:
        stops = np.concatenate((stops, [m.size]))
    return starts.astype(np.int64), stops.astype(np.int64)


def cyclic_runs(mask: np.ndarray):
    """Runs of True on the cycle Z/2^K as (starts, lengths); a run may wrap past the end."""
    starts, stops = true_runs(mask)
    lengths = stops - starts
    if len(starts) > 1 and starts[0] == 0 and stops[-1] == mask.size:
        lengths[-1] += lengths[0]
        starts, lengths = starts[1:], lengths[1:]
    return starts, lengths


def tower_levels(k: int, lo: int, hi: int, resolution: int | None = None) -> np.ndarray:
    """Mask of tower levels lo..hi-1 of the height-2^k tower, at a finer resolution if asked.

    At resolution R >= k the level set is {r : r mod 2^k in [lo, hi)}.
    """
    resolution = k if resolution is None else resolution
    check_resolution(resolution)
    if resolution < k:
        raise ValueError("resolution must be at least the tower exponent")
    mask = np.zeros(1 << resolution, dtype=bool)
    mask.reshape(1 << (resolution - k), 1 << k)[:, lo:hi] = True
    return mask


# --- integer intervals on Z/2^K ----------------------------------------------


def shifted_run_intersection(size: int, lo: int, hi: int, shifts) -> int:
    """Cardinality of the intersection of the cyclic runs [lo + s, hi + s) over s in shifts."""
    def pieces(a, b):
        length = min(b - a, size)
        a %= size
        b = a + length
        if b <= size:
            return [(a, b)]
        return [(a, size), (0, b - size)]

    current = None
    for s in shifts:
        p = pieces(lo + s, hi + s)
        if current is None:
            current = p
            continue
        nxt = []
        for a, b in current:
            for c, d in p:
                x, y = max(a, c), min(b, d)
                if x < y:
                    nxt.append((x, y))
        current = nxt
    return sum(b - a for a, b in current or [])
