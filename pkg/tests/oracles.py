"""Slow, independent reference implementations used as test oracles.

Everything here is written with plain Python loops and ``math`` so that it
shares no code path with the vectorized library routines.
"""
import math


def isqrt_disk(r):
    return [math.isqrt(2 * r * i - i * i) for i in range(2 * r + 1)]


def _at(x, j):
    return x[min(max(j, 0), len(x) - 1)]


def extent_disk(x, n, r):
    c = isqrt_disk(r)
    hi = max(_at(x, n - r + p) + c[p] for p in range(2 * r + 1))
    lo = min(_at(x, n - r + p) - c[p] for p in range(2 * r + 1))
    return hi - lo


def extent_square(x, n, r):
    w = [_at(x, n + q) for q in range(-r, r + 1)]
    return max(w) - min(w) + 2 * r


def area(x, start, length, r, shape="disk"):
    f = extent_disk if shape == "disk" else extent_square
    return sum(f(x, n, r) for n in range(start, start + length))


def emfd_radii():
    return [int(math.floor(1.4 ** i + 0.5)) for i in range(1, 18)]


def enhanced(x, start, length):
    radii = emfd_radii()
    a = [area(x, start, length, r) for r in radii]
    return [2 - math.log(a[i + 1] / a[i]) / math.log(radii[i + 1] / radii[i])
            for i in range(16)]


def histogram(rows):
    """``rows``: list of 16-value lists, one per window."""
    naw = len(rows)
    out = [[0.0] * 32 for _ in range(16)]
    for row in rows:
        for b, v in enumerate(row):
            d = int(math.floor((v - 1) * 32))
            d = min(max(d, 0), 31)
            out[b][d] += 1.0 / naw
    return out


def enhanced_matrix(x, start, length):
    """Same as :func:`enhanced` but with a dense ``(length, 2r+1)`` window matrix.

    Used where the pure-Python loop would be too slow (many windows).
    """
    import numpy as np
    from numpy.lib.stride_tricks import sliding_window_view

    x = np.asarray(x, dtype=np.float64)
    radii = emfd_radii()
    areas = []
    for r in radii:
        idx = np.clip(np.arange(start - r, start + length + r), 0, x.size - 1)
        win = sliding_window_view(x[idx], 2 * r + 1)
        c = np.array(isqrt_disk(r), dtype=np.float64)
        areas.append(float(((win + c).max(axis=1) - (win - c).min(axis=1)).sum()))
    return [2 - math.log(areas[i + 1] / areas[i]) / math.log(radii[i + 1] / radii[i])
            for i in range(16)]
