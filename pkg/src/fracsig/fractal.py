"""Minkowski-sausage extents and multiscale fractal-dimension profiles.

The sausage is swept by a mesh-approximated unit disk (or a unit square)
centred on every sampling position.  Its discrete area over a range of
positions is the sum of the per-position vertical extents.  Sample lookups
outside the signal replicate the nearest boundary sample, and analysis
windows read neighbouring samples from the full signal.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy.ndimage import maximum_filter1d, minimum_filter1d

from .audio import Signal

__all__ = [
    "DiskProfile",
    "RadiiLadder",
    "MfdProfile",
    "EMFD_RADII",
    "ANALYSIS_PERIOD_MS",
    "disk_profile",
    "extent_disk",
    "extent_square",
    "extents",
    "sausage_area",
    "window_areas",
    "dimension_from_areas",
    "mfd_base",
    "enhanced_mfd",
    "enhanced_mfd_windows",
    "analysis_windows",
    "emfd_radii",
    "mfdvl_radii",
]

Shape = Literal["disk", "square"]

ANALYSIS_PERIOD_MS = 50.0
BASE_MAX_RADIUS = 132
_CHUNK = 1 << 16


def _round_half_up(x):
    return np.floor(np.asarray(x, dtype=np.float64) + 0.5).astype(np.int64)


def emfd_radii() -> np.ndarray:
    """Radii ``round(1.4**i)`` for ``i = 1..17`` (16 consecutive pairs)."""
    return _round_half_up(1.4 ** np.arange(1, 18))


EMFD_RADII = emfd_radii()


@dataclass(frozen=True)
class DiskProfile:
    r: int
    offsets: np.ndarray


@dataclass(frozen=True)
class RadiiLadder:
    radii: np.ndarray
    purpose: Literal["emfd", "mfdvl"]

    @property
    def pairs(self):
        return list(zip(self.radii[:-1], self.radii[1:]))


@dataclass(frozen=True)
class MfdProfile:
    values: np.ndarray
    scale_axis: np.ndarray  # (n, 2) radius pairs


def disk_profile(r: int) -> DiskProfile:
    """Unit-disk vector ``floor(sqrt(2 r i - i**2))`` for ``0 <= i <= 2r``."""
    r = int(r)
    if r < 1:
        raise ValueError(f"radius must be >= 1, got {r}")
    i = np.arange(2 * r + 1, dtype=np.int64)
    # integer sqrt avoids float error at perfect squares
    sq = 2 * r * i - i * i
    off = np.floor(np.sqrt(sq)).astype(np.int64)
    off -= (off * off > sq).astype(np.int64)
    off += ((off + 1) * (off + 1) <= sq).astype(np.int64)
    off.setflags(write=False)
    return DiskProfile(r, off)


def _padded(x: np.ndarray, start: int, length: int, r: int) -> np.ndarray:
    # samples at positions start-r .. start+length+r-1 with edge replication
    idx = np.clip(np.arange(start - r, start + length + r), 0, x.size - 1)
    return x[idx]


def _disk_run(seg: np.ndarray, length: int, r: int) -> np.ndarray:
    offsets = disk_profile(r).offsets.astype(np.float64)
    out = np.empty(length)
    for lo in range(0, length, _CHUNK):
        n = min(_CHUNK, length - lo)
        hi = np.full(n, -np.inf)
        low = np.full(n, np.inf)
        for p, c in enumerate(offsets):
            s = seg[lo + p : lo + p + n]
            np.maximum(hi, s + c, out=hi)
            np.minimum(low, s - c, out=low)
        out[lo : lo + n] = hi - low
    return out


def _square_run(seg: np.ndarray, length: int, r: int) -> np.ndarray:
    size = 2 * r + 1
    hi = maximum_filter1d(seg, size, mode="nearest")[r : r + length]
    low = minimum_filter1d(seg, size, mode="nearest")[r : r + length]
    return hi - low + 2.0 * r


def extents(
    samples, r: int, shape: Shape = "disk", start: int = 0, length: int | None = None
) -> np.ndarray:
    """Vertical sausage extent at every position in ``[start, start+length)``."""
    x = np.asarray(samples, dtype=np.float64)
    r = int(r)
    if r < 1:
        raise ValueError(f"radius must be >= 1, got {r}")
    if length is None:
        length = x.size - start
    if length < 1 or start < 0 or start + length > x.size:
        raise ValueError("empty or out-of-range position range")
    seg = _padded(x, start, length, r)
    if shape == "disk":
        return _disk_run(seg, length, r)
    if shape == "square":
        return _square_run(seg, length, r)
    raise ValueError(f"unknown shape {shape!r}")


def _samples(signal) -> np.ndarray:
    return signal.samples if isinstance(signal, Signal) else np.asarray(signal, dtype=np.float64)


def extent_disk(signal, n: int, r: int) -> float:
    return float(extents(_samples(signal), r, "disk", n, 1)[0])


def extent_square(signal, n: int, r: int) -> float:
    return float(extents(_samples(signal), r, "square", n, 1)[0])


def sausage_area(signal, start: int, length: int, r: int, shape: Shape = "disk") -> float:
    """Sum of extents over positions ``start .. start+length-1``."""
    if length < 1:
        raise ValueError("empty range")
    return float(np.sum(extents(_samples(signal), r, shape, start, length)))


def dimension_from_areas(a_small, a_large, r_small, r_large):
    """``2 - log(A(r_large)/A(r_small)) / log(r_large/r_small)``, elementwise."""
    a_small = np.asarray(a_small, dtype=np.float64)
    a_large = np.asarray(a_large, dtype=np.float64)
    return 2.0 - np.log(a_large / a_small) / np.log(np.asarray(r_large, float) / r_small)


def analysis_windows(signal: Signal, period_ms: float = ANALYSIS_PERIOD_MS) -> np.ndarray:
    """Start indices ``0, P, 2P, ...`` of the ``floor(L / P)`` whole windows."""
    period = int(round(period_ms * signal.sample_rate / 1000.0))
    if period < 1:
        raise ValueError("analysis period shorter than one sample")
    naw = len(signal) // period
    if naw < 1:
        raise ValueError(
            f"signal too short for analysis: {len(signal)} samples < one {period_ms} ms window"
        )
    return np.arange(naw, dtype=np.int64) * period


def window_areas(
    signal, radii, starts, length: int, shape: Shape = "disk"
) -> np.ndarray:
    """Area matrix ``(len(starts), len(radii))`` for equal-length windows.

    Windows must be non-overlapping and ascending; extents are computed once
    over the covered span and summed per window.
    """
    x = _samples(signal)
    starts = np.asarray(starts, dtype=np.int64)
    lo, hi = int(starts[0]), int(starts[-1]) + length
    rel = starts - lo
    out = np.empty((starts.size, len(radii)))
    for j, r in enumerate(radii):
        e = extents(x, int(r), shape, lo, hi - lo)
        if np.all(np.diff(rel) == length):
            out[:, j] = e.reshape(starts.size, length).sum(axis=1)
        else:
            out[:, j] = [e[s : s + length].sum() for s in rel]
    return out


def mfd_base(signal, start: int, length: int) -> MfdProfile:
    """Base MFD over radii 1..132 of one window (disk shape)."""
    radii = np.arange(1, BASE_MAX_RADIUS + 2)
    areas = window_areas(signal, radii, [start], length)[0]
    values = dimension_from_areas(areas[:-1], areas[1:], radii[:-1], radii[1:])
    return MfdProfile(values, np.column_stack([radii[:-1], radii[1:]]))


def enhanced_mfd_windows(signal: Signal, period_ms: float = ANALYSIS_PERIOD_MS) -> np.ndarray:
    """Enhanced MFD of every analysis window, shape ``(NAW, 16)``."""
    starts = analysis_windows(signal, period_ms)
    length = int(round(period_ms * signal.sample_rate / 1000.0))
    areas = window_areas(signal, EMFD_RADII, starts, length)
    return dimension_from_areas(areas[:, :-1], areas[:, 1:], EMFD_RADII[:-1], EMFD_RADII[1:])


def enhanced_mfd(signal, start: int, length: int) -> MfdProfile:
    """The 16 enhanced MFD values of one window over the ``round(1.4**i)`` ladder."""
    areas = window_areas(signal, EMFD_RADII, [start], length)[0]
    values = dimension_from_areas(areas[:-1], areas[1:], EMFD_RADII[:-1], EMFD_RADII[1:])
    return MfdProfile(values, np.column_stack([EMFD_RADII[:-1], EMFD_RADII[1:]]))


def mfdvl_radii(sample_rate: float) -> RadiiLadder:
    """Square half-sides ``round(sf * 2**(-(x+2)/2))`` for ``x = 0..10``."""
    if sample_rate <= 0:
        raise ValueError("sample_rate must be positive")
    x = np.arange(11)
    return RadiiLadder(_round_half_up(sample_rate * 2.0 ** (-(x + 2) / 2.0)), "mfdvl")
