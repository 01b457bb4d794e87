"""EMFD, EMFD-KDE and MFD-VL signatures and their JSON container.

Signatures are computed on the samples as given; callers normally pass a
peak-normalized signal (see :func:`fracsig.audio.normalize_peak`).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .audio import Signal
from .fractal import (
    ANALYSIS_PERIOD_MS,
    dimension_from_areas,
    enhanced_mfd_windows,
    extents,
    mfdvl_radii,
)

__all__ = [
    "N_RBINS",
    "N_DBINS",
    "DBIN_MIDPOINTS",
    "EmfdSignature",
    "MfdVlSignature",
    "FeatureVector",
    "Bandwidth",
    "SignatureFormatError",
    "dbin_index",
    "emfd",
    "emfd_histogram",
    "bandwidth_scott",
    "bandwidth_rbin",
    "gaussian_kernel",
    "kde_at",
    "emfd_kde",
    "emfd_kde_from_values",
    "mfdvl",
    "tile_to_min_duration",
    "serialize_signature",
    "deserialize_signature",
]

N_RBINS = 16
N_DBINS = 32
DBIN_MIDPOINTS = 1.0 + (np.arange(1, N_DBINS + 1) - 0.5) / N_DBINS
H_FLOOR = 1e-6
SIGMA_EPS = 1e-6
FORMAT_VERSION = 1
MFDVL_LENGTH = 10


class SignatureFormatError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class EmfdSignature:
    """16x32 matrix indexed ``(rbin, dbin)``; ``kind`` is ``"histogram"`` or ``"kde"``."""

    kind: str
    values: np.ndarray
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.shape != (N_RBINS, N_DBINS):
            raise SignatureFormatError(f"EMFD values must be 16x32, got {v.shape}")
        if not np.all(np.isfinite(v)) or np.any(v < 0):
            raise SignatureFormatError("EMFD values must be finite and non-negative")
        if self.kind == "histogram":
            if np.any(v > 1) or not np.allclose(v.sum(axis=1), 1.0, rtol=0, atol=1e-9):
                raise SignatureFormatError("histogram rows must be probability vectors")
        elif self.kind != "kde":
            raise SignatureFormatError(f"unknown EMFD kind {self.kind!r}")
        object.__setattr__(self, "values", v)

    @property
    def feature(self) -> str:
        return "emfd" if self.kind == "histogram" else "emfd-kde"

    def vector(self) -> np.ndarray:
        return self.values.reshape(-1)


@dataclass(frozen=True, eq=False)
class MfdVlSignature:
    values: np.ndarray
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64).reshape(-1)
        if v.size != MFDVL_LENGTH:
            raise SignatureFormatError(f"MFD-VL needs {MFDVL_LENGTH} values, got {v.size}")
        if not np.all(np.isfinite(v)):
            raise SignatureFormatError("MFD-VL values must be finite")
        object.__setattr__(self, "values", v)

    feature = "mfd-vl"

    def vector(self) -> np.ndarray:
        return self.values


@dataclass(frozen=True, eq=False)
class FeatureVector:
    """Baseline feature (``mfcc13``, ``mfcc39`` or ``logmel``) in the same container."""

    feature: str
    values: np.ndarray
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64).reshape(-1)
        if not np.all(np.isfinite(v)):
            raise SignatureFormatError(f"{self.feature} values must be finite")
        expected = {"mfcc13": 13, "mfcc39": 39}.get(self.feature)
        if expected is not None and v.size != expected:
            raise SignatureFormatError(f"{self.feature} needs {expected} values, got {v.size}")
        if self.feature not in ("mfcc13", "mfcc39", "logmel"):
            raise SignatureFormatError(f"unknown baseline feature {self.feature!r}")
        object.__setattr__(self, "values", v)

    def vector(self) -> np.ndarray:
        return self.values


@dataclass(frozen=True)
class Bandwidth:
    h: float
    alpha: float
    sigma_rbin: float
    naw: int


# --- histogram ---------------------------------------------------------------

def dbin_index(values) -> np.ndarray:
    """Zero-based dbin of each enhanced MFD value, clamped into ``[0, 31]``.

    Bin ``d`` (one-based) is ``[1 + (d-1)/32, 1 + d/32)``; values below 1 go to
    the first bin and values ``>= 2`` to the last.
    """
    v = np.asarray(values, dtype=np.float64)
    return np.clip(np.floor((v - 1.0) * N_DBINS), 0, N_DBINS - 1).astype(np.int64)


def emfd_histogram(window_values, period_ms: float = ANALYSIS_PERIOD_MS) -> EmfdSignature:
    """Histogram signature from an ``(NAW, 16)`` array of enhanced MFD values."""
    m = np.asarray(window_values, dtype=np.float64)
    naw = m.shape[0]
    counts = np.zeros((N_RBINS, N_DBINS))
    idx = dbin_index(m)
    for b in range(N_RBINS):
        counts[b] = np.bincount(idx[:, b], minlength=N_DBINS)
    return EmfdSignature("histogram", counts / naw, {"window_ms": period_ms})


def emfd(signal: Signal, period_ms: float = ANALYSIS_PERIOD_MS) -> EmfdSignature:
    """EMFD histogram of a signal: per-rbin share of 50 ms windows in each dbin."""
    return emfd_histogram(enhanced_mfd_windows(signal, period_ms), period_ms)


# --- kernel density ----------------------------------------------------------

def gaussian_kernel(x):
    x = np.asarray(x, dtype=np.float64)
    return np.exp(-0.5 * x * x) / np.sqrt(2.0 * np.pi)


def bandwidth_scott(sigma: float, n: int) -> float:
    """Normal-reference bandwidth ``1.06 * sigma * n**(-1/5)``."""
    if sigma < 0 or n < 1:
        raise ValueError("need sigma >= 0 and n >= 1")
    return 1.06 * sigma * n ** -0.2


def bandwidth_rbin(values, alpha: float) -> Bandwidth:
    """Per-rbin bandwidth ``1.06 * sigma * NAW**(-1/5) * alpha``.

    ``sigma`` is the population standard deviation.  Degenerate samples
    (``sigma < 1e-6``) get the floor ``h = 1e-6``.
    """
    v = np.asarray(values, dtype=np.float64).reshape(-1)
    if v.size == 0:
        raise ValueError("empty sample set")
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    sigma = float(np.std(v))
    if sigma < SIGMA_EPS:
        return Bandwidth(H_FLOOR, alpha, sigma, v.size)
    return Bandwidth(bandwidth_scott(sigma, v.size) * alpha, alpha, sigma, v.size)


def kde_at(points, samples, h: float) -> np.ndarray:
    """Gaussian KDE ``(1/(n h)) sum K((x - m)/h)`` evaluated at ``points``."""
    samples = np.asarray(samples, dtype=np.float64).reshape(-1)
    u = (np.asarray(points, dtype=np.float64)[:, None] - samples[None, :]) / h
    return gaussian_kernel(u).sum(axis=1) / (samples.size * h)


def emfd_kde_from_values(
    window_values, alpha: float = 32.0, period_ms: float = ANALYSIS_PERIOD_MS
) -> EmfdSignature:
    m = np.asarray(window_values, dtype=np.float64)
    out = np.empty((N_RBINS, N_DBINS))
    for b in range(N_RBINS):
        bw = bandwidth_rbin(m[:, b], alpha)
        out[b] = kde_at(DBIN_MIDPOINTS, m[:, b], bw.h)
    return EmfdSignature("kde", out, {"window_ms": period_ms, "alpha": float(alpha)})


def emfd_kde(
    signal: Signal, alpha: float = 32.0, period_ms: float = ANALYSIS_PERIOD_MS
) -> EmfdSignature:
    """EMFD-KDE: per-rbin Gaussian density of window values at the 32 dbin midpoints.

    No renormalization is applied after evaluation on ``[1, 2]``.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    return emfd_kde_from_values(enhanced_mfd_windows(signal, period_ms), alpha, period_ms)


# --- MFD-VL ------------------------------------------------------------------

def tile_to_min_duration(signal: Signal, seconds: float = 1.0) -> Signal:
    """Repeat whole copies of ``signal`` until it is strictly longer than ``seconds``."""
    n = len(signal)
    if n == 0:
        raise ValueError("empty signal")
    need = seconds * signal.sample_rate
    if n > need:
        return signal
    reps = int(np.floor(need / n)) + 1
    return signal.with_samples(np.tile(signal.samples, reps))


def mfdvl(signal: Signal) -> MfdVlSignature:
    """Very-long-range MFD: 10 dimensions from square-sausage areas of the whole sound."""
    sig = tile_to_min_duration(signal, 1.0)
    radii = mfdvl_radii(sig.sample_rate).radii
    areas = np.array([extents(sig.samples, int(r), "square").sum() for r in radii])
    # r decreases with x, so the ratio pairs read (larger, smaller)
    values = dimension_from_areas(areas[1:], areas[:-1], radii[1:], radii[:-1])
    return MfdVlSignature(values, {"sample_rate": sig.sample_rate})


# --- serialization -----------------------------------------------------------

def _with_params(params: dict) -> dict:
    return {k: (float(v) if isinstance(v, (np.floating, float)) else v) for k, v in params.items()}


def serialize_signature(record) -> bytes:
    """Versioned JSON; EMFD matrices are flattened row-major (rbin-major)."""
    doc = {
        "format_version": FORMAT_VERSION,
        "feature": record.feature,
        "params": _with_params(record.params),
        # repr of a Python float is the shortest round-trip form (17 sig. digits max)
        "values": [float(v) for v in record.vector()],
    }
    return (json.dumps(doc) + "\n").encode("utf-8")


def deserialize_signature(data):
    try:
        doc = json.loads(data.decode("utf-8") if isinstance(data, (bytes, bytearray)) else data)
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise SignatureFormatError(f"not a signature document: {exc}") from exc
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise SignatureFormatError(
            f"unsupported format_version {version!r}; expected one of [{FORMAT_VERSION}]"
        )
    feature = doc.get("feature")
    values = np.asarray(doc.get("values", []), dtype=np.float64)
    params = doc.get("params", {})
    if feature in ("emfd", "emfd-kde"):
        if values.size != N_RBINS * N_DBINS:
            raise SignatureFormatError(f"{feature} needs 512 values, got {values.size}")
        kind = "histogram" if feature == "emfd" else "kde"
        return EmfdSignature(kind, values.reshape(N_RBINS, N_DBINS), params)
    if feature == "mfd-vl":
        return MfdVlSignature(values, params)
    return FeatureVector(feature, values, params)
