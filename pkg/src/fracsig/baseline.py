"""Frequency-domain reference features: MFCC13, MFCC39 and log-mel energies.

A textbook pipeline (Hann frame, power spectrum, triangular mel filterbank,
natural log, orthonormal DCT-II).  Values are not meant to match SPTK.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.fft import dct

from .audio import Signal

__all__ = [
    "FrameSpec",
    "LOG_FLOOR",
    "hz_to_mel",
    "mel_to_hz",
    "mel_filterbank",
    "frames",
    "log_mel_frames",
    "mfcc_frames",
    "deltas",
    "mfcc13",
    "mfcc39",
    "log_mel",
]

LOG_FLOOR = 1e-10


def _next_pow2(n: int) -> int:
    return 1 << max(0, int(n - 1).bit_length())


@dataclass(frozen=True)
class FrameSpec:
    window_ms: float = 50.0
    hop_ms: float = 50.0
    fft_size: int | None = None
    n_mels: int = 40
    n_ceps: int = 13

    def __post_init__(self):
        if self.hop_ms > self.window_ms:
            raise ValueError("hop must not exceed the window")
        if self.n_ceps > self.n_mels:
            raise ValueError("n_ceps must not exceed n_mels")
        if self.window_ms <= 0 or self.hop_ms <= 0:
            raise ValueError("window and hop must be positive")

    def window_samples(self, sample_rate: int) -> int:
        return int(round(self.window_ms * sample_rate / 1000.0))

    def hop_samples(self, sample_rate: int) -> int:
        return int(round(self.hop_ms * sample_rate / 1000.0))

    def nfft(self, sample_rate: int) -> int:
        win = self.window_samples(sample_rate)
        if self.fft_size is None:
            return _next_pow2(win)
        if self.fft_size < win:
            raise ValueError("fft_size smaller than the analysis window")
        return int(self.fft_size)


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(n_mels: int, nfft: int, sample_rate: int) -> np.ndarray:
    """Triangular filters ``(n_mels, nfft//2 + 1)`` with unit peaks, 0 Hz to Nyquist."""
    freqs = np.fft.rfftfreq(nfft, 1.0 / sample_rate)
    edges = mel_to_hz(np.linspace(0.0, hz_to_mel(sample_rate / 2.0), n_mels + 2))
    lower, center, upper = edges[:-2, None], edges[1:-1, None], edges[2:, None]
    up = (freqs - lower) / (center - lower)
    down = (upper - freqs) / (upper - center)
    return np.maximum(0.0, np.minimum(up, down))


def frames(signal: Signal, spec: FrameSpec) -> np.ndarray:
    win = spec.window_samples(signal.sample_rate)
    hop = spec.hop_samples(signal.sample_rate)
    if len(signal) < win:
        raise ValueError(f"signal too short: {len(signal)} samples < {win}-sample window")
    n = 1 + (len(signal) - win) // hop
    idx = np.arange(win)[None, :] + hop * np.arange(n)[:, None]
    return signal.samples[idx]


def log_mel_frames(signal: Signal, spec: FrameSpec = FrameSpec()) -> np.ndarray:
    """Per-frame log mel-band energies ``(n_frames, n_mels)``.

    The power spectrum is divided by the FFT size so that zero-padding to a
    larger FFT leaves band energies essentially unchanged.
    """
    fr = frames(signal, spec)
    nfft = spec.nfft(signal.sample_rate)
    power = np.abs(np.fft.rfft(fr * np.hanning(fr.shape[1]), nfft, axis=1)) ** 2 / nfft
    energies = power @ mel_filterbank(spec.n_mels, nfft, signal.sample_rate).T
    return np.log(np.maximum(energies, LOG_FLOOR))


def mfcc_frames(signal: Signal, spec: FrameSpec = FrameSpec()) -> np.ndarray:
    logmel = log_mel_frames(signal, spec)
    return dct(logmel, type=2, norm="ortho", axis=1)[:, : spec.n_ceps]


def deltas(c: np.ndarray, width: int = 2) -> np.ndarray:
    """Regression deltas over ``+-width`` frames with edge replication."""
    n = np.arange(1, width + 1)
    padded = np.pad(c, ((width, width), (0, 0)), mode="edge")
    t = c.shape[0]
    num = sum(k * (padded[width + k : width + k + t] - padded[width - k : width - k + t]) for k in n)
    return num / (2.0 * np.sum(n * n))


def mfcc13(signal: Signal, spec: FrameSpec = FrameSpec()) -> np.ndarray:
    """Frame-averaged cepstral coefficients c0..c12."""
    return mfcc_frames(signal, spec).mean(axis=0)


def mfcc39(signal: Signal, spec: FrameSpec = FrameSpec()) -> np.ndarray:
    """MFCC13 means followed by mean deltas and mean delta-deltas."""
    c = mfcc_frames(signal, spec)
    if c.shape[0] < 5:
        raise ValueError(f"mfcc39 needs at least 5 frames, got {c.shape[0]}")
    d = deltas(c)
    dd = deltas(d)
    return np.concatenate([c.mean(axis=0), d.mean(axis=0), dd.mean(axis=0)])


def log_mel(signal: Signal, spec: FrameSpec = FrameSpec()) -> np.ndarray:
    return log_mel_frames(signal, spec).mean(axis=0)
