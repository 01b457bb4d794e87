"""PCM audio loading and normalization.

Samples are held on the 16-bit integer amplitude scale (as float64) so that
amplitude and sample-count axes are commensurate in the Minkowski-sausage
geometry of :mod:`fracsig.fractal`.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.io import wavfile

__all__ = [
    "AudioFormatError",
    "CANONICAL_RATE",
    "FULL_SCALE",
    "Signal",
    "load_wav",
    "write_wav",
    "normalize_peak",
    "duration_seconds",
]

CANONICAL_RATE = 44100
FULL_SCALE = 32767.0
INT16_MIN = -32768.0


class AudioFormatError(ValueError):
    """Raised when a WAV file cannot be read or does not match the required format."""


@dataclass(frozen=True, eq=False)
class Signal:
    """Mono PCM signal on the 16-bit amplitude scale.

    Parameters
    ----------
    samples : array_like
        Amplitudes in ``[-32768, 32767]``.  Stored as a read-only float64 array.
    sample_rate : int
        Sampling frequency in Hz.
    """

    samples: np.ndarray
    sample_rate: int = CANONICAL_RATE

    def __post_init__(self):
        x = np.array(self.samples, dtype=np.float64, copy=True).reshape(-1)
        if self.sample_rate <= 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")
        if x.size and not np.all(np.isfinite(x)):
            raise ValueError("samples must be finite")
        # tolerate float round-off at full scale
        if x.size and (x.max() > FULL_SCALE + 1e-6 or x.min() < INT16_MIN - 1e-6):
            raise ValueError("samples exceed the 16-bit amplitude range")
        x.setflags(write=False)
        object.__setattr__(self, "samples", x)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    def __len__(self):
        return self.samples.size

    def __eq__(self, other):
        if not isinstance(other, Signal):
            return NotImplemented
        return self.sample_rate == other.sample_rate and np.array_equal(
            self.samples, other.samples
        )

    @property
    def peak(self) -> float:
        return float(np.max(np.abs(self.samples))) if self.samples.size else 0.0

    def with_samples(self, samples) -> "Signal":
        return Signal(samples, self.sample_rate)


def duration_seconds(signal: Signal) -> float:
    return len(signal) / signal.sample_rate


def normalize_peak(signal: Signal, target_db: float = -0.1) -> Signal:
    """Scale ``signal`` so that its peak magnitude sits at ``target_db`` dBFS.

    Full scale is 32767.  The result is a single global multiplication of the
    input, so ``normalize_peak(k * s) == normalize_peak(s)`` for any ``k > 0``.

    Raises
    ------
    ValueError
        If the signal is empty or all zeros.
    """
    peak = signal.peak
    if peak == 0.0:
        raise ValueError("cannot normalize an all-zero signal")
    target = FULL_SCALE * 10.0 ** (target_db / 20.0)
    return signal.with_samples(signal.samples * (target / peak))


def _to_int16_scale(data: np.ndarray) -> np.ndarray:
    kind, bits = data.dtype.kind, data.dtype.itemsize * 8
    if kind == "u" and bits == 8:
        return (data.astype(np.float64) - 128.0) * 256.0
    if kind == "i":
        return data.astype(np.float64) / 2.0 ** (bits - 16)
    raise AudioFormatError(f"unsupported sample format: {data.dtype} (integer PCM required)")


def _resample_linear(x: np.ndarray, rate: int, target: int) -> np.ndarray:
    if x.size == 0:
        return x
    n_out = int(round(x.size * target / rate))
    t_out = np.arange(n_out) * (rate / target)
    return np.interp(t_out, np.arange(x.size), x)


def load_wav(path, mode: str = "strict") -> Signal:
    """Read a RIFF/WAVE integer-PCM file as a canonical mono 44.1 kHz signal.

    In ``"strict"`` mode the file must already be mono, 44100 Hz and 16-bit.
    In ``"convert"`` mode channels are averaged, other integer bit depths are
    rescaled to the 16-bit range and other rates are linearly resampled.
    """
    if mode not in ("strict", "convert"):
        raise ValueError(f"mode must be 'strict' or 'convert', got {mode!r}")
    path = Path(path)
    try:
        rate, data = wavfile.read(path)
    except (OSError, ValueError, EOFError) as exc:
        raise AudioFormatError(f"{path}: cannot read WAV file ({exc})") from exc

    channels = 1 if data.ndim == 1 else data.shape[1]
    if mode == "strict":
        if channels != 1 or rate != CANONICAL_RATE or data.dtype != np.int16:
            raise AudioFormatError(
                f"{path}: expected mono/{CANONICAL_RATE} Hz/int16, found "
                f"{channels} channel(s)/{rate} Hz/{data.dtype}"
            )
        return Signal(data.astype(np.float64), rate)

    x = _to_int16_scale(data)
    if x.ndim == 2:
        x = x.mean(axis=1)
    if rate != CANONICAL_RATE:
        x = _resample_linear(x, rate, CANONICAL_RATE)
    return Signal(x, CANONICAL_RATE)


def write_wav(path, signal: Signal) -> None:
    """Write ``signal`` as mono 16-bit PCM (samples rounded to integers)."""
    pcm = np.clip(np.rint(signal.samples), INT16_MIN, FULL_SCALE).astype(np.int16)
    wavfile.write(Path(path), signal.sample_rate, pcm)
