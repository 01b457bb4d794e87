"""Deterministic synthetic test signals.

Pre-filter waveforms (``*_waveform``, :func:`sim_cricket`, ...) are closed-form
unit-amplitude arrays evaluated at ``t = n / sample_rate``.  The ``beat_sine``
and ``pulse_sine`` generators peak-normalize that waveform and add background
pink noise through :func:`pink_filter`.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import signal as sps

from .audio import CANONICAL_RATE, Signal, duration_seconds, normalize_peak

__all__ = [
    "SynthSpec",
    "TEST_SETS",
    "DEFAULT_DURATION",
    "time_axis",
    "pink_noise",
    "low_cut",
    "pink_filter",
    "beat_waveform",
    "beat_sine",
    "pulse_gate",
    "pulse_waveform",
    "pulse_sine",
    "hann",
    "cricket_ts",
    "sim_cricket",
    "cricket_gate",
    "sim_cricket2",
    "mix_snr",
    "generate",
    "test_set",
    "test_set_specs",
    "spec_label",
    "plain_sine",
]

DEFAULT_DURATION = 21.0
LOW_CUT_HZ = 40.0
CRICKET2_FLOOR = 0.05
TEST_SETS = ("SS_t1", "SS_t2", "SS_t3", "SS_t4", "SS_t5")


@dataclass(frozen=True)
class SynthSpec:
    kind: str
    parameters: dict = field(default_factory=dict)
    duration: float = DEFAULT_DURATION
    seed: int = 0

    def __post_init__(self):
        kinds = ("beat_sine", "pulse_sine", "cricket", "cricket2", "pink_noise", "snr_mix")
        if self.kind not in kinds:
            raise ValueError(f"unknown synth kind {self.kind!r}")
        p = self.parameters
        for name in ("f_beat", "f_content", "f_pulse", "f_c", "f_e", "f_rep"):
            if name in p and not p[name] > 0:
                raise ValueError(f"{name} must be > 0")
        if "w_pulse" in p and not 0 < p["w_pulse"] <= 1:
            raise ValueError("w_pulse must be in (0, 1]")
        if "beta" in p and not 0 <= p["beta"] <= 1:
            raise ValueError("beta must be in [0, 1]")
        if "sn" in p and (int(p["sn"]) != p["sn"] or p["sn"] < 1):
            raise ValueError("sn must be a positive integer")
        if self.duration <= 0:
            raise ValueError("duration must be positive")


def time_axis(duration: float, sample_rate: int = CANONICAL_RATE) -> np.ndarray:
    n = int(round(duration * sample_rate))
    return np.arange(n) / sample_rate


def _rng(seed) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed))


# --- noise and filters -------------------------------------------------------

def low_cut(signal: Signal, fc: float = LOW_CUT_HZ) -> Signal:
    """4th-order Butterworth high-pass (two cascaded biquads) at ``fc``."""
    if not 0 < fc < signal.sample_rate / 2:
        raise ValueError(f"cutoff must lie in (0, {signal.sample_rate / 2}), got {fc}")
    sos = sps.butter(4, fc, btype="highpass", fs=signal.sample_rate, output="sos")
    y = sps.sosfilt(sos, signal.samples)
    # filter ringing can nudge a full-scale input past the 16-bit range
    return signal.with_samples(np.clip(y, -32768.0, 32767.0))


def pink_noise(duration: float, seed: int, sample_rate: int = CANONICAL_RATE) -> Signal:
    """1/f noise by spectral shaping of white noise, low-cut at 40 Hz, peak -0.1 dB."""
    if duration <= 0:
        raise ValueError("duration must be positive")
    n = int(round(duration * sample_rate))
    white = _rng(seed).standard_normal(n)
    spec = np.fft.rfft(white)
    f = np.fft.rfftfreq(n, 1.0 / sample_rate)
    scale = np.zeros_like(f)
    scale[1:] = 1.0 / np.sqrt(f[1:])
    x = np.fft.irfft(spec * scale, n)
    x *= 32767.0 / np.max(np.abs(x))
    return normalize_peak(low_cut(Signal(x, sample_rate), LOW_CUT_HZ))


def pink_filter(signal: Signal, seed: int) -> Signal:
    """``15/16 * signal + 1/16 * pink_noise`` (amplitude ratio 15, about 23.5 dB)."""
    noise = pink_noise(duration_seconds(signal), seed, signal.sample_rate)
    if len(noise) != len(signal):
        raise ValueError("noise length mismatch")
    return signal.with_samples(signal.samples * (15.0 / 16.0) + noise.samples / 16.0)


# --- closed-form waveforms ---------------------------------------------------

def beat_waveform(f_beat, f_content, duration, sample_rate=CANONICAL_RATE) -> np.ndarray:
    t = time_axis(duration, sample_rate)
    return np.cos(np.pi * f_beat * t) * np.sin(2 * np.pi * f_content * t)


def pulse_gate(f_pulse, w_pulse, t) -> np.ndarray:
    t = np.asarray(t, dtype=np.float64)
    return (np.mod(t, 1.0 / f_pulse) <= w_pulse / f_pulse).astype(np.float64)


def pulse_waveform(f_pulse, w_pulse, f_content, duration, sample_rate=CANONICAL_RATE):
    t = time_axis(duration, sample_rate)
    return pulse_gate(f_pulse, w_pulse, t) * np.sin(2 * np.pi * f_content * t)


def hann(x):
    """Hann window ``(1 - cos(2 pi x)) / 2`` on ``[0, 1]``."""
    return 0.5 * (1.0 - np.cos(2.0 * np.pi * np.asarray(x, dtype=np.float64)))


def cricket_ts(t, f):
    """Syllable time ``min(t mod 1/f, 1/(1.1 f))``."""
    return np.minimum(np.mod(np.asarray(t, dtype=np.float64), 1.0 / f), 1.0 / (1.1 * f))


def sim_cricket(f_c, f_e, duration, sample_rate=CANONICAL_RATE) -> np.ndarray:
    """Hann-grain cricket chirp train; unit amplitude, not normalized."""
    if f_c <= 0 or f_e <= 0:
        raise ValueError("f_c and f_e must be positive")
    t = time_axis(duration, sample_rate)
    return np.sin(2 * np.pi * f_c * t) * hann(1.1 * f_e * cricket_ts(t, f_e))


def cricket_gate(f_e, sn, f_rep, t) -> np.ndarray:
    t = np.asarray(t, dtype=np.float64)
    return np.where(np.mod(t, 1.0 / f_rep) <= sn / f_e, 1.0, CRICKET2_FLOOR)


def sim_cricket2(f_c, sn, f_rep, f_e, duration, sample_rate=CANONICAL_RATE) -> np.ndarray:
    """Groups of ``sn`` syllables repeated ``f_rep`` times per second."""
    if sn < 1 or f_rep <= 0:
        raise ValueError("sn must be >= 1 and f_rep > 0")
    if sn / f_e > 1.0 / f_rep:
        raise ValueError(
            f"chirp group ({sn}/{f_e} s) does not fit in the repetition period (1/{f_rep} s)"
        )
    t = time_axis(duration, sample_rate)
    return cricket_gate(f_e, sn, f_rep, t) * sim_cricket(f_c, f_e, duration, sample_rate)


def _to_signal(wave: np.ndarray, sample_rate: int) -> Signal:
    return normalize_peak(Signal(wave * 32767.0, sample_rate))


def beat_sine(f_beat, f_content, duration, seed, sample_rate=CANONICAL_RATE) -> Signal:
    if f_beat <= 0 or f_content <= 0:
        raise ValueError("f_beat and f_content must be positive")
    return pink_filter(_to_signal(beat_waveform(f_beat, f_content, duration, sample_rate), sample_rate), seed)


def plain_sine(f_content, duration, seed, sample_rate=CANONICAL_RATE) -> Signal:
    """Filtered sine without envelope; the no-beat reference."""
    t = time_axis(duration, sample_rate)
    return pink_filter(_to_signal(np.sin(2 * np.pi * f_content * t), sample_rate), seed)


def pulse_sine(f_pulse, w_pulse, f_content, duration, seed, sample_rate=CANONICAL_RATE) -> Signal:
    if f_pulse <= 0 or not 0 < w_pulse <= 1:
        raise ValueError("need f_pulse > 0 and 0 < w_pulse <= 1")
    wave = pulse_waveform(f_pulse, w_pulse, f_content, duration, sample_rate)
    return pink_filter(_to_signal(wave, sample_rate), seed)


def mix_snr(signal: Signal, noise: Signal, beta: float) -> Signal:
    """``beta * signal + (1 - beta) * noise``."""
    if not 0 <= beta <= 1:
        raise ValueError("beta must be in [0, 1]")
    if len(signal) != len(noise) or signal.sample_rate != noise.sample_rate:
        raise ValueError("signal and noise must have equal length and rate")
    return signal.with_samples(beta * signal.samples + (1.0 - beta) * noise.samples)


# --- named families ----------------------------------------------------------

def generate(spec: SynthSpec, sample_rate: int = CANONICAL_RATE) -> Signal:
    """Render one :class:`SynthSpec`.

    Cricket kinds are peak-normalized and pink-filtered; ``snr_mix`` mixes the
    reference ``cricket2`` (5800, 3, 2.73, 30) with pink noise at ``beta``.
    """
    p, d, seed = spec.parameters, spec.duration, spec.seed
    if spec.kind == "beat_sine":
        return beat_sine(p["f_beat"], p["f_content"], d, seed, sample_rate)
    if spec.kind == "pulse_sine":
        return pulse_sine(p["f_pulse"], p["w_pulse"], p["f_content"], d, seed, sample_rate)
    if spec.kind == "cricket":
        wave = sim_cricket(p["f_c"], p["f_e"], d, sample_rate)
        return pink_filter(_to_signal(wave, sample_rate), seed)
    if spec.kind == "cricket2":
        wave = sim_cricket2(p["f_c"], int(p["sn"]), p["f_rep"], p["f_e"], d, sample_rate)
        return pink_filter(_to_signal(wave, sample_rate), seed)
    if spec.kind == "pink_noise":
        return pink_noise(d, seed, sample_rate)
    if spec.kind == "snr_mix":
        ref = _to_signal(sim_cricket2(5800, 3, 2.73, 30, d, sample_rate), sample_rate)
        return mix_snr(ref, pink_noise(d, seed, sample_rate), p["beta"])
    raise ValueError(f"unknown synth kind {spec.kind!r}")


def spec_label(spec: SynthSpec) -> str:
    args = ",".join(f"{k}={v:g}" for k, v in spec.parameters.items())
    return f"{spec.kind}({args})"


def _specs(name: str, duration: float, seed: int) -> list[SynthSpec]:
    if name == "SS_t1":
        rows = [("beat_sine", {"f_beat": fb, "f_content": 440.0})
                for fb in (0.5, 1, 2, 4, 8, 16, 32)]
    elif name == "SS_t2":
        rows = [("beat_sine", {"f_beat": fb, "f_content": 440.0}) for fb in (2, 4)]
        rows += [("pulse_sine", {"f_pulse": fp, "w_pulse": 0.5, "f_content": 440.0})
                 for fp in (2, 4)]
    elif name == "SS_t3":
        rows = [("pulse_sine", {"f_pulse": 4.0, "w_pulse": w, "f_content": 440.0})
                for w in (0.2, 0.5, 0.8)]
    elif name == "SS_t4":
        rows = [("cricket", {"f_c": f, "f_e": 30.0}) for f in (5300, 5800, 6300)]
        rows += [("cricket2", {"f_c": f, "sn": 3, "f_rep": 2.73, "f_e": 30.0})
                 for f in (5300, 5800, 6300)]
    elif name == "SS_t5":
        rows = [("snr_mix", {"beta": b}) for b in (0.67, 0.8, 0.89, 0.94, 0.97)]
    else:
        raise ValueError(f"unknown test set {name!r}; expected one of {TEST_SETS}")
    if name == "SS_t5":
        # one noise realization shared by every SNR level
        seeds = [seed] * len(rows)
    else:
        seeds = [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(len(rows))]
    return [SynthSpec(kind, params, duration, s) for (kind, params), s in zip(rows, seeds)]


def test_set(name: str, duration: float = DEFAULT_DURATION, seed: int = 0,
             sample_rate: int = CANONICAL_RATE) -> list[tuple[str, Signal]]:
    """Members of a named test family as ``(label, signal)`` pairs.

    Each member draws its own pink-noise realization from ``seed``, except
    ``SS_t5`` whose SNR levels share one noise signal.
    """
    return [(spec_label(s), generate(s, sample_rate)) for s in _specs(name, duration, seed)]


def test_set_specs(name: str, duration: float = DEFAULT_DURATION, seed: int = 0) -> list[SynthSpec]:
    return _specs(name, duration, seed)


# keep pytest from collecting these names
test_set.__test__ = False
test_set_specs.__test__ = False
