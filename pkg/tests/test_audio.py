import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays
from scipy.io import wavfile

from fracsig.audio import (
    AudioFormatError,
    Signal,
    duration_seconds,
    load_wav,
    normalize_peak,
    write_wav,
)

TARGET = 32767 * 10 ** (-0.1 / 20)


def test_signal_rejects_bad_rate_and_range():
    with pytest.raises(ValueError):
        Signal([0.0], 0)
    with pytest.raises(ValueError):
        Signal([40000.0], 44100)
    with pytest.raises(ValueError):
        Signal([np.nan], 44100)


def test_signal_is_read_only():
    s = Signal([1.0, 2.0])
    with pytest.raises(ValueError):
        s.samples[0] = 5.0


@pytest.mark.parametrize("n, rate, expected", [(44100, 44100, 1.0), (0, 44100, 0.0), (22050, 44100, 0.5)])
def test_duration(n, rate, expected):
    assert duration_seconds(Signal(np.zeros(n), rate)) == expected


def test_normalize_peak_spot_value():
    x = np.zeros(100)
    x[10] = 16384
    out = normalize_peak(Signal(x))
    # 32767 * 10**(-0.005), computed independently
    assert out.peak == pytest.approx(32391.919252623917, abs=1e-6)
    assert abs(out.peak - 32391.5) < 1.0


def test_normalize_peak_zero_signal():
    with pytest.raises(ValueError):
        normalize_peak(Signal(np.zeros(10)))


nonzero = arrays(np.float64, st.integers(1, 64), elements=st.floats(-32000, 32000)).filter(
    lambda a: np.max(np.abs(a)) > 1e-3
)


@settings(max_examples=60, deadline=None)
@given(nonzero)
def test_normalize_idempotent(x):
    once = normalize_peak(Signal(x))
    twice = normalize_peak(once)
    np.testing.assert_allclose(twice.samples, once.samples, rtol=1e-9, atol=0)
    assert abs(once.peak - TARGET) <= 1.0


@settings(max_examples=60, deadline=None)
@given(nonzero, st.floats(1e-3, 1.0))
def test_normalize_scale_invariant(x, k):
    a = normalize_peak(Signal(x))
    b = normalize_peak(Signal(k * x))
    np.testing.assert_allclose(b.samples, a.samples, rtol=1e-9, atol=1e-9 * TARGET)


def test_load_strict_identity(tmp_path, rng):
    pcm = rng.integers(-32768, 32767, 1000).astype(np.int16)
    wavfile.write(tmp_path / "a.wav", 44100, pcm)
    s = load_wav(tmp_path / "a.wav")
    assert len(s) == 1000 and s.sample_rate == 44100
    np.testing.assert_array_equal(s.samples, pcm)
    assert load_wav(tmp_path / "a.wav", mode="convert") == s


def test_load_stereo_opposites_downmix_to_zero(tmp_path):
    pcm = np.tile(np.array([[100, -100]], dtype=np.int16), (500, 1))
    wavfile.write(tmp_path / "st.wav", 44100, pcm)
    s = load_wav(tmp_path / "st.wav", mode="convert")
    assert len(s) == 500
    assert np.all(s.samples == 0)


def test_load_resamples_constant(tmp_path):
    wavfile.write(tmp_path / "c.wav", 22050, np.full(2205, 1234, dtype=np.int16))
    s = load_wav(tmp_path / "c.wav", mode="convert")
    assert s.sample_rate == 44100 and len(s) == 4410
    assert np.all(s.samples == 1234)


@pytest.mark.parametrize("dtype, value, expected", [
    (np.uint8, 192, 64 * 256),
    (np.int32, 1 << 28, 1 << 12),
])
def test_load_rescales_bit_depth(tmp_path, dtype, value, expected):
    wavfile.write(tmp_path / "b.wav", 44100, np.full(10, value, dtype=dtype))
    s = load_wav(tmp_path / "b.wav", mode="convert")
    assert np.all(s.samples == expected)


def test_strict_mode_reports_found_format(tmp_path):
    wavfile.write(tmp_path / "s.wav", 22050, np.zeros((10, 2), dtype=np.int16))
    with pytest.raises(AudioFormatError, match="2 channel.*22050"):
        load_wav(tmp_path / "s.wav")


def test_unreadable_and_float_files(tmp_path):
    (tmp_path / "junk.wav").write_bytes(b"not a wav")
    with pytest.raises(AudioFormatError):
        load_wav(tmp_path / "junk.wav")
    with pytest.raises(AudioFormatError):
        load_wav(tmp_path / "missing.wav")
    wavfile.write(tmp_path / "f.wav", 44100, np.zeros(10, dtype=np.float32))
    with pytest.raises(AudioFormatError):
        load_wav(tmp_path / "f.wav", mode="convert")


def test_write_round_trip(tmp_path):
    s = Signal(np.array([-32768.0, -1.4, 0.0, 2.6, 32767.0]))
    write_wav(tmp_path / "w.wav", s)
    back = load_wav(tmp_path / "w.wav")
    np.testing.assert_array_equal(back.samples, [-32768, -1, 0, 3, 32767])
    assert math.isclose(duration_seconds(back), 5 / 44100)
