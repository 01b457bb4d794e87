"""
MFD-VL and amplitude envelopes
==============================

A 440 Hz tone is masked by slow envelopes (cosine beats, rectangular
pulses) and then compared with the bare tone on the ten very-long-range
scales.  Envelopes show up as troughs at scales shorter than their period.
"""
import numpy as np

from fracsig import synth
from fracsig.fractal import mfdvl_radii
from fracsig.signature import mfdvl
from _plotting import figure

DURATION, SEED = 6.0, 1

# side length of the unit square for each of the ten values
side = 2 * mfdvl_radii(44100).radii[:10] / 44100
plain = mfdvl(synth.plain_sine(440, DURATION, SEED)).values
print("side (s):", np.round(side, 3))
print("plain   :", np.round(plain, 3))

# %%
# Beats.  The rectified envelope of cos(pi f t) repeats f times per second,
# so the trough moves to shorter scales as f grows.
beats = {}
for fb in (1, 2, 4, 8, 16):
    beats[fb] = mfdvl(synth.beat_sine(fb, 440, DURATION, SEED)).values
    diff = beats[fb] - plain
    print(f"f_beat={fb:>2}: deepest {diff.min():+.3f} at side {side[diff.argmin()]:.3f} s")

# %%
# Pulses of width 0.2, 0.5 and 0.8 of a 4 Hz period.  Narrow pulses leave
# long silent gaps and dig the deepest trough.
pulses = {w: mfdvl(synth.pulse_sine(4, w, 440, DURATION, SEED)).values for w in (0.2, 0.5, 0.8)}
for w, v in pulses.items():
    print(f"w_pulse={w}: minimum {v.min():.3f}")

plt, save = figure()
if plt:
    fig, (a, b) = plt.subplots(1, 2, figsize=(11, 4), sharey=True)
    a.plot(side, plain, "k-o", label="no beat")
    for fb, v in beats.items():
        a.plot(side, v, "-o", ms=3, label=f"{fb} Hz")
    b.plot(side, plain, "k-o", label="no pulse")
    for w, v in pulses.items():
        b.plot(side, v, "-o", ms=3, label=f"w={w}")
    for ax in (a, b):
        ax.set_xscale("log")
        ax.set_xlabel("side length of unit square (s)")
        ax.legend(fontsize=8)
    a.set_ylabel("MFD-VL")
    save("mfdvl_envelopes.png")
