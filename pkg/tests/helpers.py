import numpy as np

from fracsig.audio import Signal


def sine(freq, seconds, rate=44100, amp=32000.0):
    t = np.arange(int(round(seconds * rate))) / rate
    return Signal(amp * np.sin(2 * np.pi * freq * t), rate)
