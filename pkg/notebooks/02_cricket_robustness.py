"""
Cricket models: carrier changes and noise
=========================================

Two cricket chirp models keep their amplitude envelope while the carrier
moves between 5300 and 6300 Hz.  MFD-VL barely notices the carrier; MFCC13
does.  Mixing the second model with pink noise at 6 to 30 dB SNR shows how
each feature drifts as noise grows.
"""
import itertools

import numpy as np

from fracsig import synth
from fracsig.baseline import mfcc13
from fracsig.metrics import dr_mfcc13, dr_mfdvl
from fracsig.signature import mfdvl
from _plotting import figure

DURATION, SEED = 5.0, 3

members = synth.test_set("SS_t4", DURATION, SEED)
feats = {label: (mfdvl(s).values, mfcc13(s)) for label, s in members}

print("pairs with the same envelope, different carrier")
for (la, (va, ma)), (lb, (vb, mb)) in itertools.combinations(feats.items(), 2):
    if la.split("(")[0] != lb.split("(")[0]:
        continue
    print(f"  {la:45s} vs {lb:45s}  DR_mfdvl {dr_mfdvl(va, vb):.4f}  DR_mfcc13 {dr_mfcc13(ma, mb):.4f}")

# %%
# SNR sweep.  Every level reuses the same noise realization so only beta
# changes between rows.
ref = synth.generate(synth.SynthSpec("snr_mix", {"beta": 1.0}, DURATION, SEED))
ref_vl, ref_mc = mfdvl(ref).values, mfcc13(ref)
snr, dv, dm = [], [], []
for spec in synth.test_set_specs("SS_t5", DURATION, SEED):
    mix = synth.generate(spec)
    b = spec.parameters["beta"]
    snr.append(20 * np.log10(b / (1 - b)))
    dv.append(dr_mfdvl(ref_vl, mfdvl(mix).values))
    dm.append(dr_mfcc13(ref_mc, mfcc13(mix)))
    print(f"beta={b:<5} SNR {snr[-1]:5.1f} dB  DR_mfdvl {dv[-1]:.4f}  DR_mfcc13 {dm[-1]:.4f}")

plt, save = figure()
if plt:
    plt.plot(snr, dv, "-o", label="MFD-VL")
    plt.plot(snr, dm, "-s", label="MFCC13")
    plt.xlabel("SNR (dB)")
    plt.ylabel("discrimination rate")
    plt.legend()
    save("cricket_snr.png")
