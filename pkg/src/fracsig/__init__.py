"""Multiscale fractal-dimension signatures for environmental sound retrieval.

Submodules: :mod:`~fracsig.audio`, :mod:`~fracsig.synth`, :mod:`~fracsig.fractal`,
:mod:`~fracsig.signature`, :mod:`~fracsig.baseline`, :mod:`~fracsig.metrics`,
:mod:`~fracsig.retrieval` and the :mod:`~fracsig.cli` entry point.
"""
from .audio import Signal, load_wav, normalize_peak, write_wav
from .signature import emfd, emfd_kde, mfdvl
from .baseline import mfcc13, mfcc39, log_mel
from .metrics import dr_mfcc13, dr_mfdvl, jaccard_si, normalize_tags, precision_at_k

__version__ = "0.1.0"

__all__ = [
    "Signal",
    "load_wav",
    "write_wav",
    "normalize_peak",
    "emfd",
    "emfd_kde",
    "mfdvl",
    "mfcc13",
    "mfcc39",
    "log_mel",
    "dr_mfdvl",
    "dr_mfcc13",
    "jaccard_si",
    "normalize_tags",
    "precision_at_k",
]
