"""Discrimination rates, tag similarity and ranking quality."""
from __future__ import annotations

import os
import re
from importlib import resources
from pathlib import Path

import numpy as np

from .porter import stem

__all__ = [
    "RANGE_MFDVL",
    "RANGE_MFCC13",
    "TagSet",
    "discrimination_rate",
    "dr_mfdvl",
    "dr_mfcc13",
    "load_stopwords",
    "default_stopwords",
    "normalize_tags",
    "jaccard_si",
    "precision_at_k",
]

RANGE_MFDVL = 1.0
RANGE_MFCC13 = 56.3
STOPWORDS_ENV = "FRACSIG_STOPWORDS"

_SPLIT = re.compile(r"[^0-9a-z]+")
_JOINERS = re.compile(r"[-_\s]+")


class TagSet(frozenset):
    """Normalized tag tokens (lowercase, stemmed, stopword-free)."""


def discrimination_rate(a, b, value_range: float, length: int | None = None) -> float:
    """RMS of ``(a - b) / value_range``."""
    a = np.asarray(a, dtype=np.float64).reshape(-1)
    b = np.asarray(b, dtype=np.float64).reshape(-1)
    if a.size != b.size or (length is not None and a.size != length):
        raise ValueError(f"length mismatch: {a.size} vs {b.size}"
                         + (f" (expected {length})" if length else ""))
    return float(np.sqrt(np.mean(((a - b) / value_range) ** 2)))


def _values(x):
    return x.vector() if hasattr(x, "vector") else x


def dr_mfdvl(a, b) -> float:
    return discrimination_rate(_values(a), _values(b), RANGE_MFDVL, 10)


def dr_mfcc13(a, b) -> float:
    return discrimination_rate(_values(a), _values(b), RANGE_MFCC13, 13)


def load_stopwords(path) -> list[str]:
    """One token per line; blank lines and ``#`` comments are skipped."""
    out = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.split("#", 1)[0].strip().lower()
        if line:
            out.append(line)
    return out


def default_stopwords() -> list[str]:
    override = os.environ.get(STOPWORDS_ENV)
    if override:
        return load_stopwords(override)
    with resources.as_file(resources.files("fracsig") / "data" / "stopwords.txt") as p:
        return load_stopwords(p)


def normalize_tags(raw, stopwords=None) -> TagSet:
    """Lowercase, drop field-recording tags, split, Porter-stem, drop stopwords.

    A tag is dropped whole when its lowercase form with hyphens, underscores
    and spaces removed contains ``"fieldrecord"``.  The remaining tags are
    split on any non-alphanumeric character.
    """
    if stopwords is None:
        stopwords = default_stopwords()
    stop = {w.lower() for w in stopwords}
    stop |= {stem(w) for w in stop}
    tokens = set()
    for tag in raw:
        tag = tag.lower()
        if "fieldrecord" in _JOINERS.sub("", tag):
            continue
        for tok in _SPLIT.split(tag):
            if not tok or tok in stop:
                continue
            s = stem(tok)
            if s and s not in stop and "fieldrecord" not in s:
                tokens.add(s)
    return TagSet(tokens)


def jaccard_si(a, b) -> float:
    a, b = set(a), set(b)
    union = a | b
    if not union:
        raise ValueError("Jaccard similarity undefined for two empty tag sets")
    return len(a & b) / len(union)


def precision_at_k(ranked_labels, key_label, k: int) -> float:
    if k < 1:
        raise ValueError("k must be >= 1")
    if len(ranked_labels) < k:
        raise ValueError(f"ranked list has {len(ranked_labels)} entries, fewer than k={k}")
    return sum(1 for lab in ranked_labels[:k] if lab == key_label) / k
