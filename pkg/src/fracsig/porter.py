"""Porter suffix-stripping stemmer, the original 1980 rule set.

Only the published rules are applied (``ABLI -> ABLE`` in step 2, no
``LOGI`` rule, words of any length are processed).  Input is expected to be
lowercase ASCII letters.

>>> stem("caresses"), stem("ponies"), stem("relational"), stem("generalizations")
('caress', 'poni', 'relat', 'gener')
"""
from __future__ import annotations

from functools import lru_cache

__all__ = ["stem", "measure"]

_VOWELS = frozenset("aeiou")


def _consonants(word: str) -> list[bool]:
    flags: list[bool] = []
    for i, ch in enumerate(word):
        if ch in _VOWELS:
            flags.append(False)
        elif ch == "y":
            flags.append(True if i == 0 else not flags[i - 1])
        else:
            flags.append(True)
    return flags


def measure(stem_: str) -> int:
    """``m`` in ``[C](VC)^m[V]``."""
    flags = _consonants(stem_)
    return sum(1 for a, b in zip(flags, flags[1:]) if not a and b)


def _has_vowel(stem_: str) -> bool:
    return not all(_consonants(stem_))


def _double_consonant(word: str) -> bool:
    return len(word) >= 2 and word[-1] == word[-2] and _consonants(word)[-1]


def _cvc(word: str) -> bool:
    if len(word) < 3:
        return False
    f = _consonants(word)
    return f[-3] and not f[-2] and f[-1] and word[-1] not in "wxy"


def _m_gt(k):
    return lambda s: measure(s) > k


def _apply(word: str, rules) -> tuple[str, bool]:
    """Apply the rule whose suffix is the longest match; report if it fired."""
    best = None
    for suffix, repl, cond in rules:
        if word.endswith(suffix) and (best is None or len(suffix) > len(best[0])):
            best = (suffix, repl, cond)
    if best is None:
        return word, False
    suffix, repl, cond = best
    base = word[: len(word) - len(suffix)]
    if cond is None or cond(base):
        return base + repl, True
    return word, False


_STEP1A = [("sses", "ss", None), ("ies", "i", None), ("ss", "ss", None), ("s", "", None)]

_STEP2 = [(s, r, _m_gt(0)) for s, r in [
    ("ational", "ate"), ("tional", "tion"), ("enci", "ence"), ("anci", "ance"),
    ("izer", "ize"), ("abli", "able"), ("alli", "al"), ("entli", "ent"),
    ("eli", "e"), ("ousli", "ous"), ("ization", "ize"), ("ation", "ate"),
    ("ator", "ate"), ("alism", "al"), ("iveness", "ive"), ("fulness", "ful"),
    ("ousness", "ous"), ("aliti", "al"), ("iviti", "ive"), ("biliti", "ble"),
]]

_STEP3 = [(s, r, _m_gt(0)) for s, r in [
    ("icate", "ic"), ("ative", ""), ("alize", "al"), ("iciti", "ic"),
    ("ical", "ic"), ("ful", ""), ("ness", ""),
]]

_STEP4 = [(s, "", _m_gt(1)) for s in [
    "al", "ance", "ence", "er", "ic", "able", "ible", "ant", "ement", "ment",
    "ent", "ou", "ism", "ate", "iti", "ous", "ive", "ize",
]] + [("ion", "", lambda s: measure(s) > 1 and s[-1:] in ("s", "t"))]


def _step1b(word: str) -> str:
    if word.endswith("eed"):
        return word[:-1] if measure(word[:-3]) > 0 else word
    for suffix in ("ed", "ing"):
        if word.endswith(suffix):
            base = word[: -len(suffix)]
            if not _has_vowel(base):
                return word
            if base.endswith(("at", "bl", "iz")):
                return base + "e"
            if _double_consonant(base) and base[-1] not in "lsz":
                return base[:-1]
            if measure(base) == 1 and _cvc(base):
                return base + "e"
            return base
    return word


def _step5(word: str) -> str:
    if word.endswith("e"):
        base = word[:-1]
        m = measure(base)
        if m > 1 or (m == 1 and not _cvc(base)):
            word = base
    if measure(word) > 1 and _double_consonant(word) and word[-1] == "l":
        word = word[:-1]
    return word


@lru_cache(maxsize=65536)
def stem(word: str) -> str:
    """Stem one lowercase word."""
    w, _ = _apply(word, _STEP1A)
    w = _step1b(w)
    if w.endswith("y") and _has_vowel(w[:-1]):
        w = w[:-1] + "i"
    w, _ = _apply(w, _STEP2)
    w, _ = _apply(w, _STEP3)
    w, _ = _apply(w, _STEP4)
    return _step5(w)
