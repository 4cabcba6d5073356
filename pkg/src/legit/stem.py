"""Porter stemmer, 1980 definition.

Implements the original five-step suffix-stripping algorithm exactly as
published, without later revisions. Within a step the longest matching
suffix determines the rule; if that rule's condition fails, the step makes
no change. Conditions are evaluated on the stem remaining after the suffix
is removed.

Only ASCII lowercase words are stemmed; anything else passes through
unchanged so perturbed tokens never crash recovery evaluation.
"""

from __future__ import annotations

_VOWELS = "aeiou"


def _is_consonant(word: str, i: int) -> bool:
    ch = word[i]
    if ch in _VOWELS:
        return False
    if ch == "y":
        return i == 0 or not _is_consonant(word, i - 1)
    return True


def _measure(stem: str) -> int:
    """Number of vowel-consonant sequences: [C](VC)^m[V]."""
    m = 0
    i = 0
    n = len(stem)
    while i < n and _is_consonant(stem, i):
        i += 1
    while i < n:
        while i < n and not _is_consonant(stem, i):
            i += 1
        if i >= n:
            break
        m += 1
        while i < n and _is_consonant(stem, i):
            i += 1
    return m


def _contains_vowel(stem: str) -> bool:
    return any(not _is_consonant(stem, i) for i in range(len(stem)))


def _ends_double_consonant(word: str) -> bool:
    return (len(word) >= 2 and word[-1] == word[-2]
            and _is_consonant(word, len(word) - 1))


def _ends_cvc(word: str) -> bool:
    if len(word) < 3:
        return False
    if not (_is_consonant(word, len(word) - 3)
            and not _is_consonant(word, len(word) - 2)
            and _is_consonant(word, len(word) - 1)):
        return False
    return word[-1] not in "wxy"


def _apply_step(word: str, rules: list[tuple[str, str, object]]) -> str:
    """Longest matching suffix picks the rule; its condition gates the change."""
    best = None
    for suffix, replacement, cond in rules:
        if word.endswith(suffix):
            if best is None or len(suffix) > len(best[0]):
                best = (suffix, replacement, cond)
    if best is None:
        return word
    suffix, replacement, cond = best
    stem = word[: len(word) - len(suffix)]
    if cond is None or cond(stem):
        return stem + replacement
    return word


def _m_gt(k: int):
    return lambda stem: _measure(stem) > k


_STEP2 = [
    ("ational", "ate", _m_gt(0)), ("tional", "tion", _m_gt(0)),
    ("enci", "ence", _m_gt(0)), ("anci", "ance", _m_gt(0)),
    ("izer", "ize", _m_gt(0)), ("abli", "able", _m_gt(0)),
    ("alli", "al", _m_gt(0)), ("entli", "ent", _m_gt(0)),
    ("eli", "e", _m_gt(0)), ("ousli", "ous", _m_gt(0)),
    ("ization", "ize", _m_gt(0)), ("ation", "ate", _m_gt(0)),
    ("ator", "ate", _m_gt(0)), ("alism", "al", _m_gt(0)),
    ("iveness", "ive", _m_gt(0)), ("fulness", "ful", _m_gt(0)),
    ("ousness", "ous", _m_gt(0)), ("aliti", "al", _m_gt(0)),
    ("iviti", "ive", _m_gt(0)), ("biliti", "ble", _m_gt(0)),
]

_STEP3 = [
    ("icate", "ic", _m_gt(0)), ("ative", "", _m_gt(0)),
    ("alize", "al", _m_gt(0)), ("iciti", "ic", _m_gt(0)),
    ("ical", "ic", _m_gt(0)), ("ful", "", _m_gt(0)),
    ("ness", "", _m_gt(0)),
]

_STEP4 = [
    ("al", "", _m_gt(1)), ("ance", "", _m_gt(1)), ("ence", "", _m_gt(1)),
    ("er", "", _m_gt(1)), ("ic", "", _m_gt(1)), ("able", "", _m_gt(1)),
    ("ible", "", _m_gt(1)), ("ant", "", _m_gt(1)), ("ement", "", _m_gt(1)),
    ("ment", "", _m_gt(1)), ("ent", "", _m_gt(1)),
    ("ion", "", lambda stem: _m_gt(1)(stem) and stem[-1:] in ("s", "t")),
    ("ou", "", _m_gt(1)), ("ism", "", _m_gt(1)), ("ate", "", _m_gt(1)),
    ("iti", "", _m_gt(1)), ("ous", "", _m_gt(1)), ("ive", "", _m_gt(1)),
    ("ize", "", _m_gt(1)),
]


def _step1a(word: str) -> str:
    return _apply_step(word, [
        ("sses", "ss", None), ("ies", "i", None), ("ss", "ss", None), ("s", "", None),
    ])


def _step1b(word: str) -> str:
    if word.endswith("eed"):
        stem = word[:-3]
        return stem + "ee" if _measure(stem) > 0 else word
    removed = None
    if word.endswith("ed") and _contains_vowel(word[:-2]):
        removed = word[:-2]
    elif word.endswith("ing") and _contains_vowel(word[:-3]):
        removed = word[:-3]
    if removed is None:
        return word
    if removed.endswith(("at", "bl", "iz")):
        return removed + "e"
    if _ends_double_consonant(removed) and removed[-1] not in "lsz":
        return removed[:-1]
    if _measure(removed) == 1 and _ends_cvc(removed):
        return removed + "e"
    return removed


def _step1c(word: str) -> str:
    if word.endswith("y") and _contains_vowel(word[:-1]):
        return word[:-1] + "i"
    return word


def _step5a(word: str) -> str:
    if word.endswith("e"):
        stem = word[:-1]
        m = _measure(stem)
        if m > 1 or (m == 1 and not _ends_cvc(stem)):
            return stem
    return word


def _step5b(word: str) -> str:
    if (_measure(word) > 1 and _ends_double_consonant(word) and word.endswith("l")):
        return word[:-1]
    return word


def porter_stem(word: str) -> str:
    """Stem of an ASCII lowercase word; other inputs return unchanged.

    Words shorter than three letters are returned as-is, matching the
    reference implementation ("as" stays "as" rather than losing its s).
    """
    if len(word) < 3 or not all("a" <= ch <= "z" for ch in word):
        return word
    word = _step1a(word)
    word = _step1b(word)
    word = _step1c(word)
    word = _apply_step(word, _STEP2)
    word = _apply_step(word, _STEP3)
    word = _apply_step(word, _STEP4)
    word = _step5a(word)
    word = _step5b(word)
    return word
