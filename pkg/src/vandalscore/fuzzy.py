"""Fuzzy string similarity: complete and partial ratios on a 0-100 scale.

The underlying distance is edit distance with insert/delete cost 1 and
substitution cost 2, so the complete ratio is 100 * (1 - d/(|a|+|b|)).
Matching is case-sensitive. Scores are rounded half-up using integer
arithmetic, so results are exact.
"""

from . import _accel


def _half_up(numerator, denominator):
    # round(numerator / denominator) with halves up, in exact integers
    return (2 * numerator + denominator) // (2 * denominator)


def fuzzy_ratio(a: str, b: str) -> int:
    """Similarity of the whole strings; 100 iff equal, 0 iff nothing shared."""
    lensum = len(a) + len(b)
    if lensum == 0:
        return 100
    d = _accel.indel_distance(a, b)
    return _half_up(100 * (lensum - d), lensum)


def fuzzy_partial_ratio(a: str, b: str) -> int:
    """Best fuzzy_ratio of the shorter string against any equal-length
    contiguous window of the longer one."""
    if len(a) <= len(b):
        short, long = a, b
    else:
        short, long = b, a
    if not short:
        return 100 if not long else 0
    d = _accel.min_window_indel(short, long)
    return _half_up(100 * (2 * len(short) - d), 2 * len(short))
