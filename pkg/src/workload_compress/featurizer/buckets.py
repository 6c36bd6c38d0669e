"""Histogram bucketing of numeric statistics."""

from __future__ import annotations

import math

from ..errors import InvalidBounds, InvalidEpsilon

# Reserved bucket for an exact zero under exponential bucketing; no finite
# positive double maps this low.
ZERO_BUCKET = -(2**31)


def bucketize(value: float, lo: float, hi: float, buckets: int, *, open_range: bool = False) -> int:
    """Bucket id ``floor((v - lo) / (hi - lo) * H)``.

    Values are clamped into ``[lo, hi]`` first, except that with
    ``open_range`` values above ``hi`` keep growing past ``H`` so ids handed
    out earlier never move when the range is widened later.
    """
    if not lo < hi:
        raise InvalidBounds(f"need min < max, got ({lo}, {hi})")
    v = max(value, lo)
    if not open_range:
        v = min(v, hi)
    # multiply before dividing: (8 - 5) * 10 / 5 is exact, (8 - 5) / 5 * 10 is not
    b = math.floor((v - lo) * buckets / (hi - lo))
    if not open_range:
        b = min(b, buckets)
    return int(b)


def bucketize_exponential(value: float, epsilon: float) -> int:
    """Bucket ``j`` whose ``(1 + eps)**j`` is closest to ``value``; ties go to the smaller ``j``."""
    if not (epsilon > 0) or not math.isfinite(epsilon):
        raise InvalidEpsilon(f"epsilon must be > 0, got {epsilon!r}")
    if not value >= 0:
        raise ValueError(f"exponential bucketing needs value >= 0, got {value!r}")
    if value == 0:
        return ZERO_BUCKET
    base = 1.0 + epsilon
    guess = math.floor(math.log(value) / math.log(base))
    best, best_err = None, math.inf
    for j in range(guess - 1, guess + 3):
        try:
            err = abs(value - base**j)
        except OverflowError:
            err = math.inf
        if err < best_err:
            best, best_err = j, err
    return best


def equi_width_bounds(epsilon: float, buckets: int) -> tuple[float, float]:
    """Fixed bounds that make linear bucketing use bins of width ``1 + eps``.

    With these bounds bucket ``j`` covers ``[j (1+eps), (j+1) (1+eps))``.
    """
    if not (epsilon > 0):
        raise InvalidEpsilon(f"epsilon must be > 0, got {epsilon!r}")
    return 0.0, (1.0 + epsilon) * buckets
