"""Closed-interval arithmetic and exact range computations.

Every bound used by the branch-and-bound engines is assembled from the
primitives in this module.  Endpoint arithmetic uses plain nearest rounding
(not outward rounding); the solver convergence tolerances dominate rounding
error by many orders of magnitude.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

TWO_PI = 2.0 * math.pi
HALF_PI = 0.5 * math.pi


class DenominatorContainsZero(ArithmeticError):
    """Interval division by an interval that contains zero."""


class DimensionMismatch(ValueError):
    """Vector/box dimensions do not agree."""


@dataclass(frozen=True)
class Interval:
    """Closed real interval [lo, hi]; construction sorts unordered endpoints."""

    lo: float
    hi: float

    def __post_init__(self):
        lo, hi = float(self.lo), float(self.hi)
        if hi < lo:
            lo, hi = hi, lo
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        if not lo <= hi:
            raise ValueError(f"invalid interval endpoints: [{self.lo}, {self.hi}]")

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def center(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def contains(self, x: float) -> bool:
        return self.lo <= x <= self.hi

    def halves(self) -> tuple["Interval", "Interval"]:
        mid = self.center
        return Interval(self.lo, mid), Interval(mid, self.hi)


def add(a: Interval, b: Interval) -> Interval:
    return Interval(a.lo + b.lo, a.hi + b.hi)


def negate(a: Interval) -> Interval:
    return Interval(-a.hi, -a.lo)


def sub(a: Interval, b: Interval) -> Interval:
    return add(a, negate(b))


def mul(a: Interval, b: Interval) -> Interval:
    p = (a.lo * b.lo, a.lo * b.hi, a.hi * b.lo, a.hi * b.hi)
    return Interval(min(p), max(p))


def div(a: Interval, b: Interval) -> Interval:
    """Interval quotient; the denominator must not contain zero.

    Callers that can encounter a zero-straddling denominator must catch
    :class:`DenominatorContainsZero` and substitute their own conservative
    fallback; this function never widens silently.
    """
    if b.lo > 0.0 or b.hi < 0.0:
        return mul(a, Interval(1.0 / b.hi, 1.0 / b.lo))
    raise DenominatorContainsZero(f"denominator [{b.lo}, {b.hi}] contains zero")


@dataclass(frozen=True)
class Box:
    """Axis-aligned rectangle in R^k, stored as one Interval per dimension."""

    dims: tuple[Interval, ...]

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(self.dims))
        if len(self.dims) < 1:
            raise DimensionMismatch("a box needs at least one dimension")

    @classmethod
    def from_bounds(cls, lows: Sequence[float], highs: Sequence[float]) -> "Box":
        if len(lows) != len(highs):
            raise DimensionMismatch("lower/upper bound lengths differ")
        return cls(tuple(Interval(lo, hi) for lo, hi in zip(lows, highs)))

    @property
    def k(self) -> int:
        return len(self.dims)

    @property
    def center(self) -> np.ndarray:
        return np.array([d.center for d in self.dims])

    @property
    def widths(self) -> np.ndarray:
        return np.array([d.width for d in self.dims])

    @property
    def max_width(self) -> float:
        return max(d.width for d in self.dims)

    def lo_array(self) -> np.ndarray:
        return np.array([d.lo for d in self.dims])

    def hi_array(self) -> np.ndarray:
        return np.array([d.hi for d in self.dims])

    def contains(self, point: Sequence[float]) -> bool:
        if len(point) != self.k:
            raise DimensionMismatch("point dimension does not match box")
        return all(d.contains(float(x)) for d, x in zip(self.dims, point))

    def split_all(self) -> list["Box"]:
        """Bisect every dimension, yielding 2^k children in lexicographic order."""
        halves = [d.halves() for d in self.dims]
        children = []
        for code in range(1 << self.k):
            sel = tuple(halves[j][(code >> (self.k - 1 - j)) & 1] for j in range(self.k))
            children.append(Box(sel))
        return children


def sine_range_many(lo, hi, amplitude, phase):
    """Exact elementwise range of ``amplitude * sin(theta + phase)`` for theta in [lo, hi].

    Negative amplitudes are folded via A*sin(x) = |A|*sin(x + pi).  All four
    arguments broadcast; returns ``(range_lo, range_hi)`` arrays.
    """
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    amp = np.asarray(amplitude, dtype=float)
    ph = np.asarray(phase, dtype=float)
    ph = np.where(amp < 0.0, ph + math.pi, ph)
    amp = np.abs(amp)

    a = lo + ph
    b = hi + ph
    sa = np.sin(a)
    sb = np.sin(b)
    low = np.minimum(sa, sb)
    high = np.maximum(sa, sb)
    # first crest at or after a: pi/2 + 2*pi*ceil((a - pi/2) / 2*pi)
    crest = HALF_PI + TWO_PI * np.ceil((a - HALF_PI) / TWO_PI)
    high = np.where(crest <= b, 1.0, high)
    trough = -HALF_PI + TWO_PI * np.ceil((a + HALF_PI) / TWO_PI)
    low = np.where(trough <= b, -1.0, low)
    return amp * low, amp * high


def sine_range(theta: Interval, amplitude: float, phase: float) -> Interval:
    lo, hi = sine_range_many(theta.lo, theta.hi, amplitude, phase)
    return Interval(float(lo), float(hi))


def square_range_many(lo, hi, offset):
    """Exact elementwise range of ``(t + offset)**2`` for t in [lo, hi]."""
    a = np.asarray(lo, dtype=float) + offset
    b = np.asarray(hi, dtype=float) + offset
    asq = a * a
    bsq = b * b
    low = np.where(b <= 0.0, bsq, np.where(a >= 0.0, asq, 0.0))
    return low, np.maximum(asq, bsq)


def square_range(x: Interval, offset: float) -> Interval:
    lo, hi = square_range_many(x.lo, x.hi, offset)
    return Interval(float(lo), float(hi))


def affine_range_many(coeffs: np.ndarray, box: Box) -> tuple[np.ndarray, np.ndarray]:
    """Ranges of rows of ``coeffs @ v`` over v in box; coeffs has shape (..., k)."""
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.shape[-1] != box.k:
        raise DimensionMismatch(
            f"coefficient length {coeffs.shape[-1]} != box dimension {box.k}"
        )
    lo = box.lo_array()
    hi = box.hi_array()
    t_lo = coeffs * lo
    t_hi = coeffs * hi
    return (
        np.minimum(t_lo, t_hi).sum(axis=-1),
        np.maximum(t_lo, t_hi).sum(axis=-1),
    )


def affine_range(coeffs: Sequence[float], box: Box) -> Interval:
    lo, hi = affine_range_many(np.asarray(coeffs, dtype=float), box)
    return Interval(float(lo), float(hi))


def mul_many(a_lo, a_hi, b_lo, b_hi):
    """Elementwise interval product over broadcastable endpoint arrays."""
    p1 = a_lo * b_lo
    p2 = a_lo * b_hi
    p3 = a_hi * b_lo
    p4 = a_hi * b_hi
    return (
        np.minimum(np.minimum(p1, p2), np.minimum(p3, p4)),
        np.maximum(np.maximum(p1, p2), np.maximum(p3, p4)),
    )


def wrap_angle(x: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    return float(x - TWO_PI * math.ceil((x - math.pi) / TWO_PI))
