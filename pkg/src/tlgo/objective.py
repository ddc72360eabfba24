"""Truncated-loss objectives over separable residuals.

A problem supplies per-datum functions h_i (first variable) and g_i
(remaining variables) with residual ``||h_i(v1) + g_i(v2n)||``, along with
exact or sound range oracles for both parts.  Everything here is
vectorized over the data axis; the per-datum accessors exist for tests and
spot checks.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .intervals import Box, Interval


class ResidualNorm(enum.Enum):
    ABS = "abs"    # W = 1, plain absolute value
    L2 = "l2"
    LINF = "linf"


def reduce_norm(comp: np.ndarray, norm: ResidualNorm) -> np.ndarray:
    """Collapse the trailing codomain axis with the problem's vector norm."""
    if norm is ResidualNorm.ABS:
        return np.abs(comp[..., 0])
    if norm is ResidualNorm.L2:
        return np.sqrt(np.square(comp).sum(axis=-1))
    return np.abs(comp).max(axis=-1)


@dataclass(frozen=True)
class TruncationConfig:
    xi: float

    def __post_init__(self):
        if not self.xi > 0.0:
            raise ValueError("truncation threshold xi must be positive")


@dataclass(frozen=True)
class SeparableProblem:
    """Residuals ||h_i(v1) + g_i(v2n)|| with batched evaluation and ranges.

    h_all(v1) accepts a scalar or any-shaped array and returns an array of
    shape (..., M, W); g_all takes the (n-1)-vector of remaining variables
    and returns (M, W).  g_range_all maps a sub-box to componentwise sound
    (lower, upper) arrays of shape (M, W); h_range_all maps broadcastable
    lo/hi arrays to exact (..., M, W) range endpoints.
    """

    dimension: int
    codomain_width: int
    norm: ResidualNorm
    data_count: int
    full_domain: Box
    h_all: Callable
    g_all: Callable
    g_range_all: Callable
    h_range_all: Callable
    lipschitz_hint: Optional[float] = None
    # (kind, c1, c2) descriptor for the compiled inner-solve kernels; the
    # built-in problem families set it, custom problems may leave it unset
    inner_kernel: Optional[tuple] = None

    def __post_init__(self):
        if self.full_domain.k != self.dimension:
            raise ValueError("full_domain dimension mismatch")
        if self.dimension < 2:
            raise ValueError("separable problems need n >= 2")

    @property
    def c1(self) -> Interval:
        return self.full_domain.dims[0]

    @property
    def sub_domain(self) -> Box:
        return Box(self.full_domain.dims[1:])

    # per-datum accessors (thin views over the batched callables)

    def h_eval(self, i: int, v1: float) -> np.ndarray:
        self._check_index(i)
        return np.asarray(self.h_all(v1))[i]

    def g_eval(self, i: int, v2n) -> np.ndarray:
        self._check_index(i)
        return np.asarray(self.g_all(np.asarray(v2n, dtype=float)))[i]

    def g_range(self, i: int, sub_box: Box):
        self._check_index(i)
        lo, hi = self.g_range_all(sub_box)
        return lo[i], hi[i]

    def _check_index(self, i: int):
        if not 0 <= i < self.data_count:
            raise IndexError(f"datum index {i} out of range [0, {self.data_count})")


def _saturate(r: np.ndarray) -> np.ndarray:
    # residual poles (e.g. vanishing denominators) behave as +inf and truncate
    return np.where(np.isfinite(r), r, np.inf)


def truncated_residual(problem: SeparableProblem, i: int, v, xi: float) -> float:
    problem._check_index(i)
    v = np.asarray(v, dtype=float)
    h = problem.h_all(float(v[0]))[i]
    g = problem.g_all(v[1:])[i]
    r = reduce_norm((h + g)[None, :], problem.norm)[0]
    if not np.isfinite(r):
        return float(xi)
    return float(min(r, xi))


def tl_objective(problem: SeparableProblem, v, xi: float) -> float:
    """Sum of truncated residuals at a full parameter vector."""
    v = np.asarray(v, dtype=float)
    h = problem.h_all(float(v[0]))
    g = problem.g_all(v[1:])
    r = _saturate(reduce_norm(h + g, problem.norm))
    return float(np.minimum(r, xi).sum())


def cm_objective(problem: SeparableProblem, v, xi: float) -> int:
    """Number of data whose residual is at most xi at v."""
    v = np.asarray(v, dtype=float)
    h = problem.h_all(float(v[0]))
    g = problem.g_all(v[1:])
    r = reduce_norm(h + g, problem.norm)
    return int(np.count_nonzero(r <= xi))


def residual_lower_bound(problem: SeparableProblem, i: int, v1: float,
                         g_lower, g_upper) -> float:
    """Tight lower bound on ||h_i(v1) + g_i(.)|| given componentwise g bounds.

    Per component this is the distance from zero to the interval
    [h + s_lo, h + s_hi]; written branch-free as max(h+s_lo, -(h+s_hi), 0).
    """
    g_lower = np.asarray(g_lower, dtype=float)
    g_upper = np.asarray(g_upper, dtype=float)
    if not np.all(g_lower <= g_upper):
        raise ValueError("g_lower must be componentwise <= g_upper")
    h = problem.h_eval(i, v1)
    comp = np.maximum(np.maximum(h + g_lower, -(h + g_upper)), 0.0)
    return float(reduce_norm(comp[None, :], problem.norm)[0])


def underestimator(problem: SeparableProblem, sub_box: Box, xi: float):
    """Callable v1 -> sum_i min(residual floor over sub_box, xi).

    The returned function never exceeds the true objective anywhere on
    C1 x sub_box, and accepts scalar or array v1 (arrays return arrays).
    """
    s_lo, s_hi = problem.g_range_all(sub_box)

    def fbar(v1):
        h = problem.h_all(v1)
        comp = np.maximum(np.maximum(h + s_lo, -(h + s_hi)), 0.0)
        r = reduce_norm(comp, problem.norm)
        out = np.minimum(r, xi).sum(axis=-1)
        return float(out) if out.ndim == 0 else out

    return fbar


def slice_objective(problem: SeparableProblem, v2n, xi: float):
    """Callable v1 -> objective with the remaining variables frozen at v2n."""
    g = problem.g_all(np.asarray(v2n, dtype=float))

    def fslice(v1):
        h = problem.h_all(v1)
        r = _saturate(reduce_norm(h + g, problem.norm))
        out = np.minimum(r, xi).sum(axis=-1)
        return float(out) if out.ndim == 0 else out

    return fslice


def residual_floor_many(problem: SeparableProblem, v1_lo, v1_hi, s_lo, s_hi) -> np.ndarray:
    """Per-datum residual floors over v1 intervals and g bounds, shape (..., M).

    v1_lo / v1_hi are broadcastable arrays of interval endpoints; s_lo / s_hi
    are (M, W) componentwise bounds on g over whatever region the caller is
    relaxing.  Used by the vanilla bounds, the inner 1-D search, and the
    lower-bound certification sweep.
    """
    h_lo, h_hi = problem.h_range_all(v1_lo, v1_hi)
    comp = np.maximum(np.maximum(h_lo + s_lo, -(h_hi + s_hi)), 0.0)
    return reduce_norm(comp, problem.norm)


def range_lower_bound_many(problem: SeparableProblem, v1_lo, v1_hi, s_lo, s_hi,
                           xi: float) -> np.ndarray:
    """Sound lower bounds of the truncated objective over v1-interval batches."""
    r = residual_floor_many(problem, v1_lo, v1_hi, s_lo, s_hi)
    return np.minimum(r, xi).sum(axis=-1)
