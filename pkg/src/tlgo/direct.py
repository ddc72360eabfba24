"""Derivative-free global optimization by dividing intervals/rectangles.

The 1-D solver is the workhorse: it minimizes the Lipschitz-continuous
bounding functions produced by the engine, needs no Lipschitz constant, and
only ever samples function values.  An n-D variant is included as a
standalone baseline solver.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from .intervals import Box, Interval


class NonFiniteObjective(ValueError):
    """The objective returned inf or nan at a sampled point."""


@dataclass(frozen=True)
class DirectConfig:
    tolerance_phi: float = 1e-4
    min_resolution: float = 1e-4
    max_evals: int = 100_000

    def __post_init__(self):
        if self.tolerance_phi < 0.0:
            raise ValueError("tolerance_phi must be >= 0")
        if self.min_resolution <= 0.0:
            raise ValueError("min_resolution must be > 0")
        if self.max_evals < 3:
            raise ValueError("max_evals must be >= 3")


@dataclass(frozen=True)
class DirectResult:
    minimizer: np.ndarray
    min_value: float
    evals: int
    converged: bool
    sweeps: int = 0


_INCUMBENT_FLOOR = 1e-12


def _hull_select(points, incumbent, tolerance_phi):
    """Feasible trade-off points among (half_width, value, key) triples.

    A point is kept when some constant K > 0 makes it the most promising
    sub-region: its value minus K times its half-width undercuts every other
    point's and improves on the incumbent by the relative tolerance.  The
    scan walks the lower-right convex hull of the scatter, so it is linear
    in the number of distinct widths.
    """
    # merge equal widths: keep the earliest-created minimum-value point
    merged: dict[float, tuple[float, object]] = {}
    for w, v, key in points:
        cur = merged.get(w)
        if cur is None or v < cur[0]:
            merged[w] = (v, key)
    pts = sorted((w, v, key) for w, (v, key) in merged.items())

    hull: list[tuple[float, float, object]] = []
    for p in pts:
        while len(hull) >= 2:
            s_prev = (hull[-1][1] - hull[-2][1]) / (hull[-1][0] - hull[-2][0])
            s_new = (p[1] - hull[-1][1]) / (p[0] - hull[-1][0])
            if s_prev > s_new:
                hull.pop()
            else:
                break
        hull.append(p)

    thresh = incumbent - tolerance_phi * max(abs(incumbent), _INCUMBENT_FLOOR)
    selected = []
    last = len(hull) - 1
    for j, (w, v, key) in enumerate(hull):
        up = math.inf if j == last else (hull[j + 1][1] - v) / (hull[j + 1][0] - w)
        need = -math.inf if j == 0 else (v - hull[j - 1][1]) / (w - hull[j - 1][0])
        need = max(need, (v - thresh) / w)
        if up > 0.0 and need <= up:
            selected.append(key)
    return selected


def potentially_optimal(records, incumbent, tolerance_phi):
    """Indices of records (half_width, center_value) that could host the minimum.

    Equal-width ties in value keep only the earliest record, which makes the
    selection deterministic under replay.
    """
    points = []
    for i, (w, v) in enumerate(records):
        if w <= 0.0:
            raise ValueError("half widths must be positive")
        points.append((float(w), float(v), i))
    return sorted(_hull_select(points, incumbent, tolerance_phi))


def minimize_1d(objective, domain: Interval, config: DirectConfig | None = None,
                trace: list | None = None) -> DirectResult:
    """Globally minimize a 1-D function on a closed interval.

    Terminates when a selected sub-interval would be trisected below the
    minimal resolution, or when the evaluation budget runs out (in which
    case ``converged`` is False and the incumbent is returned).
    """
    cfg = config or DirectConfig()
    if not domain.lo < domain.hi:
        raise ValueError("domain must have positive width")

    evals = 0

    def ev(x: float) -> float:
        nonlocal evals
        evals += 1
        v = float(objective(x))
        if not math.isfinite(v):
            raise NonFiniteObjective(f"objective({x}) = {v}")
        return v

    width_at = [domain.width]

    los = [domain.lo]
    his = [domain.hi]
    depths = [0]
    centers = [domain.center]
    best_x = centers[0]
    best_f = ev(best_x)
    values = [best_f]
    alive = [True]
    groups: dict[int, list[tuple[float, int]]] = {0: [(best_f, 0)]}

    if trace is not None:
        trace.append(("init", domain.lo, domain.hi))

    sweeps = 0
    while True:
        sweeps += 1
        reps = []  # (half_width, value, seq, depth), width ascending
        for d in sorted(groups, reverse=True):
            heap = groups[d]
            while heap and not alive[heap[0][1]]:
                heapq.heappop(heap)
            if not heap:
                del groups[d]
                continue
            v, seq = heap[0]
            reps.append((0.5 * width_at[d], v, (seq, d)))
        if not reps:  # defensive: cannot happen while any cell is alive
            return DirectResult(np.array([best_x]), best_f, evals, False, sweeps)

        selected = _hull_select(reps, best_f, cfg.tolerance_phi)

        for seq, d in selected:  # ascending width; narrowest first
            if evals + 2 > cfg.max_evals:
                return DirectResult(np.array([best_x]), best_f, evals, False, sweeps)
            child_d = d + 1
            if child_d == len(width_at):
                width_at.append(width_at[-1] / 3.0)
            cw = width_at[child_d]
            lo, hi = los[seq], his[seq]
            b1 = lo + cw
            b2 = hi - cw
            lc = lo + 0.5 * cw
            rc = hi - 0.5 * cw
            fl = ev(lc)
            fr = ev(rc)
            if fl < best_f:
                best_f, best_x = fl, lc
            if fr < best_f:
                best_f, best_x = fr, rc

            alive[seq] = False
            for c_lo, c_hi, c_ctr, c_val in (
                (lo, b1, lc, fl),
                (b1, b2, centers[seq], values[seq]),
                (b2, hi, rc, fr),
            ):
                new_seq = len(los)
                los.append(c_lo)
                his.append(c_hi)
                depths.append(child_d)
                centers.append(c_ctr)
                values.append(c_val)
                alive.append(True)
                heapq.heappush(groups.setdefault(child_d, []), (c_val, new_seq))
            if trace is not None:
                trace.append(("divide", lo, b1, b2, hi))

            if cw < cfg.min_resolution:
                return DirectResult(np.array([best_x]), best_f, evals, True, sweeps)


def minimize_nd(objective, domain: Box, config: DirectConfig | None = None) -> DirectResult:
    """Standard n-D dividing-rectangles minimization over a box.

    The domain is normalized to the unit hypercube; potentially-optimal
    cells (keyed on half-diameter) are trisected along their longest sides.
    Same convergence contract as :func:`minimize_1d`.
    """
    cfg = config or DirectConfig()
    k = domain.k
    lo = domain.lo_array()
    span = domain.hi_array() - lo
    if not np.all(span > 0.0):
        raise ValueError("domain must have positive width in every dimension")

    evals = 0

    def ev(x_norm: np.ndarray) -> float:
        nonlocal evals
        evals += 1
        v = float(objective(lo + x_norm * span))
        if not math.isfinite(v):
            raise NonFiniteObjective(f"objective at {lo + x_norm * span} = {v}")
        return v

    def half_diam(tkey: tuple[int, ...]) -> float:
        return 0.5 * math.sqrt(sum(9.0 ** (-t) for t in tkey))

    centers = [np.full(k, 0.5)]
    tvecs = [(0,) * k]
    best_x = centers[0]
    best_f = ev(best_x)
    values = [best_f]
    alive = [True]
    groups: dict[tuple[int, ...], list[tuple[float, int]]] = {(0,) * k: [(best_f, 0)]}
    diam_of: dict[tuple[int, ...], float] = {(0,) * k: half_diam((0,) * k)}

    def add_cell(center: np.ndarray, tvec: tuple[int, ...], value: float):
        seq = len(centers)
        centers.append(center)
        tvecs.append(tvec)
        values.append(value)
        alive.append(True)
        key = tuple(sorted(tvec))
        if key not in diam_of:
            diam_of[key] = half_diam(key)
        heapq.heappush(groups.setdefault(key, []), (value, seq))
        return seq

    sweeps = 0
    while True:
        sweeps += 1
        reps = []
        for key in list(groups):
            heap = groups[key]
            while heap and not alive[heap[0][1]]:
                heapq.heappop(heap)
            if not heap:
                del groups[key]
                continue
            v, seq = heap[0]
            reps.append((diam_of[key], v, seq))
        if not reps:
            return DirectResult(lo + best_x * span, best_f, evals, False, sweeps)
        reps.sort(key=lambda r: (r[0], r[1], r[2]))

        selected = _hull_select(reps, best_f, cfg.tolerance_phi)

        for seq in selected:
            tvec = list(tvecs[seq])
            t_min = min(tvec)
            dims = [d for d in range(k) if tvec[d] == t_min]
            if evals + 2 * len(dims) > cfg.max_evals:
                return DirectResult(lo + best_x * span, best_f, evals, False, sweeps)

            c = centers[seq]
            delta = 3.0 ** (-(t_min + 1))
            probes = []
            for d in dims:
                cp = c.copy()
                cp[d] += delta
                cm = c.copy()
                cm[d] -= delta
                fp = ev(cp)
                fm = ev(cm)
                if fp < best_f:
                    best_f, best_x = fp, cp
                if fm < best_f:
                    best_f, best_x = fm, cm
                probes.append((min(fp, fm), d, cp, fp, cm, fm))
            probes.sort(key=lambda p: (p[0], p[1]))

            alive[seq] = False
            carved = list(tvec)
            for _, d, cp, fp, cm, fm in probes:
                carved[d] += 1
                tv = tuple(carved)
                add_cell(cp, tv, fp)
                add_cell(cm, tv, fm)
            add_cell(c, tuple(carved), values[seq])

            # longest actual side of the innermost (fully carved) child
            child_longest_side = max(3.0 ** (-t) * s for t, s in zip(carved, span))
            if child_longest_side < cfg.min_resolution:
                return DirectResult(lo + best_x * span, best_f, evals, True, sweeps)
