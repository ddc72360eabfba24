"""Compiled inner-solve kernels for the built-in residual families.

The engine's hot path solves two 1-D problems per branch node; for the
shipped problem families the bound functions reduce to small per-datum
formulas, which these kernels evaluate and minimize without ndarray
overhead.  The logic mirrors ``direct.minimize_1d`` (same trisection, same
potentially-optimal rule, same tie handling); the pure-Python solver
remains the reference implementation and serves arbitrary problems.

Kernel kinds (h as a function of the first variable v):
  0: h_i(v) = c1_i * v - c2_i                      (linear regression)
  1: h_i(v) = c1_i * sin(v + c2_i)                 (planar pose)
  2: h_i(v) = (v + c1_i)^2                         (registration)
  3: h_i(v) = (c1_i cos(v + c2_i), c1_i sin(v + c2_i)), max-norm
                                                   (rotational homography)
"""

from __future__ import annotations

import numpy as np
from numba import njit

F8 = np.float64


@njit(cache=True)
def _floor_sum(kind, c1, c2, s_lo, s_hi, xi, v):
    """Sum of truncated per-datum residual floors at first-variable value v."""
    m = c1.shape[0]
    acc = 0.0
    for i in range(m):
        if kind == 0:
            h = c1[i] * v - c2[i]
        elif kind == 1:
            h = c1[i] * np.sin(v + c2[i])
        else:
            t = v + c1[i]
            h = t * t
        if kind == 3:
            hc = c1[i] * np.cos(v + c2[i])
            hs = c1[i] * np.sin(v + c2[i])
            r1 = max(max(hc + s_lo[i, 0], -(hc + s_hi[i, 0])), 0.0)
            r2 = max(max(hs + s_lo[i, 1], -(hs + s_hi[i, 1])), 0.0)
            r = max(r1, r2)
        else:
            r = max(max(h + s_lo[i, 0], -(h + s_hi[i, 0])), 0.0)
        acc += r if r < xi else xi
    return acc


@njit(cache=True)
def direct_1d_kernel(kind, c1, c2, s_lo, s_hi, xi, dom_lo, dom_hi,
                     phi, resolution, max_evals):
    """Dividing-intervals global minimization of the kernel bound function.

    Returns (best_x, best_value, evals, converged_flag).  Matches the
    reference solver: trisection, potentially-optimal selection via the
    lower-right hull over per-depth minima, narrowest-first division, stop
    when a selected interval trisects below the resolution.
    """
    cap = 4096
    los = np.empty(cap, F8)
    his = np.empty(cap, F8)
    ctr = np.empty(cap, F8)
    val = np.empty(cap, F8)
    dep = np.empty(cap, np.int64)
    alive = np.empty(cap, np.uint8)

    max_depth = 64
    width_at = np.empty(max_depth, F8)
    width_at[0] = dom_hi - dom_lo
    for d in range(1, max_depth):
        width_at[d] = width_at[d - 1] / 3.0

    n_cells = 1
    los[0] = dom_lo
    his[0] = dom_hi
    ctr[0] = 0.5 * (dom_lo + dom_hi)
    best_x = ctr[0]
    best_f = _floor_sum(kind, c1, c2, s_lo, s_hi, xi, best_x)
    evals = 1
    val[0] = best_f
    dep[0] = 0
    alive[0] = 1

    # per-depth group minima, recomputed each sweep
    g_val = np.empty(max_depth, F8)
    g_idx = np.empty(max_depth, np.int64)
    hull_w = np.empty(max_depth, F8)
    hull_v = np.empty(max_depth, F8)
    hull_d = np.empty(max_depth, np.int64)
    sel = np.empty(max_depth, np.int64)

    while True:
        for d in range(max_depth):
            g_idx[d] = -1
        deepest = 0
        for i in range(n_cells):
            if alive[i] == 0:
                continue
            d = dep[i]
            if d > deepest:
                deepest = d
            j = g_idx[d]
            if j < 0 or val[i] < val[j]:
                g_idx[d] = i
                g_val[d] = val[i]
        # points in width-ascending order = depth descending
        npts = 0
        for d in range(deepest, -1, -1):
            if g_idx[d] >= 0:
                hull_w[npts] = 0.5 * width_at[d]
                hull_v[npts] = g_val[d]
                hull_d[npts] = d
                npts += 1
        if npts == 0:
            return best_x, best_f, evals, 0

        # lower hull keeping collinear points (pop on strictly worse slope)
        stack = np.empty(npts, np.int64)
        top = 0
        for p in range(npts):
            while top >= 2:
                a = stack[top - 2]
                b = stack[top - 1]
                s1 = (hull_v[b] - hull_v[a]) / (hull_w[b] - hull_w[a])
                s2 = (hull_v[p] - hull_v[b]) / (hull_w[p] - hull_w[b])
                if s1 > s2:
                    top -= 1
                else:
                    break
            stack[top] = p
            top += 1

        inc = abs(best_f)
        if inc < 1e-12:
            inc = 1e-12
        thresh = best_f - phi * inc
        nsel = 0
        for t in range(top):
            p = stack[t]
            w = hull_w[p]
            v = hull_v[p]
            if t == top - 1:
                up = np.inf
            else:
                q = stack[t + 1]
                up = (hull_v[q] - v) / (hull_w[q] - w)
            if t == 0:
                need = (v - thresh) / w
            else:
                q = stack[t - 1]
                need = (v - hull_v[q]) / (w - hull_w[q])
                n2 = (v - thresh) / w
                if n2 > need:
                    need = n2
            if up > 0.0 and need <= up:
                sel[nsel] = g_idx[hull_d[p]]
                nsel += 1

        for t in range(nsel):
            i = sel[t]
            if evals + 2 > max_evals:
                return best_x, best_f, evals, 0
            d = dep[i] + 1
            cw = width_at[d] if d < max_depth else width_at[max_depth - 1]
            lo = los[i]
            hi = his[i]
            b1 = lo + cw
            b2 = hi - cw
            lc = lo + 0.5 * cw
            rc = hi - 0.5 * cw
            fl = _floor_sum(kind, c1, c2, s_lo, s_hi, xi, lc)
            fr = _floor_sum(kind, c1, c2, s_lo, s_hi, xi, rc)
            evals += 2
            if fl < best_f:
                best_f = fl
                best_x = lc
            if fr < best_f:
                best_f = fr
                best_x = rc

            if n_cells + 3 > cap:
                new_cap = cap * 2
                los2 = np.empty(new_cap, F8); los2[:n_cells] = los[:n_cells]; los = los2
                his2 = np.empty(new_cap, F8); his2[:n_cells] = his[:n_cells]; his = his2
                ctr2 = np.empty(new_cap, F8); ctr2[:n_cells] = ctr[:n_cells]; ctr = ctr2
                val2 = np.empty(new_cap, F8); val2[:n_cells] = val[:n_cells]; val = val2
                dep2 = np.empty(new_cap, np.int64); dep2[:n_cells] = dep[:n_cells]; dep = dep2
                al2 = np.empty(new_cap, np.uint8); al2[:n_cells] = alive[:n_cells]; alive = al2
                cap = new_cap

            alive[i] = 0
            los[n_cells] = lo; his[n_cells] = b1; ctr[n_cells] = lc
            val[n_cells] = fl; dep[n_cells] = d; alive[n_cells] = 1
            n_cells += 1
            los[n_cells] = b1; his[n_cells] = b2; ctr[n_cells] = ctr[i]
            val[n_cells] = val[i]; dep[n_cells] = d; alive[n_cells] = 1
            n_cells += 1
            los[n_cells] = b2; his[n_cells] = hi; ctr[n_cells] = rc
            val[n_cells] = fr; dep[n_cells] = d; alive[n_cells] = 1
            n_cells += 1

            if cw < resolution:
                return best_x, best_f, evals, 1
