"""Separable-residual instantiations of four robust estimation problems.

Each builder packs the per-datum constants into vectorized closures:
robust linear regression (absolute linear residual), relative pose under
planar motion (two-sine residual over yaw/translation angles), point-cloud
registration reduced to translation (squared-norm residual), and rotational
homography with unknown focal length (two-component rational-trigonometric
residual under the max norm).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .intervals import (
    Box,
    Interval,
    affine_range_many,
    mul_many,
    sine_range_many,
    square_range_many,
    wrap_angle,
)
from .objective import ResidualNorm, SeparableProblem

logger = logging.getLogger(__name__)

HALF_PI = 0.5 * math.pi


class DegenerateMatch(ValueError):
    """A pixel sits at the exact image centre; its angle is undefined."""


# ---------------------------------------------------------------------------
# robust linear regression


@dataclass(frozen=True)
class RegressionData:
    """Samples (a_i, y_i) for residuals |v . a_i - y_i|."""

    a: np.ndarray  # (M, n)
    y: np.ndarray  # (M,)

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if a.ndim != 2 or y.shape != (a.shape[0],):
            raise ValueError("a must be (M, n) and y (M,)")
        if not (np.isfinite(a).all() and np.isfinite(y).all()):
            raise ValueError("regression data must be finite")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "y", y)


def linreg_build(data: RegressionData, domain: Box) -> SeparableProblem:
    a, y = data.a, data.y
    m, n = a.shape
    if domain.k != n:
        raise ValueError(f"domain dimension {domain.k} != data dimension {n}")
    a1 = a[:, 0].copy()
    a_rest = a[:, 1:].copy()

    def h_all(v1):
        v = np.asarray(v1, dtype=float)
        return (v[..., None, None] * a1[:, None]) - y[:, None]

    def g_all(v2n):
        return (a_rest @ np.asarray(v2n, dtype=float))[:, None]

    def g_range_all(box: Box):
        lo, hi = affine_range_many(a_rest, box)
        return lo[:, None], hi[:, None]

    def h_range_all(v1_lo, v1_hi):
        lo = np.asarray(v1_lo, dtype=float)[..., None]
        hi = np.asarray(v1_hi, dtype=float)[..., None]
        t1 = lo * a1
        t2 = hi * a1
        return (
            (np.minimum(t1, t2) - y)[..., None],
            (np.maximum(t1, t2) - y)[..., None],
        )

    return SeparableProblem(
        dimension=n,
        codomain_width=1,
        norm=ResidualNorm.ABS,
        data_count=m,
        full_domain=domain,
        h_all=h_all,
        g_all=g_all,
        g_range_all=g_range_all,
        h_range_all=h_range_all,
        lipschitz_hint=float(np.abs(a1).sum()),
        inner_kernel=(0, np.ascontiguousarray(a1), np.ascontiguousarray(y)),
    )


# ---------------------------------------------------------------------------
# relative pose under planar motion


@dataclass(frozen=True)
class PlanarMatchConstants:
    """Per-match sine coefficients: A1 sin(t1 + phi1) + A2 sin(t2 + phi2)."""

    a1: np.ndarray
    phi1: np.ndarray
    a2: np.ndarray
    phi2: np.ndarray


def planar_constants(matches: np.ndarray) -> PlanarMatchConstants:
    """Constants from normalized pixel matches (u1, u2, u1', u2') per row."""
    m = np.asarray(matches, dtype=float)
    u1, u2, up1, up2 = m[:, 0], m[:, 1], m[:, 2], m[:, 3]
    return PlanarMatchConstants(
        a1=u2 * np.sqrt(1.0 + up1**2),
        phi1=np.arctan(up1),
        a2=up2 * np.sqrt(1.0 + u1**2),
        phi2=-np.arctan(u1),
    )


def planar_build(matches: np.ndarray) -> SeparableProblem:
    c = planar_constants(matches)
    m = c.a1.shape[0]
    degenerate = int(np.count_nonzero((c.a1 == 0.0) & (c.a2 == 0.0)))
    if degenerate:
        logger.warning("%d degenerate planar matches contribute constant zero", degenerate)

    def h_all(t1):
        v = np.asarray(t1, dtype=float)
        return c.a1[:, None] * np.sin(v[..., None, None] + c.phi1[:, None])

    def g_all(t2_vec):
        t2 = float(np.asarray(t2_vec, dtype=float)[0])
        return (c.a2 * np.sin(t2 + c.phi2))[:, None]

    def g_range_all(box: Box):
        lo, hi = sine_range_many(box.dims[0].lo, box.dims[0].hi, c.a2, c.phi2)
        return lo[:, None], hi[:, None]

    def h_range_all(t1_lo, t1_hi):
        lo = np.asarray(t1_lo, dtype=float)[..., None]
        hi = np.asarray(t1_hi, dtype=float)[..., None]
        rlo, rhi = sine_range_many(lo, hi, c.a1, c.phi1)
        return rlo[..., None], rhi[..., None]

    domain = Box.from_bounds([-math.pi, -math.pi], [math.pi, math.pi])
    return SeparableProblem(
        dimension=2,
        codomain_width=1,
        norm=ResidualNorm.ABS,
        data_count=m,
        full_domain=domain,
        h_all=h_all,
        g_all=g_all,
        g_range_all=g_range_all,
        h_range_all=h_range_all,
        lipschitz_hint=float(np.abs(c.a1).sum()),
        inner_kernel=(1, np.ascontiguousarray(c.a1), np.ascontiguousarray(c.phi1)),
    )


def planar_recover(theta1: float, theta2: float) -> tuple[float, float]:
    """Map the search variables back to (yaw, translation angle), wrapped to (-pi, pi]."""
    return wrap_angle(theta1 + theta2), wrap_angle(theta2)


# ---------------------------------------------------------------------------
# point-cloud registration, translation part


@dataclass(frozen=True)
class RegistrationData:
    """Source points, squared target norms, and the translation search box."""

    p: np.ndarray             # (M, 3)
    q_norm_sq: np.ndarray     # (M,)
    translation_domain: Optional[Box] = None

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        qn = np.asarray(self.q_norm_sq, dtype=float)
        if p.ndim != 2 or p.shape[1] != 3 or qn.shape != (p.shape[0],):
            raise ValueError("p must be (M, 3) and q_norm_sq (M,)")
        if np.any(qn < 0.0):
            raise ValueError("squared norms must be nonnegative")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q_norm_sq", qn)


def default_translation_domain(data: RegistrationData) -> Box:
    """A box guaranteed to contain any translation consistent with the data.

    Only ||q_i|| is stored, so per axis we use |q_axis| <= ||q||:
    [-max||q|| - max(p_axis) - 1, max||q|| - min(p_axis) + 1].
    """
    qmax = float(np.sqrt(data.q_norm_sq.max(initial=0.0)))
    lows = [-qmax - float(data.p[:, d].max()) - 1.0 for d in range(3)]
    highs = [qmax - float(data.p[:, d].min()) + 1.0 for d in range(3)]
    return Box.from_bounds(lows, highs)


def registration_build(data: RegistrationData) -> SeparableProblem:
    p, qn = data.p, data.q_norm_sq
    m = p.shape[0]
    domain = data.translation_domain or default_translation_domain(data)
    if domain.k != 3:
        raise ValueError("translation domain must be 3-dimensional")
    p1, p2, p3 = p[:, 0].copy(), p[:, 1].copy(), p[:, 2].copy()

    def h_all(t1):
        v = np.asarray(t1, dtype=float)
        return np.square(v[..., None, None] + p1[:, None])

    def g_all(t23):
        t2, t3 = (float(x) for x in np.asarray(t23, dtype=float))
        return ((t2 + p2) ** 2 + (t3 + p3) ** 2 - qn)[:, None]

    def g_range_all(box: Box):
        lo2, hi2 = square_range_many(box.dims[0].lo, box.dims[0].hi, p2)
        lo3, hi3 = square_range_many(box.dims[1].lo, box.dims[1].hi, p3)
        return (lo2 + lo3 - qn)[:, None], (hi2 + hi3 - qn)[:, None]

    def h_range_all(t1_lo, t1_hi):
        lo = np.asarray(t1_lo, dtype=float)[..., None]
        hi = np.asarray(t1_hi, dtype=float)[..., None]
        rlo, rhi = square_range_many(lo, hi, p1)
        return rlo[..., None], rhi[..., None]

    c1 = domain.dims[0]
    hint = 2.0 * float(np.max(np.maximum(np.abs(c1.lo + p1), np.abs(c1.hi + p1))))
    return SeparableProblem(
        dimension=3,
        codomain_width=1,
        norm=ResidualNorm.ABS,
        data_count=m,
        full_domain=domain,
        h_all=h_all,
        g_all=g_all,
        g_range_all=g_range_all,
        h_range_all=h_range_all,
        lipschitz_hint=hint,
        inner_kernel=(2, np.ascontiguousarray(p1), np.zeros(m)),
    )


# ---------------------------------------------------------------------------
# rotational homography with unknown focal length


MIN_FOCAL = 1.0  # one pixel; the inverse-focal term is singular at zero


@dataclass(frozen=True)
class HomographyMatchConstants:
    """Polar forms of the centred pixels on both sides, plus the focal box."""

    norm_z: np.ndarray
    sigma: np.ndarray
    norm_zp: np.ndarray
    psi: np.ndarray
    focal_domain: Interval


def homography_constants(matches: np.ndarray, focal_domain: Interval) -> HomographyMatchConstants:
    m = np.asarray(matches, dtype=float)
    z1, z2, zp1, zp2 = m[:, 0], m[:, 1], m[:, 2], m[:, 3]
    norm_z = np.hypot(z1, z2)
    norm_zp = np.hypot(zp1, zp2)
    if np.any(norm_z == 0.0) or np.any(norm_zp == 0.0):
        raise DegenerateMatch("a pixel sits at the exact image centre")
    if focal_domain.lo < MIN_FOCAL:
        logger.warning("clamping focal domain lower end %.3g to %.1f px",
                       focal_domain.lo, MIN_FOCAL)
        focal_domain = Interval(MIN_FOCAL, max(focal_domain.hi, MIN_FOCAL))
    return HomographyMatchConstants(
        norm_z=norm_z,
        sigma=np.arctan2(z2, z1),
        norm_zp=norm_zp,
        psi=np.arctan2(zp2, zp1),
        focal_domain=focal_domain,
    )


def homography_g_range(constants: HomographyMatchConstants, sub_box: Box):
    """Sound componentwise ranges of g over a (beta, gamma, F) sub-box.

    Composed from interval primitives; when the denominator interval
    straddles zero the component range widens to a symmetric box that is
    large enough to keep the downstream residual floor at zero.
    """
    if sub_box.k != 3:
        raise ValueError("sub-box must cover (beta, gamma, F)")
    beta, gamma, focal = sub_box.dims
    if focal.lo <= 0.0:
        raise ValueError("focal interval must be strictly positive")
    mz, sig = constants.norm_z, constants.sigma
    mzp = constants.norm_zp

    tan_lo, tan_hi = math.tan(beta.lo), math.tan(beta.hi)
    w_lo, w_hi = mul_many(np.float64(focal.lo), np.float64(focal.hi),
                          np.float64(tan_lo), np.float64(tan_hi))
    k2_lo, k2_hi = 1.0 / focal.hi**2, 1.0 / focal.lo**2

    cg_lo, cg_hi = sine_range_many(gamma.lo, gamma.hi, mz, sig + HALF_PI)
    sg_lo, sg_hi = sine_range_many(gamma.lo, gamma.hi, mz, sig)

    t_lo, t_hi = mul_many(w_lo, w_hi, cg_lo, cg_hi)
    t_lo, t_hi = mul_many(t_lo, t_hi, k2_lo, k2_hi)
    den_lo, den_hi = 1.0 - t_hi, 1.0 - t_lo

    w2_lo, w2_hi = square_range_many(w_lo, w_hi, 0.0)
    root_lo = np.sqrt(1.0 + w2_lo * k2_lo)
    root_hi = np.sqrt(1.0 + w2_hi * k2_hi)

    num1_lo, num1_hi = cg_lo + w_lo, cg_hi + w_hi
    num2_lo, num2_hi = mul_many(sg_lo, sg_hi, root_lo, root_hi)

    ok = (den_lo > 0.0) | (den_hi < 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        inv_lo = np.where(ok, 1.0 / den_hi, 0.0)
        inv_hi = np.where(ok, 1.0 / den_lo, 0.0)
    q1_lo, q1_hi = mul_many(num1_lo, num1_hi, inv_lo, inv_hi)
    q2_lo, q2_hi = mul_many(num2_lo, num2_hi, inv_lo, inv_hi)

    # a zero-straddling denominator means g is unbounded on the box; the only
    # sound componentwise range is the full line, which drives the downstream
    # residual floor to zero for that datum
    g1_lo = np.where(ok, -q1_hi, -np.inf)
    g1_hi = np.where(ok, -q1_lo, np.inf)
    g2_lo = np.where(ok, -q2_hi, -np.inf)
    g2_hi = np.where(ok, -q2_lo, np.inf)
    return np.stack([g1_lo, g2_lo], axis=-1), np.stack([g1_hi, g2_hi], axis=-1)


def homography_build(matches: np.ndarray, focal_domain: Interval) -> SeparableProblem:
    c = homography_constants(matches, focal_domain)
    m = c.norm_z.shape[0]
    mz, sig, mzp, psi = c.norm_z, c.sigma, c.norm_zp, c.psi

    def h_all(alpha):
        v = np.asarray(alpha, dtype=float)
        ang = v[..., None] + psi
        return np.stack([mzp * np.cos(ang), mzp * np.sin(ang)], axis=-1)

    def g_all(bgf):
        beta, gamma, focal = (float(x) for x in np.asarray(bgf, dtype=float))
        omega = focal * math.tan(beta)
        k2 = 1.0 / focal**2
        cg = mz * np.cos(gamma + sig)
        sg = mz * np.sin(gamma + sig)
        with np.errstate(divide="ignore", invalid="ignore"):
            den = 1.0 - omega * cg * k2
            g1 = -(cg + omega) / den
            g2 = -sg * math.sqrt(1.0 + omega**2 * k2) / den
        return np.stack([g1, g2], axis=-1)

    def g_range_all(box: Box):
        return homography_g_range(c, box)

    def h_range_all(a_lo, a_hi):
        lo = np.asarray(a_lo, dtype=float)[..., None]
        hi = np.asarray(a_hi, dtype=float)[..., None]
        c_lo, c_hi = sine_range_many(lo, hi, mzp, psi + HALF_PI)
        s_lo, s_hi = sine_range_many(lo, hi, mzp, psi)
        return np.stack([c_lo, s_lo], axis=-1), np.stack([c_hi, s_hi], axis=-1)

    domain = Box(
        (
            Interval(-HALF_PI, HALF_PI),
            Interval(-HALF_PI, HALF_PI),
            Interval(-HALF_PI, HALF_PI),
            c.focal_domain,
        )
    )
    return SeparableProblem(
        dimension=4,
        codomain_width=2,
        norm=ResidualNorm.LINF,
        data_count=m,
        full_domain=domain,
        h_all=h_all,
        g_all=g_all,
        g_range_all=g_range_all,
        h_range_all=h_range_all,
        lipschitz_hint=float(np.abs(mzp).sum()),
        inner_kernel=(3, np.ascontiguousarray(mzp), np.ascontiguousarray(psi)),
    )


def rot_z(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def rot_y(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def homography_rotation(alpha: float, beta: float, gamma: float) -> np.ndarray:
    """Pixel-warp rotation consistent with the residual parameterization.

    The first residual variable enters the warp with a negated z-angle; this
    sign convention is pinned by the noiseless synthetic consistency tests.
    """
    return rot_z(-alpha) @ rot_y(beta) @ rot_z(gamma)
