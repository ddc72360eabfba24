"""Rigid 6-DoF pose recovery after the translation-only solve.

Select the lowest-residual correspondences at the solved translation, then
align them with a graduated non-convexity loop over Geman-McClure weights
around a closed-form weighted alignment (cross-covariance SVD) under the
model q = R (p + t).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .objective import SeparableProblem, reduce_norm


class DegenerateGeometry(ValueError):
    """Too few, coincident, or collinear points; the pose is not determined."""


@dataclass(frozen=True)
class RigidPose:
    rotation: np.ndarray     # 3x3, orthonormal, det +1
    translation: np.ndarray  # 3-vector

    def __post_init__(self):
        r = np.asarray(self.rotation, dtype=float)
        t = np.asarray(self.translation, dtype=float)
        if r.shape != (3, 3) or t.shape != (3,):
            raise ValueError("rotation must be 3x3 and translation a 3-vector")
        if np.abs(r.T @ r - np.eye(3)).max() > 1e-9 or abs(np.linalg.det(r) - 1.0) > 1e-9:
            raise ValueError("rotation is not a proper orthonormal matrix")
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", t)

    def apply(self, points: np.ndarray) -> np.ndarray:
        return (np.asarray(points, dtype=float) + self.translation) @ self.rotation.T


def select_subset(problem: SeparableProblem, t_hat, fraction: float) -> np.ndarray:
    """Indices of the ceil(fraction*M) correspondences with smallest residuals.

    Ties resolve by index (stable sort).
    """
    if not 0.0 < fraction <= 1.0:
        raise ValueError("fraction must be in (0, 1]")
    t_hat = np.asarray(t_hat, dtype=float)
    h = problem.h_all(float(t_hat[0]))
    g = problem.g_all(t_hat[1:])
    r = reduce_norm(h + g, problem.norm)
    count = math.ceil(fraction * problem.data_count)
    return np.argsort(r, kind="stable")[:count]


def _weighted_alignment(p: np.ndarray, q: np.ndarray, w: np.ndarray) -> RigidPose:
    ws = w.sum()
    mu_p = (w[:, None] * p).sum(axis=0) / ws
    mu_q = (w[:, None] * q).sum(axis=0) / ws
    pc = p - mu_p
    qc = q - mu_q
    h = (w[:, None] * pc).T @ qc
    u, _, vt = np.linalg.svd(h)
    d = np.sign(np.linalg.det(vt.T @ u.T))
    rot = vt.T @ np.diag([1.0, 1.0, d]) @ u.T
    t = rot.T @ mu_q - mu_p
    return RigidPose(rot, t)


def fit_rigid(pairs, xi: float, inner_iters: int = 4,
              mu_init_factor: float = 16.0) -> RigidPose:
    """Robust alignment of matched 3-D pairs under q = R (p + t).

    Graduated non-convexity: alternate the closed-form weighted alignment
    with Geman-McClure weight updates w_i = (mu / (mu + e_i^2))^2, annealing
    mu from mu_init_factor times the worst initial squared error down to xi
    by halving.
    """
    if isinstance(pairs, tuple):
        p, q = (np.asarray(x, dtype=float) for x in pairs)
    else:
        arr = np.asarray(pairs, dtype=float)
        p, q = arr[:, 0, :], arr[:, 1, :]
    if p.shape[0] < 3:
        raise DegenerateGeometry("need at least 3 pairs")
    sv = np.linalg.svd(p - p.mean(axis=0), compute_uv=False)
    if sv[1] <= 1e-9 * max(1.0, sv[0]):
        raise DegenerateGeometry("source points are collinear or coincident")

    w = np.ones(p.shape[0])
    pose = _weighted_alignment(p, q, w)
    e2 = np.square(q - pose.apply(p)).sum(axis=1)
    mu = max(mu_init_factor * float(e2.max()), xi)
    while True:
        for _ in range(inner_iters):
            w = (mu / (mu + e2)) ** 2
            pose = _weighted_alignment(p, q, w)
            e2 = np.square(q - pose.apply(p)).sum(axis=1)
        mu *= 0.5
        if mu < xi:
            return pose


def rotation_error(r_hat: np.ndarray, r_star: np.ndarray) -> float:
    """Geodesic angle between rotations, in degrees."""
    c = 0.5 * (np.trace(np.asarray(r_hat).T @ np.asarray(r_star)) - 1.0)
    return math.degrees(math.acos(min(1.0, max(-1.0, float(c)))))


def translation_error(t_hat, t_star) -> float:
    return float(np.linalg.norm(np.asarray(t_hat, dtype=float) - np.asarray(t_star, dtype=float)))
