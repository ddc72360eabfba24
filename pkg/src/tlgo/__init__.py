"""Certified global minimization of truncated robust losses for geometric estimation."""

from .direct import DirectConfig, DirectResult, minimize_1d, minimize_nd, potentially_optimal
from .engine import (
    EngineConfig,
    SolveReport,
    bnb_maximize_cm,
    bnb_minimize_tl,
    direct_nd_solve,
    gtm_minimize,
    nested_bnb_minimize,
    solve_by_id,
)
from .intervals import Box, Interval
from .objective import ResidualNorm, SeparableProblem, cm_objective, tl_objective

__all__ = [
    "Box",
    "DirectConfig",
    "DirectResult",
    "EngineConfig",
    "Interval",
    "ResidualNorm",
    "SeparableProblem",
    "SolveReport",
    "bnb_maximize_cm",
    "bnb_minimize_tl",
    "cm_objective",
    "direct_nd_solve",
    "gtm_minimize",
    "minimize_1d",
    "minimize_nd",
    "nested_bnb_minimize",
    "potentially_optimal",
    "solve_by_id",
    "tl_objective",
]
