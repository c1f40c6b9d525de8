"""Device-independent bounds on Eve's guessing probability and the trace distance."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from ..behavior import Behavior
from ..protocol import qber
from . import ipm
from .npa import (
    Monomial,
    MomentProblem,
    build_guessing_sdp,
    build_moment_problem,
    canonical,
    generators,
    lmi_data,
    moment_key,
)

__all__ = [
    "Monomial", "MomentProblem", "SdpSolution", "SolverError", "build_guessing_sdp",
    "build_moment_problem", "canonical", "di_guessing_bound", "di_threshold",
    "di_trace_distance_bound", "generators", "moment_key", "solve_sdp",
]

SDP_TOL = 1e-7
log = logging.getLogger(__name__)


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class SdpSolution:
    optimum: float
    duality_gap: float
    iterations: int
    status: str
    primal_value: float = float("nan")
    dual_value: float = float("nan")
    moments: np.ndarray | None = None


def solve_sdp(p: MomentProblem, sdp_tol: float = SDP_TOL, max_iter: int = 200) -> SdpSolution:
    """Maximise the problem's objective over psd moment matrices.

    ``optimum`` is a certified upper bound on the maximum: every moment of
    projector words lies in [-1, 1], so each interior-point iterate yields one
    (see :func:`ipm.solve`). At status ``optimal`` it matches the best
    feasible moment assignment found to within ``sdp_tol``.
    """
    g0, rows, free, c = lmi_data(p)
    if not free:
        return SdpSolution(p.constant, 0.0, 0, "optimal", p.constant, p.constant,
                           _values(p, free, np.zeros(0)))
    # maximise c.y s.t. g0 + sum y_k G_k psd  <=>  dual form with C = g0, A_k = -G_k
    res = ipm.solve(g0, -rows, c, tol=sdp_tol, max_iter=max_iter, y_bound=1.0)
    if res.status == "infeasible":
        return SdpSolution(np.nan, np.inf, res.iterations, "infeasible")
    upper = p.constant + res.upper
    lower = p.constant + res.dual
    gap = (upper - lower) / (1.0 + abs(upper) + abs(lower))
    if res.status == "optimal":
        status = "optimal" if gap <= sdp_tol else "inexact"
    else:
        status = res.status  # stalled / max_iter / numerical_error: the bound still holds
    return SdpSolution(upper, max(gap, 0.0), res.iterations, status, p.constant + res.primal, lower,
                       _values(p, free, res.y))


def _values(p: MomentProblem, free, y) -> np.ndarray:
    vals = np.zeros(p.n_vars)
    for v, val in p.pinned.items():
        vals[v] = val
    for k, v in enumerate(free):
        vals[v] = y[k]
    return vals


def di_guessing_bound(b: Behavior, level: int = 2, sdp_tol: float = SDP_TOL) -> float:
    """Upper bound on Eve's probability of guessing the key output, given A_0 = B_0."""
    eps = qber(b)
    if eps >= 1.0:
        raise SolverError("key outputs never agree; guessing probability undefined")
    sol = solve_sdp(build_guessing_sdp(b, level), sdp_tol)
    if sol.status == "infeasible":
        raise SolverError("behavior admits no quantum model at this level")
    if not np.isfinite(sol.optimum):
        raise SolverError(f"SDP produced no bound (status {sol.status})")
    if sol.status == "stalled":
        # expected on the boundary of the quantum set (e.g. zero noise)
        log.info("SDP stalled (gap %.2e); using its certified bound", sol.duality_gap)
    elif sol.status != "optimal":
        log.warning("SDP stopped early (%s, gap %.2e); using its certified bound", sol.status, sol.duality_gap)
    return min(1.0, sol.optimum / (1.0 - eps))


def di_trace_distance_bound(b: Behavior, level: int = 2, sdp_tol: float = SDP_TOL) -> float:
    """Upper bound on d(rho_ET|00, rho_ET|11) = 2 P_g - 1 from the behavior alone."""
    pg = di_guessing_bound(b, level, sdp_tol)
    return min(1.0, max(0.0, 2.0 * pg - 1.0))


def di_threshold(case: int, level: int = 2, tol_q: float = 1e-4, condition: str = "suffQ",
                 workers: int = 1) -> float:
    """Largest depolarizing noise at which the condition is certified from the DI bound."""
    from ..scenarios import find_threshold

    return find_threshold(condition, case, "di_sdp", tol_q=tol_q, level=level, workers=workers)
