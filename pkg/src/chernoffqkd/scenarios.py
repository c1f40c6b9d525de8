"""Depolarizing-noise measurement scenarios, explicit attacks and threshold scans."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .behavior import Behavior, symmetrize_behavior
from .divergence import fidelity, nqcd, trace_distance
from .protocol import AttackModel, qber
from .qmath import ValidationError, partial_trace

X = np.array([[0, 1], [1, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
PHI_PLUS = np.array([1, 0, 0, 1], dtype=complex) / math.sqrt(2)
BELL = np.array([
    [1, 0, 0, 1],
    [1, 0, 0, -1],
    [0, 1, 1, 0],
    [0, 1, -1, 0],
], dtype=complex) / math.sqrt(2)

CONDITIONS = ("suffQ", "neccQ", "suffF", "neccF", "suffD")
BOUND_SOURCES = ("exact_attack", "di_sdp")
# published DI noise thresholds of this protocol, the reproduction target per case
TARGET_DI_THRESHOLDS = {1: 0.0771, 2: 0.0818, 3: 0.0956}


class NoThresholdError(RuntimeError):
    """The condition margin has no single sign change on [0, 1/2]."""


@dataclass(frozen=True)
class ScenarioId:
    case: int

    def __post_init__(self):
        if self.case not in (1, 2, 3):
            raise ValidationError(f"scenario case must be 1, 2 or 3, got {self.case}")


def _sid(case) -> ScenarioId:
    return case if isinstance(case, ScenarioId) else ScenarioId(int(case))


def case_measurements(case, theta: float | None = None) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Alice's and Bob's +-1 observables; index 0 is the key measurement.

    ``theta`` (case 1 only) rotates Bob's pair to cos(theta) Z + sin(theta) X and
    cos(theta) X - sin(theta) Z; the default pi/4 is the CHSH-optimal choice.
    """
    sid = _sid(case)
    d1 = (X + Z) / math.sqrt(2)
    d2 = (X - Z) / math.sqrt(2)
    if sid.case == 1:
        t = math.pi / 4 if theta is None else theta
        b0 = math.cos(t) * Z + math.sin(t) * X
        b1 = math.cos(t) * X - math.sin(t) * Z
        return [Z, X], [b0, b1]
    if theta is not None:
        raise ValidationError("a measurement angle is only supported for case 1")
    if sid.case == 2:
        return [Z, X], [Z, d1, d2]
    obs = [Z, d1, X, d2]
    return obs, list(obs)


def _projector0(o: np.ndarray) -> np.ndarray:
    return 0.5 * (np.eye(2) + o)


def _outcome_projectors(o: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    p0 = _projector0(o)
    return p0, np.eye(2) - p0


def target_behavior(case, theta: float | None = None) -> np.ndarray:
    """Pr_target(ab|xy) from the Bell state |Phi+> and the case's observables."""
    alice, bob = case_measurements(case, theta)
    rho = np.outer(PHI_PLUS, PHI_PLUS.conj())
    p = np.zeros((len(alice), len(bob), 2, 2))
    for x, ax in enumerate(alice):
        for y, by in enumerate(bob):
            for a, pa in enumerate(_outcome_projectors(ax)):
                for b, pb in enumerate(_outcome_projectors(by)):
                    p[x, y, a, b] = np.trace(np.kron(pa, pb) @ rho).real
    return symmetrize_behavior(p)


def honest_behavior(case, q: float, theta: float | None = None) -> Behavior:
    """Depolarized target behavior (1 - 2q) Pr_target + q/2."""
    if not 0.0 <= q <= 0.5:
        raise ValidationError(f"noise q must lie in [0, 1/2], got {q}")
    return Behavior((1 - 2 * q) * target_behavior(case, theta) + q / 2)


def isotropic_attack(case, q: float, theta: float | None = None) -> AttackModel:
    """Eve holds the purification of the depolarized Bell state.

    rho_AB = (1 - 2q)|Phi+><Phi+| + (q/2) I is diagonal in the Bell basis; Eve's
    4-dimensional register records the Bell index. Her conditional states come
    from the key measurements A_0, B_0. A zero-probability outcome pair gets
    Eve's unconditional state.
    """
    if not 0.0 <= q <= 0.5:
        raise ValidationError(f"noise q must lie in [0, 1/2], got {q}")
    lam = np.array([1 - 1.5 * q, q / 2, q / 2, q / 2])
    psi = sum(math.sqrt(l) * np.kron(BELL[i], np.eye(4)[i]) for i, l in enumerate(lam))
    full = np.outer(psi, psi.conj())
    alice, bob = case_measurements(case, theta)
    eve_marginal = partial_trace(full, [2], (2, 2, 4))
    sigma = {}
    for a, pa in enumerate(_outcome_projectors(alice[0])):
        for b, pb in enumerate(_outcome_projectors(bob[0])):
            op = np.kron(np.kron(pa, pb), np.eye(4))
            unnorm = partial_trace(op @ full @ op, [2], (2, 2, 4))
            pr = np.trace(unnorm).real
            sigma[f"{a}{b}"] = unnorm / pr if pr > 1e-14 else eve_marginal
    origin = honest_behavior(case, q, theta)
    return AttackModel.from_eve_states(qber(origin), sigma, origin=origin)


# ---------------------------------------------------------------- thresholds

def _beta(eps: float) -> float:
    return eps / (1 - eps)


def condition_margin(condition: str, eps: float, q_value: float, f_value: float, d_value: float) -> float:
    """Positive when the condition holds (sufficient) or the protocol is insecure (necessary)."""
    b = _beta(eps)
    margins = {
        "suffQ": q_value - b,
        "suffF": f_value**2 - b,
        "suffD": 1 - d_value - b,
        "neccQ": b - q_value,
        "neccF": b - f_value,
    }
    if condition not in margins:
        raise ValidationError(f"unknown condition {condition!r}; choose from {CONDITIONS}")
    return margins[condition]


def margin_function(condition: str, case, bound_source: str = "exact_attack", level: int = 2,
                    theta: float | None = None) -> Callable[[float], float]:
    if condition not in CONDITIONS:
        raise ValidationError(f"unknown condition {condition!r}; choose from {CONDITIONS}")
    if bound_source == "exact_attack":
        def margin(q: float) -> float:
            a = isotropic_attack(case, q, theta)
            r0, r1 = a.rho(0, 0), a.rho(1, 1)
            return condition_margin(condition, a.eps, nqcd(r0, r1).value, fidelity(r0, r1),
                                    trace_distance(r0, r1))
        return margin
    if bound_source == "di_sdp":
        if condition.startswith("necc"):
            raise ValidationError("necessary conditions need exact states, not DI upper bounds")
        from .dibound import di_trace_distance_bound

        def margin(q: float) -> float:
            b = honest_behavior(case, q, theta)
            d = di_trace_distance_bound(b, level)
            # Q >= 1 - d and F >= 1 - d
            return condition_margin(condition, qber(b), 1 - d, 1 - d, d)
        return margin
    raise ValidationError(f"unknown bound source {bound_source!r}; choose from {BOUND_SOURCES}")


def bisect_threshold(margin: Callable[[float], float], tol_q: float = 1e-4, grid: int = 21,
                     lo: float = 0.0, hi: float = 0.5, workers: int = 1,
                     prescan: list | None = None) -> float:
    """Locate the single sign change of ``margin`` on [lo, hi] to width ``tol_q``.

    Returns the last point where the margin is positive if it starts positive
    (largest noise still secure), else the first point where it is positive.
    ``prescan``, if given, receives the (q, margin) grid.
    """
    qs = np.linspace(lo, hi, grid)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            vals = list(pool.map(margin, qs))
    else:
        vals = [margin(q) for q in qs]
    if prescan is not None:
        prescan.extend(zip(qs.tolist(), vals))
    signs = [v > 0 for v in vals]
    changes = [i for i in range(grid - 1) if signs[i] != signs[i + 1]]
    if len(changes) != 1:
        raise NoThresholdError(f"expected one sign change on the grid, found {len(changes)}")
    i = changes[0]
    a, b = float(qs[i]), float(qs[i + 1])
    starts_positive = signs[i]
    while b - a > tol_q:
        mid = 0.5 * (a + b)
        if (margin(mid) > 0) == starts_positive:
            a = mid
        else:
            b = mid
    return a if starts_positive else b


def find_threshold(condition: str, case, bound_source: str = "exact_attack", tol_q: float = 1e-4,
                   level: int = 2, theta: float | None = None, workers: int = 1,
                   prescan: list | None = None) -> float:
    """Noise value at which ``condition`` switches on [0, 1/2]."""
    margin = margin_function(condition, case, bound_source, level, theta)
    return bisect_threshold(margin, tol_q, workers=workers, prescan=prescan)
