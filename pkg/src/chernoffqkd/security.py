"""Key-rate conditions for the repetition-code block procedure.

Quantities are evaluated for Eve's single-round states rho_ET|00 and rho_ET|11:

* sufficient (Chernoff):  Q > eps/(1-eps)
* necessary  (Chernoff):  Q <= eps/(1-eps), given rho_ET|01 = rho_ET|10
* sufficient (fidelity):  F**2 > eps/(1-eps)
* necessary  (fidelity):  F <= eps/(1-eps), given rho_ET|01 = rho_ET|10
* sufficient (distance):  1 - d > eps/(1-eps)
"""
from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import asdict, dataclass

import numpy as np

from .divergence import fidelity, helstrom_guess, nqcd, trace_distance
from .protocol import AttackModel, _cc_weights, _check_capacity, accepted_block_ensemble, marginal_c
from .qmath import MAX_DIM, ValidationError, binary_entropy, cond_entropy_cq, kron_all, tensor_power

TOL_COND = 1e-7
K_CAP = 5


class DivergenceError(ArithmeticError):
    """g(k) is undefined because the k-copy states are perfectly distinguishable."""


def _check_eps(eps: float):
    if not 0.0 <= eps <= 0.5:
        raise ValidationError(f"eps must lie in [0, 1/2], got {eps}")


def _check_k(k: int):
    if int(k) != k or k < 1:
        raise ValidationError(f"block size must be a positive integer, got {k}")


def beta(eps: float) -> float:
    _check_eps(eps)
    return eps / (1.0 - eps)


def delta_k(eps: float, k: int) -> float:
    """Pr(C != C' | block accepted) = eps^k / (eps^k + (1-eps)^k)."""
    _check_eps(eps)
    _check_k(k)
    if eps == 0.0:
        return 0.0
    rk = (eps / (1.0 - eps)) ** k
    return rk / (1.0 + rk)


def bob_entropy(eps: float, k: int) -> float:
    """H(C|C'; D=1) = h(delta_k)."""
    return binary_entropy(delta_k(eps, k))


def _eta_sum(m: np.ndarray) -> float:
    w = np.linalg.eigvalsh(m)
    w = w[w > 1e-300]
    return float(-np.sum(w * np.log2(w)))


def eve_entropy(a: AttackModel, k: int, max_dim: int = MAX_DIM) -> float:
    """H(C|ETM; D=1) for the accepted-block ensemble.

    The value does not depend on the public message, so the all-zero message is
    used. Every round state is block-diagonal in its T bit, so the block state
    splits into 2**k blocks of order d_e**k, one per T string; the entropies
    are summed block by block instead of diagonalising the full matrix.
    """
    _check_capacity(a.d_et, k, max_dim)
    d = a.d_e
    # sigma-part of rho_ab on T = t is rho_ab[:, t, :, t] = sigma_(a^t, b^t) / 2
    blk = {(x, y, t): a.rho(x, y).reshape(d, 2, d, 2)[:, t, :, t] for x in (0, 1) for y in (0, 1) for t in (0, 1)}
    same, diff = _cc_weights(a.eps, k)
    s_joint = s_eve = 0.0
    for ts in itertools.product((0, 1), repeat=k):
        per_c = []
        for c in (0, 1):
            m = sum(w * kron_all([blk[(c, cp, t)] for t in ts], max_dim)
                    for cp, w in ((c, same), (1 - c, diff)) if w > 0)
            per_c.append(m)
            s_joint += _eta_sum(m)
        s_eve += _eta_sum(per_c[0] + per_c[1])
    return s_joint - s_eve


def eve_entropy_dense(a: AttackModel, k: int, max_dim: int = MAX_DIM) -> float:
    """Same quantity as :func:`eve_entropy` from the full accepted-block states."""
    e = accepted_block_ensemble(a, (0,) * k, k, max_dim)
    return cond_entropy_cq(marginal_c(e))


def exact_dw_margin(a: AttackModel, k: int, max_dim: int = MAX_DIM) -> float:
    """H(C|ETM; D=1) - H(C|C'; D=1); positive means a positive key rate."""
    return eve_entropy(a, k, max_dim) - bob_entropy(a.eps, k)


def continuity_lower_bound(h_tilde: float, eps: float, k: int) -> float:
    """Lower bound on H(C|ET; m, D=1) from the entropy of the C = C' restricted state."""
    if not 0.0 <= h_tilde <= 1.0 + 1e-12:
        raise ValidationError(f"h_tilde must lie in [0, 1], got {h_tilde}")
    dk = delta_k(eps, k)
    return h_tilde - dk - (1.0 + dk) * binary_entropy(dk / (1.0 + dk))


def eve_guess_bound(q_value: float, eps: float, k: int) -> float:
    """Upper bound 1/2 (delta_k + (1 - delta_k) Q^k) on Eve's error guessing C."""
    if not 0.0 <= q_value <= 1.0:
        raise ValidationError(f"Q must lie in [0, 1], got {q_value}")
    dk = delta_k(eps, k)
    return 0.5 * (dk + (1.0 - dk) * q_value**k)


def guess_bound_beats_bob(q_value: float, eps: float, k: int) -> tuple[bool, bool]:
    """Both sides of the equivalence: (bound <= delta_k, Q <= eps/(1-eps)).

    The two flags coincide for every k; a small relative slack absorbs rounding.
    """
    dk = delta_k(eps, k)
    lhs = eve_guess_bound(q_value, eps, k) <= dk * (1 + 1e-12) + 1e-300
    rhs = q_value <= beta(eps) * (1 + 1e-12)
    return lhs, rhs


def g_of_k(rho0, rho1, k: int, q_value: float | None = None, max_dim: int = MAX_DIM) -> float:
    """g(k) = (1/k) ln[(1 - d(rho0^k, rho1^k))/2] - ln Q(rho0, rho1), natural log."""
    _check_k(k)
    d = trace_distance(tensor_power(np.asarray(rho0), k, max_dim), tensor_power(np.asarray(rho1), k, max_dim))
    q = nqcd(rho0, rho1).value if q_value is None else q_value
    if 1.0 - d <= 1e-12 or q <= 0.0:
        raise DivergenceError(f"k-copy states are perfectly distinguishable (d = {d})")
    return math.log((1.0 - d) / 2.0) / k - math.log(q)


def helstrom_error_c(a: AttackModel, k: int, m=None, max_dim: int = MAX_DIM) -> float:
    """Eve's optimal error probability guessing C from ET given M = m and D = 1."""
    m = (0,) * k if m is None else m
    e = marginal_c(accepted_block_ensemble(a, m, k, max_dim))
    return 1.0 - helstrom_guess(e.weights[0], e.states[0], e.weights[1], e.states[1])


@dataclass(frozen=True)
class SecurityVerdict:
    eps: float
    beta: float
    q_value: float
    f_value: float
    d_value: float
    thm1_sufficient: bool
    thm2_applicable: bool
    thm2_insecure: bool
    f_sufficient: bool
    f_necessary: bool
    d_sufficient: bool

    CSV_COLUMNS = ("eps", "beta", "Q", "F", "d", "thm1_sufficient", "thm2_applicable",
                   "thm2_insecure", "f_sufficient", "f_necessary", "d_sufficient")

    def csv_row(self) -> list:
        return [self.eps, self.beta, self.q_value, self.f_value, self.d_value,
                int(self.thm1_sufficient), int(self.thm2_applicable), int(self.thm2_insecure),
                int(self.f_sufficient), int(self.f_necessary), int(self.d_sufficient)]

    def to_csv(self, header: bool = True) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        if header:
            w.writerow(self.CSV_COLUMNS)
        w.writerow([_fmt(x) for x in self.csv_row()])
        return buf.getvalue()

    def report(self) -> str:
        lines = [f"{k}: {v}" for k, v in asdict(self).items()]
        if self.thm1_sufficient:
            lines.append("verdict: secure for large enough block size")
        elif self.thm2_insecure:
            lines.append("verdict: insecure for every block size")
        else:
            lines.append("verdict: undecided")
        return "\n".join(lines) + "\n"

    def check(self) -> list[str]:
        """Names of violated internal implications (empty when consistent)."""
        bad = []
        if self.thm2_insecure and not self.thm2_applicable:
            bad.append("thm2_insecure without applicability")
        if self.f_sufficient and not self.thm1_sufficient:
            bad.append("fidelity sufficient but Chernoff not")
        if self.f_necessary and self.thm2_applicable and not self.thm2_insecure:
            bad.append("fidelity necessary but Chernoff not")
        return bad


def _fmt(x) -> str:
    return f"{x:.12g}" if isinstance(x, float) else str(x)


def verdict_from_values(q_value: float, f_value: float, d_value: float, eps: float,
                        thm2_applicable: bool) -> SecurityVerdict:
    b = beta(eps)
    return SecurityVerdict(
        eps=eps, beta=b, q_value=q_value, f_value=f_value, d_value=d_value,
        thm1_sufficient=q_value > b,
        thm2_applicable=thm2_applicable,
        thm2_insecure=thm2_applicable and q_value <= b,
        f_sufficient=f_value**2 > b,
        f_necessary=f_value <= b,
        d_sufficient=1.0 - d_value > b,
    )


def evaluate_conditions(a: AttackModel, tol_cond: float = TOL_COND) -> SecurityVerdict:
    r0, r1 = a.rho(0, 0), a.rho(1, 1)
    applicable = trace_distance(a.rho(0, 1), a.rho(1, 0)) <= tol_cond
    return verdict_from_values(nqcd(r0, r1).value, fidelity(r0, r1), trace_distance(r0, r1),
                               a.eps, applicable)
