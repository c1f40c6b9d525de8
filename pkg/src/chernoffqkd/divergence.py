"""Distinguishability measures between density matrices.

Trace distance, fidelity, the Chernoff s-overlap ``Tr(rho^s sigma^(1-s))``, its
infimum over ``s`` (the non-logarithmic Chernoff divergence, here ``nqcd``) and
the Helstrom guessing probability.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .qmath import TOL_PSD, TOL_TR, ValidationError, _clamped_spectrum, _mat, spectral_power, support_cut

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class NqcdResult:
    value: float
    s_star: float
    evaluations: int


def _pair(rho, sigma):
    a, b = _mat(rho), _mat(sigma)
    if a.shape != b.shape:
        raise ValidationError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return a, b


class SOverlap:
    """``s -> Tr(rho^s sigma^(1-s))`` evaluated from cached spectral decompositions.

    Writing ``rho = sum_i l_i |u_i><u_i|`` and ``sigma = sum_j m_j |v_j><v_j|``
    the overlap is ``sum_ij l_i^s m_j^(1-s) |<u_i|v_j>|^2``, so each evaluation
    after construction costs one matrix-vector product.
    """

    def __init__(self, rho, sigma, tol_psd: float = TOL_PSD):
        a, b = _pair(rho, sigma)
        la, ua = _clamped_spectrum(a, tol_psd)
        lb, ub = _clamped_spectrum(b, tol_psd)
        self.la = np.where(la <= support_cut(la), 0.0, la)
        self.lb = np.where(lb <= support_cut(lb), 0.0, lb)
        self.overlap = np.abs(ua.conj().T @ ub) ** 2
        self.calls = 0

    def __call__(self, s: float) -> float:
        if not 0.0 <= s <= 1.0:
            raise ValidationError(f"s must lie in [0, 1], got {s}")
        self.calls += 1
        val = spectral_power(self.la, s) @ self.overlap @ spectral_power(self.lb, 1.0 - s)
        return max(float(val), 0.0)


def s_overlap(rho, sigma, s: float) -> float:
    """Tr(rho^s sigma^(1-s)) with the support-projector convention at s in {0, 1}."""
    return SOverlap(rho, sigma)(s)


def golden_section(f, lo: float, hi: float, tol: float = 1e-10):
    """Minimise a convex scalar function on [lo, hi].

    Returns ``(x_best, f_best, evaluations)``; ``x_best`` is the best point
    probed, including both endpoints.
    """
    fa, fb = f(lo), f(hi)
    probes = [(fa, lo), (fb, hi)]
    a, b = lo, hi
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    probes += [(fc, c), (fd, d)]
    n = 4
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
            probes.append((fc, c))
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
            probes.append((fd, d))
        n += 1
    fbest, xbest = min(probes)
    return xbest, fbest, n


def nqcd(rho, sigma, tol: float = 1e-10) -> NqcdResult:
    """Infimum over s in [0, 1] of Tr(rho^s sigma^(1-s)), found by golden-section search.

    The objective is convex in ``s`` so the search brackets the minimiser; the
    endpoint values (support projectors) are part of the comparison, which
    covers infima approached at the boundary.
    """
    if tol <= 0:
        raise ValidationError("tol must be positive")
    f = SOverlap(rho, sigma)
    s, val, _ = golden_section(f, 0.0, 1.0, tol)
    return NqcdResult(value=min(max(val, 0.0), 1.0), s_star=s, evaluations=f.calls)


def trace_norm(h) -> float:
    w = np.linalg.eigvalsh(_mat(h))
    return float(np.sum(np.abs(w)))


def trace_distance(rho, sigma) -> float:
    a, b = _pair(rho, sigma)
    return min(max(0.5 * trace_norm(a - b), 0.0), 1.0)


def _psd_sqrt(m) -> np.ndarray:
    w, v = _clamped_spectrum(m, tol_psd=1e-7)
    # round-off eigenvalues near 1e-16 would otherwise add ~1e-8 after the root
    w = np.where(w <= 1e-13 * max(w[-1], 1e-300), 0.0, w)
    return (v * np.sqrt(w)) @ v.conj().T


def fidelity(rho, sigma) -> float:
    """Root fidelity Tr sqrt(sqrt(rho) sigma sqrt(rho)), clipped to [0, 1].

    Evaluated as the trace norm of sqrt(rho) sqrt(sigma): the singular values
    are the square roots of the inner eigenvalues without a second root.
    """
    a, b = _pair(rho, sigma)
    sv = np.linalg.svd(_psd_sqrt(a) @ _psd_sqrt(b), compute_uv=False)
    return min(max(float(np.sum(sv)), 0.0), 1.0)


def helstrom_guess(p0: float, rho0, p1: float, rho1) -> float:
    """Optimal probability of identifying which of two states was prepared."""
    if p0 < 0 or p1 < 0 or abs(p0 + p1 - 1.0) > TOL_TR:
        raise ValidationError(f"priors ({p0}, {p1}) do not form a distribution")
    a, b = _pair(rho0, rho1)
    return 0.5 * (1.0 + trace_norm(p0 * a - p1 * b))
