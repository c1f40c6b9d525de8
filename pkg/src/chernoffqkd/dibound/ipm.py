"""Primal-dual interior-point solver for small dense SDPs.

Solves the pair

    (P)  minimise   <C, X>     s.t.  <A_i, X> = b_i,  X psd
    (D)  maximise   b . y      s.t.  C - sum_i y_i A_i = S psd

with the HKM search direction and a Mehrotra predictor-corrector. The A_i are
symmetric and given as rows of a sparse matrix acting on ``X.ravel()``; the
Schur complement is assembled densely, which is fine up to a few hundred rows
and columns.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class IpmResult:
    primal: float
    dual: float
    x: np.ndarray
    y: np.ndarray
    s: np.ndarray
    iterations: int
    status: str
    gap: float
    pinf: float
    dinf: float
    upper: float = np.inf


class _Ops:
    """Apply Aop and its adjoint, and build the HKM Schur complement."""

    def __init__(self, a_rows: sp.csr_matrix, n: int):
        self.a = a_rows.tocsr()
        self.at = self.a.T.tocsr()
        self.n = n
        # per-constraint nonzero positions, for the Schur complement
        self.rows, self.cols, self.vals = [], [], []
        for i in range(self.a.shape[0]):
            lo, hi = self.a.indptr[i], self.a.indptr[i + 1]
            idx = self.a.indices[lo:hi]
            self.rows.append(idx // n)
            self.cols.append(idx % n)
            self.vals.append(self.a.data[lo:hi])

    def apply(self, x: np.ndarray) -> np.ndarray:
        return self.a @ x.ravel()

    def adjoint(self, y: np.ndarray) -> np.ndarray:
        return (self.at @ y).reshape(self.n, self.n)

    def schur(self, x: np.ndarray, sinv: np.ndarray) -> np.ndarray:
        # row i of W is vec(X A_i Sinv); M = W Aop^T
        m = self.a.shape[0]
        w = np.empty((m, self.n * self.n))
        for i in range(m):
            w[i] = ((x[:, self.rows[i]] * self.vals[i]) @ sinv[self.cols[i], :]).ravel()
        out = np.asarray((self.a @ w.T).T)
        return 0.5 * (out + out.T)


def _max_step(x_chol: np.ndarray, dx: np.ndarray) -> float:
    li = sla.solve_triangular(x_chol, np.eye(x_chol.shape[0]), lower=True)
    lam = np.linalg.eigvalsh(li @ dx @ li.T)[0]
    return np.inf if lam >= 0 else -1.0 / lam


def _sym(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.T)


def solve(c: np.ndarray, a_rows: sp.spmatrix, b: np.ndarray, tol: float = 1e-7,
          max_iter: int = 200, y_bound: float | None = None, stall: int = 15,
          verbose: bool = False) -> IpmResult:
    """Run the predictor-corrector iteration from an infeasible start.

    If every feasible ``y`` of (D) satisfies ``|y_i| <= y_bound``, each iterate
    gives the valid upper bound ``<C, X> + y_bound * |b - A(X)|_1`` on the
    optimum of (D); the smallest one seen is returned as ``upper``. This keeps
    a usable bound when the iteration stalls, which happens when (D) has no
    strictly feasible point. The loop stops early once that bound has not
    improved for ``stall`` iterations.
    """
    c = _sym(np.asarray(c, dtype=float))
    n = c.shape[0]
    b = np.asarray(b, dtype=float)
    ops = _Ops(sp.csr_matrix(a_rows), n)
    norm_b = 1.0 + np.linalg.norm(b)
    norm_c = 1.0 + np.linalg.norm(c)
    scale = max(10.0, np.sqrt(n), norm_c, norm_b)
    x = scale * np.eye(n)
    s = scale * np.eye(n)
    y = np.zeros(b.size)
    status = "max_iter"
    it = 0
    pobj = dobj = gap = pinf = dinf = np.nan
    upper, best_it = np.inf, 0
    for it in range(1, max_iter + 1):
        rp = b - ops.apply(x)
        rd = c - s - ops.adjoint(y)
        mu = np.vdot(x, s) / n
        pobj, dobj = float(np.vdot(c, x)), float(b @ y)
        gap = abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj))
        pinf = np.linalg.norm(rp) / norm_b
        dinf = np.linalg.norm(rd) / norm_c
        if y_bound is not None:
            cand = pobj + y_bound * float(np.sum(np.abs(rp)))
            if cand < upper - 1e-12 * (1.0 + abs(upper) if np.isfinite(upper) else 1.0):
                upper, best_it = cand, it
        if verbose:
            log.info("it %3d  p %.9g  d %.9g  gap %.2e  pinf %.2e  dinf %.2e", it, pobj, dobj, gap, pinf, dinf)
        if gap <= tol and pinf <= tol and dinf <= tol:
            status = "optimal"
            break
        if y_bound is not None and it - best_it > stall:
            status = "stalled"
            break
        # Farkas-type certificate: X nearly in the null space of Aop with <C, X> < 0
        trx = np.trace(x)
        if trx > 1e8 and np.vdot(c, x) / trx < -1e-6 and np.linalg.norm(ops.apply(x)) / trx < 1e-6:
            status = "infeasible"
            break
        if np.trace(s) > 1e12:
            status = "unbounded"
            break
        try:
            s_chol = np.linalg.cholesky(s)
            x_chol = np.linalg.cholesky(x)
        except np.linalg.LinAlgError:
            status = "numerical_error"
            break
        s_inv_l = sla.solve_triangular(s_chol, np.eye(n), lower=True)
        sinv = s_inv_l.T @ s_inv_l
        schur = ops.schur(x, sinv)
        try:
            factor = sla.cho_factor(schur)
            solve_m = lambda r: sla.cho_solve(factor, r)  # noqa: E731
        except np.linalg.LinAlgError:
            pinv = np.linalg.pinv(schur)
            solve_m = lambda r: pinv @ r  # noqa: E731
        x_rd_sinv = x @ rd @ sinv
        base_rhs = rp + ops.apply(x_rd_sinv)

        def direction(rc):
            dy = solve_m(base_rhs - ops.apply(rc @ sinv))
            ds = rd - ops.adjoint(dy)
            dx = _sym(rc @ sinv - x @ ds @ sinv)
            return dx, dy, ds

        xs = x @ s
        dx, dy, ds = direction(-xs)
        ap = min(1.0, _max_step(x_chol, dx))
        ad = min(1.0, _max_step(s_chol, ds))
        mu_aff = np.vdot(x + ap * dx, s + ad * ds) / n
        sigma = min(1.0, max(0.0, (mu_aff / mu) ** 3)) if mu > 0 else 0.0
        rc = sigma * mu * np.eye(n) - xs - dx @ ds
        dx, dy, ds = direction(rc)
        tau = 0.9 if it < 3 else 0.98
        ap = min(1.0, tau * _max_step(x_chol, dx))
        ad = min(1.0, tau * _max_step(s_chol, ds))
        x = _sym(x + ap * dx)
        y = y + ad * dy
        s = _sym(s + ad * ds)
    return IpmResult(pobj, dobj, x, y, s, it, status, gap, pinf, dinf, upper)
