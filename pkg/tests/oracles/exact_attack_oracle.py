"""Recompute the frozen isotropic-attack values used in test_scenarios.

Independent of the package: the purification is built as an amplitude tensor,
matrix powers come from per-call eigendecompositions with an explicit support
cut, the fidelity from singular values and thresholds from scipy's brentq.
Run: python tests/oracles/exact_attack_oracle.py
"""
import numpy as np
import scipy.linalg as sla
from scipy.optimize import brentq, minimize_scalar

S2 = np.sqrt(2)
X = np.array([[0.0, 1.0], [1.0, 0.0]])
Z = np.diag([1.0, -1.0])


def power(m, t, cut=1e-12):
    w, v = np.linalg.eigh(m)
    w = np.where(w > cut, w, 0.0)
    wt = np.zeros_like(w)
    wt[w > 0] = w[w > 0] ** t
    return (v * wt) @ v.conj().T


def q_value(r, s):
    f = lambda t: np.trace(power(r, t) @ power(s, 1 - t)).real  # noqa: E731
    grid = np.linspace(0.0, 1.0, 1001)
    vals = [f(t) for t in grid]
    i = int(np.argmin(vals))
    res = minimize_scalar(f, bounds=(grid[max(i - 1, 0)], grid[min(i + 1, 1000)]), method="bounded",
                          options={"xatol": 1e-12})
    return min(res.fun, min(vals))


def f_value(r, s):
    return np.linalg.svd(power(r, 0.5) @ power(s, 0.5), compute_uv=False).sum()


def states(case, q):
    bell = [np.array(v) / S2 for v in ([1, 0, 0, 1], [1, 0, 0, -1], [0, 1, 1, 0], [0, 1, -1, 0])]
    lam = [1 - 1.5 * q, q / 2, q / 2, q / 2]
    psi = np.stack([np.sqrt(lam[i]) * bell[i] for i in range(4)], axis=1)  # [ab, e]
    kb = Z if case > 1 else (X + Z) / S2
    pa = [(np.eye(2) + Z) / 2, (np.eye(2) - Z) / 2]
    pb = [(np.eye(2) + kb) / 2, (np.eye(2) - kb) / 2]
    sig, pr = {}, {}
    for a in range(2):
        for b in range(2):
            phi = np.kron(pa[a], pb[b]) @ psi
            m = phi.T @ phi.conj()
            pr[a, b] = np.trace(m).real
            sig[a, b] = m / pr[a, b]
    eps = pr[0, 1] + pr[1, 0]
    rho = lambda a, b: sla.block_diag(sig[a, b] / 2, sig[1 - a, 1 - b] / 2)  # noqa: E731
    return eps, rho(0, 0), rho(1, 1)


if __name__ == "__main__":
    for case in (1, 2, 3):
        e, r, s = states(case, 0.25)
        d = 0.5 * np.abs(np.linalg.eigvalsh(r - s)).sum()
        print("q=0.25", case, repr(e), repr(q_value(r, s)), repr(f_value(r, s)), repr(d))
    for case in (1, 2, 3):
        for name, fn in (("suffQ", lambda r, s: q_value(r, s)), ("suffF", lambda r, s: f_value(r, s) ** 2)):
            def margin(q):
                e, r, s = states(case, q)
                return fn(r, s) - e / (1 - e)
            print("threshold", case, name, repr(brentq(margin, 0.01, 0.45, xtol=1e-12)))
