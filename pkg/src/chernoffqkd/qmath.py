"""Dense Hermitian linear algebra and entropy primitives.

Every routine works on plain ``numpy`` arrays; :class:`DensityMatrix` and
:class:`CqEnsemble` add validation and a subsystem dimension list on top.
Entropies are in bits.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

TOL_HERM = 1e-9
TOL_PSD = 1e-9
TOL_TR = 1e-9
MAX_DIM = 2**13


class ValidationError(ValueError):
    """Input fails a structural precondition (Hermiticity, positivity, trace, shape)."""


class CapacityError(ValueError):
    """A requested object would exceed the configured dimension cap."""


@dataclass(frozen=True)
class DensityMatrix:
    """Unit-trace positive semidefinite matrix with a subsystem dimension list."""

    matrix: np.ndarray
    dims: tuple[int, ...] = field(default=())
    tol_herm: float = field(default=TOL_HERM, repr=False, compare=False)
    tol_psd: float = field(default=TOL_PSD, repr=False, compare=False)
    tol_tr: float = field(default=TOL_TR, repr=False, compare=False)

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValidationError(f"density matrix must be square, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ValidationError("density matrix has non-finite entries")
        dims = tuple(int(d) for d in self.dims) if self.dims else (m.shape[0],)
        if any(d < 1 for d in dims) or int(np.prod(dims)) != m.shape[0]:
            raise ValidationError(f"dims {dims} do not multiply to order {m.shape[0]}")
        if np.max(np.abs(m - m.conj().T), initial=0.0) > self.tol_herm:
            raise ValidationError("density matrix is not Hermitian")
        m = 0.5 * (m + m.conj().T)
        tr = np.trace(m).real
        if abs(tr - 1.0) > self.tol_tr:
            raise ValidationError(f"density matrix trace {tr!r} differs from 1")
        lo = np.linalg.eigvalsh(m)[0]
        if lo < -self.tol_psd:
            raise ValidationError(f"density matrix has negative eigenvalue {lo:.3e}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "dims", dims)

    @property
    def order(self) -> int:
        return self.matrix.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.matrix if dtype is None else self.matrix.astype(dtype)


@dataclass(frozen=True)
class CqEnsemble:
    """Classical-quantum state ``sum_c p_c |c><c| (x) rho_c``."""

    labels: tuple[int, ...]
    weights: tuple[float, ...]
    states: tuple[np.ndarray, ...]
    dims: tuple[int, ...] = ()

    def __post_init__(self):
        if not (len(self.labels) == len(self.weights) == len(self.states)) or not self.labels:
            raise ValidationError("ensemble needs matching, non-empty labels/weights/states")
        w = np.asarray(self.weights, dtype=float)
        if np.any(w < 0) or abs(w.sum() - 1.0) > TOL_TR:
            raise ValidationError(f"ensemble weights must be a probability vector, got {w}")
        states = tuple(_mat(s) for s in self.states)
        n = states[0].shape[0]
        if any(s.shape != (n, n) for s in states):
            raise ValidationError("ensemble states must share one dimension")
        object.__setattr__(self, "weights", tuple(float(x) for x in w))
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "dims", tuple(self.dims) if self.dims else (n,))

    @classmethod
    def from_entries(cls, entries: Iterable[tuple[int, float, object]], dims=()):
        labels, weights, states = zip(*entries)
        return cls(tuple(labels), tuple(weights), tuple(states), tuple(dims))

    def average(self) -> np.ndarray:
        return sum(p * s for p, s in zip(self.weights, self.states))

    def joint(self) -> np.ndarray:
        """Block-diagonal matrix of the full cq state (labels in stored order)."""
        blocks = [p * s for p, s in zip(self.weights, self.states)]
        n = blocks[0].shape[0]
        out = np.zeros((n * len(blocks), n * len(blocks)), dtype=complex)
        for i, b in enumerate(blocks):
            out[i * n:(i + 1) * n, i * n:(i + 1) * n] = b
        return out


def _mat(x) -> np.ndarray:
    if isinstance(x, DensityMatrix):
        return x.matrix
    return np.asarray(x, dtype=complex)


def _dims(x) -> tuple[int, ...]:
    if isinstance(x, DensityMatrix):
        return x.dims
    return (np.asarray(x).shape[0],)


def herm_eig(h, tol_herm: float = TOL_HERM) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.

    Raises :class:`ValidationError` if ``h`` is not Hermitian within ``tol_herm``
    (scaled by the largest entry for matrices of large norm).
    """
    m = _mat(h)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {m.shape}")
    scale = max(1.0, float(np.max(np.abs(m), initial=0.0)))
    if np.max(np.abs(m - m.conj().T), initial=0.0) > tol_herm * scale:
        raise ValidationError("matrix is not Hermitian")
    w, v = np.linalg.eigh(0.5 * (m + m.conj().T))
    return w, v


def _clamped_spectrum(rho, tol_psd: float = TOL_PSD):
    w, v = herm_eig(rho)
    if w.size and w[0] < -tol_psd:
        raise ValidationError(f"negative eigenvalue {w[0]:.3e} below -{tol_psd}")
    return np.clip(w, 0.0, None), v


def support_cut(w: np.ndarray) -> float:
    """Eigenvalues at or below this are round-off and count as outside the support.

    Relative to the largest eigenvalue: an absolute cut would discard genuine
    small eigenvalues of tensor powers (0.003**4 is already ~1e-10).
    """
    if w.size == 0:
        return 0.0
    return 64.0 * w.size * np.finfo(float).eps * max(float(np.max(w)), 0.0)


def spectral_power(w: np.ndarray, s: float) -> np.ndarray:
    """Elementwise ``w**s`` with ``0**s == 0`` for every ``s`` (including 0)."""
    out = np.zeros_like(w, dtype=float)
    pos = w > 0
    out[pos] = w[pos] ** s
    return out


def mat_power(rho, s: float, tol_psd: float = TOL_PSD) -> np.ndarray:
    """``rho**s`` for ``s`` in [0, 1]; ``rho**0`` is the support projector."""
    if not 0.0 <= s <= 1.0:
        raise ValidationError(f"power must lie in [0, 1], got {s}")
    w, v = _clamped_spectrum(rho, tol_psd)
    w = np.where(w <= support_cut(w), 0.0, w)
    return (v * spectral_power(w, s)) @ v.conj().T


def tensor_product(a, b, max_dim: int = MAX_DIM) -> np.ndarray:
    a, b = _mat(a), _mat(b)
    if a.shape[0] * b.shape[0] > max_dim or a.shape[1] * b.shape[1] > max_dim:
        raise CapacityError(f"tensor product of order {a.shape[0] * b.shape[0]} exceeds cap {max_dim}")
    return np.kron(a, b)


def kron_all(factors: Sequence, max_dim: int = MAX_DIM) -> np.ndarray:
    return reduce(lambda x, y: tensor_product(x, y, max_dim), factors)


def tensor_power(rho, k: int, max_dim: int = MAX_DIM):
    """``rho`` tensored with itself ``k`` times; keeps the DensityMatrix type if given one."""
    if k < 1:
        raise ValidationError(f"tensor power needs k >= 1, got {k}")
    m = _mat(rho)
    if m.shape[0] ** k > max_dim:
        raise CapacityError(f"order {m.shape[0]}**{k} exceeds cap {max_dim}")
    out = kron_all([m] * k, max_dim)
    if isinstance(rho, DensityMatrix):
        return DensityMatrix(out, rho.dims * k, tol_tr=max(TOL_TR, 1e-12 * k * out.shape[0]))
    return out


def partial_trace(rho, keep: Iterable[int], dims: Sequence[int] | None = None):
    """Trace out every subsystem not listed in ``keep``.

    The result keeps the retained subsystems in their original order. An empty
    ``keep`` returns the 1x1 matrix ``[[Tr rho]]``.
    """
    m = _mat(rho)
    dims = tuple(dims) if dims is not None else _dims(rho)
    if int(np.prod(dims)) != m.shape[0]:
        raise ValidationError(f"dims {dims} do not match order {m.shape[0]}")
    keep = sorted(set(keep))
    if any(i < 0 or i >= len(dims) for i in keep):
        raise ValidationError(f"keep {keep} out of range for {len(dims)} subsystems")
    n = len(dims)
    t = m.reshape(dims + dims)
    traced = [i for i in range(n) if i not in keep]
    # trace from the highest index down so earlier axis numbers stay valid
    for count, i in enumerate(sorted(traced, reverse=True)):
        cur = n - count
        t = np.trace(t, axis1=i, axis2=i + cur)
    kd = tuple(dims[i] for i in keep)
    d = int(np.prod(kd)) if kd else 1
    out = t.reshape(d, d)
    if isinstance(rho, DensityMatrix):
        return DensityMatrix(out, kd if kd else (1,))
    return out


def _entropy_of_spectrum(w: np.ndarray) -> float:
    w = np.clip(w, 0.0, 1.0)
    w = w[w > 0]
    return float(-np.sum(w * np.log2(w)))


def vn_entropy(rho, tol_psd: float = TOL_PSD) -> float:
    w, _ = _clamped_spectrum(rho, tol_psd)
    return _entropy_of_spectrum(w)


def binary_entropy(p: float) -> float:
    if not 0.0 <= p <= 1.0:
        raise ValidationError(f"binary entropy needs p in [0, 1], got {p}")
    if p == 0.0 or p == 1.0:
        return 0.0
    return float(-p * np.log2(p) - (1 - p) * np.log2(1 - p))


def shannon_entropy(p: Iterable[float]) -> float:
    return _entropy_of_spectrum(np.asarray(list(p), dtype=float))


def cond_entropy_cq(e: CqEnsemble) -> float:
    """H(C|Q) = H(CQ) - H(Q), using the block-diagonal structure of the joint state."""
    h_joint = shannon_entropy(e.weights) + sum(
        p * vn_entropy(s) for p, s in zip(e.weights, e.states) if p > 0
    )
    return h_joint - vn_entropy(e.average())


def cond_entropy_cq_dense(e: CqEnsemble) -> float:
    """Same quantity computed from the explicit block-diagonal joint matrix."""
    return vn_entropy(e.joint()) - vn_entropy(e.average())


def random_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_density(n: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Random mixed state from the Hilbert-Schmidt (Ginibre) ensemble."""
    rank = n if rank is None else rank
    g = rng.standard_normal((n, rank)) + 1j * rng.standard_normal((n, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def ket(*amps) -> np.ndarray:
    v = np.asarray(amps, dtype=complex)
    return v / np.linalg.norm(v)


def proj(v) -> np.ndarray:
    v = np.asarray(v, dtype=complex).reshape(-1)
    return np.outer(v, v.conj())
