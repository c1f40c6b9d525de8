"""Binary-outcome Bell behaviours Pr(ab|xy)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .qmath import ValidationError

TOL_BEHAVIOR = 1e-9


@dataclass(frozen=True)
class Behavior:
    """Table ``p[x, y, a, b] = Pr(ab|xy)`` after symmetrization.

    Construction checks normalisation, no-signalling and the symmetrized form
    ``Pr(ab|xy) = Pr(not a, not b|xy)``.
    """

    p: np.ndarray
    tol: float = TOL_BEHAVIOR

    def __post_init__(self):
        p = np.array(self.p, dtype=float)
        if p.ndim != 4 or p.shape[2:] != (2, 2):
            raise ValidationError(f"behavior table must have shape (m_a, m_b, 2, 2), got {p.shape}")
        if np.any(p < -self.tol) or np.any(p > 1 + self.tol):
            raise ValidationError("behavior probabilities must lie in [0, 1]")
        if np.max(np.abs(p.sum(axis=(2, 3)) - 1.0)) > self.tol:
            raise ValidationError("each (x, y) distribution must sum to 1")
        pa = p.sum(axis=3)  # [x, y, a]
        pb = p.sum(axis=2)  # [x, y, b]
        if np.max(np.abs(pa - pa[:, :1, :])) > self.tol or np.max(np.abs(pb - pb[:1, :, :])) > self.tol:
            raise ValidationError("behavior violates no-signalling")
        if np.max(np.abs(p - p[:, :, ::-1, ::-1])) > self.tol:
            raise ValidationError(
                "behavior is not symmetrized; apply symmetrize_behavior() first"
            )
        p = np.clip(p, 0.0, 1.0)
        p.setflags(write=False)
        object.__setattr__(self, "p", p)

    @property
    def m_a(self) -> int:
        return self.p.shape[0]

    @property
    def m_b(self) -> int:
        return self.p.shape[1]

    def prob(self, a: int, b: int, x: int, y: int) -> float:
        return float(self.p[x, y, a, b])

    def marginal_a(self, a: int, x: int) -> float:
        return float(self.p[x, 0, a, :].sum())

    def marginal_b(self, b: int, y: int) -> float:
        return float(self.p[0, y, :, b].sum())


def symmetrize_behavior(p) -> np.ndarray:
    """Average a raw table with its output-flipped copy (the effect of the public bit T)."""
    p = np.asarray(p, dtype=float)
    return 0.5 * (p + p[:, :, ::-1, ::-1])
