"""States and classical simulation of the repetition-code block procedure.

Per-round side information lives on ``E (x) T``: Eve's register followed by the
public symmetrization bit. A block of ``k`` rounds is ordered round by round,
``(E1 T1) (E2 T2) ...``, and the classical bit ``C`` is always the leftmost
factor of a joint cq state.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .behavior import Behavior
from .qmath import (
    MAX_DIM,
    CapacityError,
    CqEnsemble,
    DensityMatrix,
    ValidationError,
    _mat,
    kron_all,
)

KEYS = ("00", "01", "10", "11")
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
ATTACK_FORMAT = "chernoffqkd.attack/1"
STATE_FORMAT = "chernoffqkd.state/1"


def _flip(key: str) -> str:
    return "".join("1" if c == "0" else "0" for c in key)


def symmetrize(sigma: Mapping[str, object]) -> dict[str, np.ndarray]:
    """Attach the symmetrization bit: rho_ab = sigma_ab/2 (x) |0><0| + sigma_(~a~b)/2 (x) |1><1|."""
    mats = {k: _mat(sigma[k]) for k in KEYS}
    shape = mats["00"].shape
    if any(m.shape != shape for m in mats.values()):
        raise ValidationError("conditional states must share one dimension")
    p0 = np.diag([1.0, 0.0]).astype(complex)
    p1 = np.diag([0.0, 1.0]).astype(complex)
    return {k: 0.5 * np.kron(mats[k], p0) + 0.5 * np.kron(mats[_flip(k)], p1) for k in KEYS}


def qber(b: Behavior) -> float:
    """Probability that the symmetrized key outputs (x = y = 0) differ."""
    return b.prob(0, 1, 0, 0) + b.prob(1, 0, 0, 0)


@dataclass(frozen=True)
class AttackModel:
    """Eve's four symmetrized single-round states rho_ET|ab and the QBER.

    ``d_e`` is Eve's register dimension; every state has order ``2 * d_e``.
    """

    eps: float
    states: Mapping[str, np.ndarray]
    d_e: int
    origin: Behavior | None = field(default=None, compare=False)
    tol: float = field(default=1e-9, compare=False, repr=False)

    def __post_init__(self):
        if not 0.0 <= self.eps <= 0.5:
            raise ValidationError(f"QBER must lie in [0, 1/2], got {self.eps}")
        states = {}
        for k in KEYS:
            states[k] = DensityMatrix(self.states[k], (self.d_e, 2), tol_tr=1e-8, tol_psd=1e-8).matrix
        d = self.d_e
        for k in KEYS:
            m = states[k]
            if np.max(np.abs(m.reshape(d, 2, d, 2)[:, 0, :, 1])) > 1e-8:
                raise ValidationError(f"state {k} is not block-diagonal in the T register")
            t1 = m.reshape(d, 2, d, 2)[:, 1, :, 1]
            t0_flip = states[_flip(k)].reshape(d, 2, d, 2)[:, 0, :, 0] if _flip(k) in states else None
            if t0_flip is not None and np.max(np.abs(t1 - t0_flip)) > 1e-8:
                raise ValidationError(f"states {k} and {_flip(k)} are not related by the T flip")
        if self.origin is not None and abs(qber(self.origin) - self.eps) > 1e-9:
            raise ValidationError("eps disagrees with the origin behavior")
        object.__setattr__(self, "states", states)

    @classmethod
    def from_eve_states(cls, eps: float, sigma: Mapping[str, object], origin=None) -> "AttackModel":
        rho = symmetrize(sigma)
        return cls(eps, rho, rho["00"].shape[0] // 2, origin)

    @property
    def d_et(self) -> int:
        return 2 * self.d_e

    def rho(self, a: int, b: int) -> np.ndarray:
        return self.states[f"{a}{b}"]

    def block_state(self, alice: Sequence[int], bob: Sequence[int], max_dim: int = MAX_DIM) -> np.ndarray:
        """rho_ET|a1b1 (x) ... (x) rho_ET|akbk for Alice/Bob strings."""
        _check_capacity(self.d_et, len(alice), max_dim)
        return kron_all([self.rho(a, b) for a, b in zip(alice, bob)], max_dim)

    def with_eps(self, eps: float) -> "AttackModel":
        return AttackModel(eps, self.states, self.d_e)


def _check_capacity(d: int, k: int, max_dim: int):
    if k < 1:
        raise ValidationError(f"block size must be >= 1, got {k}")
    if d**k > max_dim:
        raise CapacityError(f"block dimension {d}**{k} exceeds cap {max_dim}")


@dataclass(frozen=True)
class BlockState:
    k: int
    message: tuple[int, ...] | str
    ensemble: CqEnsemble


def _bits(m, k: int) -> tuple[int, ...]:
    m = tuple(int(b) for b in m)
    if len(m) != k or any(b not in (0, 1) for b in m):
        raise ValidationError(f"message must be a bit string of length {k}, got {m}")
    return m


def block_tilde(a: AttackModel, m: Sequence[int], k: int, max_dim: int = MAX_DIM) -> BlockState:
    """Accepted block restricted to C = C': 1/2 |0><0| (x) rho_mm + 1/2 |1><1| (x) rho_(~m~m)."""
    m = _bits(m, k)
    mb = tuple(1 - b for b in m)
    r0 = a.block_state(m, m, max_dim)
    r1 = a.block_state(mb, mb, max_dim)
    ens = CqEnsemble((0, 1), (0.5, 0.5), (r0, r1), (a.d_e, 2) * k)
    return BlockState(k, m, ens)


def block_bar(a: AttackModel, k: int, max_dim: int = MAX_DIM) -> BlockState:
    """1/2 |0><0| (x) rho_00^(x)k + 1/2 |1><1| (x) rho_11^(x)k."""
    zeros, ones = (0,) * k, (1,) * k
    r0 = a.block_state(zeros, zeros, max_dim)
    r1 = a.block_state(ones, ones, max_dim)
    return BlockState(k, "bar", CqEnsemble((0, 1), (0.5, 0.5), (r0, r1), (a.d_e, 2) * k))


def flip_unitary(m: Sequence[int], d_e: int, max_dim: int = MAX_DIM) -> np.ndarray:
    """Product over rounds of (id_E (x) X)^m_i; maps rho_mm to rho_00^(x)k."""
    if d_e < 1:
        raise ValidationError("d_e must be >= 1")
    m = tuple(int(b) for b in m)
    _check_capacity(2 * d_e, len(m), max_dim)
    ux = np.kron(np.eye(d_e), PAULI_X)
    one = np.eye(2 * d_e, dtype=complex)
    return kron_all([ux if b else one for b in m], max_dim)


def _cc_weights(eps: float, k: int) -> tuple[float, float]:
    """(weight of each C = C' branch, weight of each C != C' branch) given acceptance."""
    if eps == 0.0:
        return 0.5, 0.0
    r = eps / (1.0 - eps)
    rk = r**k
    z = 1.0 + rk
    return 0.5 / z, 0.5 * rk / z


def accepted_block_ensemble(a: AttackModel, m: Sequence[int], k: int, max_dim: int = MAX_DIM) -> CqEnsemble:
    """Eve's states for the four (C, C') values given M = m and D = 1.

    Labels encode ``2*C + C'``. Alice's string is m xor (C,...,C) and Bob's is
    m xor (C',...,C').
    """
    m = _bits(m, k)
    same, diff = _cc_weights(a.eps, k)
    labels, weights, states = [], [], []
    for c, cp in itertools.product((0, 1), repeat=2):
        alice = tuple(b ^ c for b in m)
        bob = tuple(b ^ cp for b in m)
        labels.append(2 * c + cp)
        weights.append(same if c == cp else diff)
        states.append(a.block_state(alice, bob, max_dim))
    return CqEnsemble(tuple(labels), tuple(weights), tuple(states), (a.d_e, 2) * k)


def marginal_c(e: CqEnsemble) -> CqEnsemble:
    """Sum out C' from an ensemble labelled 2*C + C'."""
    out = []
    for c in (0, 1):
        pairs = [(w, s) for lab, w, s in zip(e.labels, e.weights, e.states) if lab // 2 == c]
        w = sum(p for p, _ in pairs)
        s = sum(p * st for p, st in pairs) / w if w > 0 else pairs[0][1]
        out.append((c, w, s))
    return CqEnsemble.from_entries(out, e.dims)


@dataclass(frozen=True)
class SimStats:
    blocks_run: int
    blocks_accepted: int
    accept_rate: float
    mismatch_rate_given_accept: float
    seed: int
    mismatches: int = 0


def simulate_blocks(eps: float, k: int, n_blocks: int, variant: str = "standard",
                    seed: int = 0, chunk: int = 1 << 18) -> SimStats:
    """Monte-Carlo run of the block accept/decode procedure on symmetrized outputs.

    Randomness comes from numpy's PCG64 seeded with ``seed``, so results are
    reproducible across platforms. ``variant="modified"`` additionally requires
    Alice's and Bob's block strings to be constant.
    """
    if not 0.0 <= eps <= 0.5:
        raise ValidationError(f"eps must lie in [0, 1/2], got {eps}")
    if k < 1 or n_blocks < 1:
        raise ValidationError("k and n_blocks must be positive")
    if variant not in ("standard", "modified"):
        raise ValidationError(f"unknown variant {variant!r}")
    rng = np.random.Generator(np.random.PCG64(seed))
    accepted = mismatched = 0
    done = 0
    while done < n_blocks:
        n = min(chunk, n_blocks - done)
        alice = rng.integers(0, 2, size=(n, k), dtype=np.uint8)
        flips = (rng.random((n, k)) < eps).astype(np.uint8)
        bob = alice ^ flips
        c = rng.integers(0, 2, size=n, dtype=np.uint8)
        msg = alice ^ c[:, None]
        decoded = bob ^ msg
        ok = np.all(decoded == decoded[:, :1], axis=1)
        if variant == "modified":
            ok &= np.all(alice == alice[:, :1], axis=1) & np.all(bob == bob[:, :1], axis=1)
        cprime = decoded[:, 0]
        accepted += int(ok.sum())
        mismatched += int((ok & (cprime != c)).sum())
        done += n
    return SimStats(
        blocks_run=n_blocks,
        blocks_accepted=accepted,
        accept_rate=accepted / n_blocks,
        mismatch_rate_given_accept=mismatched / accepted if accepted else 0.0,
        seed=seed,
        mismatches=mismatched,
    )


# ---------------------------------------------------------------- serialization

def matrix_to_pairs(m) -> list:
    m = _mat(m)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def matrix_from_pairs(rows) -> np.ndarray:
    arr = np.asarray(rows, dtype=float)
    if arr.ndim != 3 or arr.shape[2] != 2:
        raise ValidationError("matrix must be a nested list of [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def attack_to_dict(a: AttackModel) -> dict:
    return {
        "format": ATTACK_FORMAT,
        "eps": a.eps,
        "dims": [a.d_e, 2],
        "states": {k: matrix_to_pairs(a.states[k]) for k in KEYS},
    }


def attack_from_dict(doc: Mapping) -> AttackModel:
    try:
        if doc.get("format", ATTACK_FORMAT) != ATTACK_FORMAT:
            raise ValidationError(f"unsupported attack format {doc.get('format')!r}")
        d_e, d_t = (int(x) for x in doc["dims"])
        if d_t != 2:
            raise ValidationError("the T register must be a qubit")
        states = {k: matrix_from_pairs(doc["states"][k]) for k in KEYS}
        return AttackModel(float(doc["eps"]), states, d_e)
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed attack document: {exc}") from exc


def state_to_dict(rho) -> dict:
    dims = rho.dims if isinstance(rho, DensityMatrix) else (_mat(rho).shape[0],)
    return {"format": STATE_FORMAT, "dims": list(dims), "matrix": matrix_to_pairs(rho)}


def state_from_dict(doc: Mapping) -> DensityMatrix:
    try:
        if doc.get("format", STATE_FORMAT) != STATE_FORMAT:
            raise ValidationError(f"unsupported state format {doc.get('format')!r}")
        m = matrix_from_pairs(doc["matrix"])
        return DensityMatrix(m, tuple(doc.get("dims") or (m.shape[0],)))
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed state document: {exc}") from exc


def load_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot read {path}: {exc}") from exc


def save_json(doc: dict, path) -> None:
    Path(path).write_text(json.dumps(doc, indent=1) + "\n")
