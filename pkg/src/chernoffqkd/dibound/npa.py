"""Moment-matrix relaxations over projector words.

Generators are outcome-0 projectors ``("A", x)`` and ``("B", y)`` for the two
devices plus Eve's binary projector ``("E", 0)``. Operators of different
parties commute and every generator is idempotent, which fixes a canonical
form for words. Because all data here are real, the relaxation is taken over
real symmetric moment matrices, so a word and its adjoint (reversal) share one
moment variable.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from ..behavior import Behavior
from ..protocol import qber
from ..qmath import CapacityError, ValidationError

Gen = tuple[str, int]
Word = tuple[Gen, ...]
PARTY_ORDER = {"A": 0, "B": 1, "E": 2}
MAX_LEVEL = 3


def canonical(word: Iterable[Gen]) -> Word:
    """Party-sorted word with adjacent repeats collapsed."""
    word = tuple(word)
    out: list[Gen] = []
    for party in ("A", "B", "E"):
        prev = None
        for g in word:
            if g[0] != party:
                continue
            if g != prev:
                out.append(g)
            prev = g
    return tuple(out)


def adjoint(word: Word) -> Word:
    return canonical(reversed(word))


def moment_key(word: Iterable[Gen]) -> Word:
    """Representative shared by a word and its adjoint."""
    w = canonical(word)
    wd = adjoint(w)
    return min(w, wd, key=_word_sort_key)


def _word_sort_key(w: Word):
    return (len(w), [(PARTY_ORDER[p], i) for p, i in w])


def word_str(w: Word) -> str:
    return "1" if not w else "".join(f"{p}{i}" for p, i in w)


@dataclass(frozen=True)
class Monomial:
    word: Word

    def __post_init__(self):
        object.__setattr__(self, "word", canonical(self.word))

    def __str__(self):
        return word_str(self.word)


@dataclass
class MomentProblem:
    """Moment-matrix SDP: maximise ``constant + sum objective[v] * y_v``.

    ``entry_index[i, j]`` is the variable of Gamma[i, j]; ``pinned`` fixes some
    variables to numbers (variable 0 is always the identity, pinned to 1).
    """

    basis: list[Monomial]
    entry_classes: dict[Word, int]
    entry_index: np.ndarray
    pinned: dict[int, float]
    objective: dict[int, float]
    constant: float = 0.0
    meta: dict = field(default_factory=dict)

    @property
    def size(self) -> int:
        return len(self.basis)

    @property
    def n_vars(self) -> int:
        return len(self.entry_classes)

    def gamma(self, values: np.ndarray) -> np.ndarray:
        return np.asarray(values)[self.entry_index]

    def objective_value(self, values: np.ndarray) -> float:
        return self.constant + sum(c * values[v] for v, c in self.objective.items())

    def to_text(self) -> str:
        """Sparse text export: basis, variable classes, pins and objective."""
        words = {v: w for w, v in self.entry_classes.items()}
        lines = [f"# moment problem: size {self.size}, variables {self.n_vars}"]
        lines.append(f"basis {self.size}")
        lines += [f"b {i} {m}" for i, m in enumerate(self.basis)]
        lines.append(f"variables {self.n_vars}")
        lines += [f"v {v} {word_str(words[v])}" for v in range(self.n_vars)]
        lines.append("entries")
        for i in range(self.size):
            for j in range(i, self.size):
                lines.append(f"e {i} {j} {self.entry_index[i, j]}")
        lines.append(f"pinned {len(self.pinned)}")
        lines += [f"p {v} {val:.17g}" for v, val in sorted(self.pinned.items())]
        lines.append(f"objective {len(self.objective)} {self.constant:.17g}")
        lines += [f"c {v} {coef:.17g}" for v, coef in sorted(self.objective.items())]
        return "\n".join(lines) + "\n"


def generators(m_a: int, m_b: int, eve: bool = True) -> list[Gen]:
    gens = [("A", x) for x in range(m_a)] + [("B", y) for y in range(m_b)]
    return gens + [("E", 0)] if eve else gens


def level_basis(gens: Sequence[Gen], level: int) -> list[Word]:
    """All distinct canonical words of length <= level, ordered by length."""
    if level < 1 or level > MAX_LEVEL:
        raise CapacityError(f"hierarchy level must be 1..{MAX_LEVEL}, got {level}")
    seen = {(): None}
    for n in range(1, level + 1):
        for seq in itertools.product(gens, repeat=n):
            w = canonical(seq)
            if len(w) == n:
                seen.setdefault(w, None)
    return sorted(seen, key=_word_sort_key)


def expand_product(factors: Sequence[Mapping[Word, float]]) -> dict[Word, float]:
    """Multiply linear combinations of words; returns moment-key coefficients."""
    acc: dict[Word, float] = {(): 1.0}
    for f in factors:
        nxt: dict[Word, float] = {}
        for w1, c1 in acc.items():
            for w2, c2 in f.items():
                w = canonical(w1 + w2)
                nxt[w] = nxt.get(w, 0.0) + c1 * c2
        acc = nxt
    out: dict[Word, float] = {}
    for w, c in acc.items():
        k = moment_key(w)
        out[k] = out.get(k, 0.0) + c
    return {w: c for w, c in out.items() if abs(c) > 1e-15}


def build_moment_problem(gens: Sequence[Gen], level: int, pins: Mapping[Word, float],
                         objective: Mapping[Word, float], extra: Iterable[Word] = ()) -> MomentProblem:
    """Generic moment problem over ``gens`` at ``level``.

    Objective words absent from the level-``level`` matrix are added to the
    basis as extra columns, so that ``Gamma[1, w] = <w>`` carries them.
    """
    words = level_basis(gens, level)
    present = {moment_key(u[::-1] + v) for u in words for v in words}
    for w in list(objective) + list(extra):
        if moment_key(w) not in present:
            words.append(canonical(w))
            present |= {moment_key(u[::-1] + canonical(w)) for u in words}
            present |= {moment_key(canonical(w)[::-1] + u) for u in words}
    n = len(words)
    classes: dict[Word, int] = {(): 0}
    idx = np.zeros((n, n), dtype=int)
    for i, u in enumerate(words):
        for j in range(i, n):
            key = moment_key(tuple(reversed(u)) + words[j])
            v = classes.setdefault(key, len(classes))
            idx[i, j] = idx[j, i] = v
    pinned = {0: 1.0}
    for w, val in pins.items():
        key = moment_key(w)
        if key in classes:
            if not -1e-12 <= val <= 1 + 1e-12:
                raise ValidationError(f"pinned value {val} for {word_str(key)} outside [0, 1]")
            pinned[classes[key]] = float(val)
    obj: dict[int, float] = {}
    const = 0.0
    for w, c in objective.items():
        key = moment_key(w)
        if key not in classes:
            raise ValidationError(f"objective word {word_str(key)} missing from the moment matrix")
        v = classes[key]
        if v in pinned:
            const += c * pinned[v]
        else:
            obj[v] = obj.get(v, 0.0) + c
    return MomentProblem([Monomial(w) for w in words], classes, idx, pinned, obj, const)


def behavior_pins(b: Behavior) -> dict[Word, float]:
    pins: dict[Word, float] = {}
    for x in range(b.m_a):
        pins[(("A", x),)] = b.marginal_a(0, x)
    for y in range(b.m_b):
        pins[(("B", y),)] = b.marginal_b(0, y)
    for x in range(b.m_a):
        for y in range(b.m_b):
            pins[(("A", x), ("B", y))] = b.prob(0, 0, x, y)
    return pins


def _one_minus(g: Gen) -> dict[Word, float]:
    return {(): 1.0, (g,): -1.0}


def guessing_objective(x: int = 0, y: int = 0) -> dict[Word, float]:
    """<A_x B_y E> + <(1 - A_x)(1 - B_y)(1 - E)>: Eve's guess matches equal key outputs."""
    a, b, e = ("A", x), ("B", y), ("E", 0)
    out = expand_product([{(a,): 1.0}, {(b,): 1.0}, {(e,): 1.0}])
    for w, c in expand_product([_one_minus(a), _one_minus(b), _one_minus(e)]).items():
        out[w] = out.get(w, 0.0) + c
    return {w: c for w, c in out.items() if abs(c) > 1e-15}


def build_guessing_sdp(b: Behavior, level: int = 2) -> MomentProblem:
    """Relaxation bounding Pr(Eve's bit = A_0 = B_0) over quantum models of ``b``."""
    if level < 1 or level > MAX_LEVEL:
        raise CapacityError(f"hierarchy level must be 1..{MAX_LEVEL}, got {level}")
    gens = generators(b.m_a, b.m_b)
    # the triple word cancels in the objective but its column tightens low levels
    triple = (("A", 0), ("B", 0), ("E", 0))
    p = build_moment_problem(gens, level, behavior_pins(b), guessing_objective(), extra=[triple])
    p.meta.update(level=level, eps=qber(b), m_a=b.m_a, m_b=b.m_b)
    return p


def lmi_data(p: MomentProblem):
    """Constant matrix and sparse coefficient matrices for the free variables.

    Returns ``(g0, rows, free, c)`` with Gamma(y) = g0 + sum_k y_k G_k, where
    row k of ``rows`` is vec(G_k) and ``free[k]`` the variable index.
    """
    n = p.size
    free = [v for v in range(p.n_vars) if v not in p.pinned]
    pos = {v: k for k, v in enumerate(free)}
    g0 = np.zeros((n, n))
    flat = p.entry_index.ravel()
    r, col = [], []
    for e, v in enumerate(flat):
        if v in p.pinned:
            g0.flat[e] = p.pinned[v]
        else:
            r.append(pos[v])
            col.append(e)
    rows = sp.csr_matrix((np.ones(len(r)), (r, col)), shape=(len(free), n * n))
    c = np.array([p.objective.get(v, 0.0) for v in free])
    return g0, rows, free, c
