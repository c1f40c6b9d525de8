import numpy as np
import pytest

from chernoffqkd.protocol import AttackModel
from chernoffqkd.qmath import random_density

ACCEPTANCE_LINES: list[str] = []


def record(criterion: int, name: str, ok: bool, detail: str = "") -> None:
    line = f"criterion {criterion:2d} {'PASS' if ok else 'FAIL'}  {name}" + (f"  ({detail})" if detail else "")
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def random_attack(rng, d_e=2, eps=None, tied_cross=False) -> AttackModel:
    """Attack with random Eve states; ``tied_cross`` forces sigma_01 = sigma_10."""
    sig = {k: random_density(d_e, rng) for k in ("00", "01", "10", "11")}
    if tied_cross:
        sig["10"] = sig["01"]
    if eps is None:
        eps = float(rng.uniform(0.01, 0.49))
    return AttackModel.from_eve_states(eps, sig)


def decoupled_attack(eps: float, d_e: int = 2) -> AttackModel:
    """Eve holds the same state for every outcome pair, so she learns nothing."""
    s = np.eye(d_e) / d_e
    return AttackModel.from_eve_states(eps, {k: s for k in ("00", "01", "10", "11")})
