import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import decoupled_attack, random_attack
from chernoffqkd.divergence import fidelity, nqcd, trace_distance
from chernoffqkd.protocol import block_tilde
from chernoffqkd.qmath import ValidationError, binary_entropy, cond_entropy_cq, ket, proj
from chernoffqkd.security import (
    DivergenceError,
    beta,
    bob_entropy,
    continuity_lower_bound,
    delta_k,
    evaluate_conditions,
    eve_entropy,
    eve_entropy_dense,
    eve_guess_bound,
    exact_dw_margin,
    g_of_k,
    guess_bound_beats_bob,
    helstrom_error_c,
    verdict_from_values,
)


@pytest.mark.parametrize("eps,k", [(0.1, 1), (0.1, 3), (0.25, 2), (0.4, 5)])
def test_delta_k_closed_form(eps, k):
    assert delta_k(eps, k) == pytest.approx(eps**k / (eps**k + (1 - eps) ** k), rel=1e-14)


def test_delta_k_edges():
    assert delta_k(0.0, 3) == 0.0
    assert delta_k(0.5, 7) == pytest.approx(0.5)
    assert 0.0 < delta_k(0.49, 5000) < 1e-10  # no overflow in the ratio form
    with pytest.raises(ValidationError):
        delta_k(0.6, 1)
    with pytest.raises(ValidationError):
        delta_k(0.1, 0)


def test_beta_and_bob_entropy():
    assert beta(0.2) == pytest.approx(0.25)
    assert bob_entropy(0.1, 2) == pytest.approx(binary_entropy(0.01 / 0.82))


@pytest.mark.parametrize("k", [1, 2, 3])
def test_decoupled_margin_is_one_minus_h(k):
    a = decoupled_attack(0.1)
    assert eve_entropy(a, k) == pytest.approx(1.0, abs=1e-12)
    assert exact_dw_margin(a, k) == pytest.approx(1 - binary_entropy(delta_k(0.1, k)), abs=1e-12)


def test_block_entropy_matches_dense(rng):
    for d_e in (1, 2, 3):
        a = random_attack(rng, d_e=d_e)
        for k in (1, 2, 3):
            assert eve_entropy(a, k) == pytest.approx(eve_entropy_dense(a, k), abs=1e-10)


def test_zero_qber_margin_is_one():
    a = decoupled_attack(0.0)
    for k in (1, 2, 4):
        assert exact_dw_margin(a, k) == pytest.approx(1.0, abs=1e-12)


def test_continuity_bound_holds(rng):
    for _ in range(10):
        a = random_attack(rng)
        for k in (1, 2, 3):
            h_tilde = cond_entropy_cq(block_tilde(a, (0,) * k, k).ensemble)
            assert eve_entropy(a, k) >= continuity_lower_bound(h_tilde, a.eps, k) - 1e-10


def test_continuity_bound_rejects():
    with pytest.raises(ValidationError):
        continuity_lower_bound(1.5, 0.1, 1)


@settings(max_examples=200, deadline=None)
@given(st.floats(0.0, 1.0), st.floats(0.001, 0.499), st.integers(1, 12))
def test_guess_bound_equivalence(q, eps, k):
    lhs, rhs = guess_bound_beats_bob(q, eps, k)
    # equality Q = beta sits on the rounding boundary; avoid it
    if abs(q - beta(eps)) > 1e-9:
        assert lhs == rhs


def test_eve_guess_bound_values():
    assert eve_guess_bound(1.0, 0.1, 3) == pytest.approx(0.5)
    assert eve_guess_bound(0.0, 0.1, 1) == pytest.approx(0.5 * 0.1)
    with pytest.raises(ValidationError):
        eve_guess_bound(1.2, 0.1, 1)


def test_g_of_k_identity(rng):
    a = random_attack(rng)
    r0, r1 = a.rho(0, 0), a.rho(1, 1)
    q = nqcd(r0, r1).value
    for k in (1, 2, 3):
        rk0, rk1 = r0, r1
        for _ in range(k - 1):
            rk0, rk1 = np.kron(rk0, r0), np.kron(rk1, r1)
        dk = 0.5 * np.abs(np.linalg.eigvalsh(rk0 - rk1)).sum()
        g = g_of_k(r0, r1, k)
        assert 1 - dk == pytest.approx(2 * math.exp(k * g) * q**k, abs=1e-12)


def test_g_of_k_orthogonal_raises():
    with pytest.raises(DivergenceError):
        g_of_k(proj(ket(1, 0)), proj(ket(0, 1)), 2)


def test_helstrom_error_beats_bob_when_insecure(rng):
    hits = 0
    for _ in range(20):
        a = random_attack(rng, tied_cross=True)
        q = nqcd(a.rho(0, 0), a.rho(1, 1)).value
        b = float(rng.uniform(q, 1.0))  # any beta >= Q
        eps = b / (1 + b)
        a = a.with_eps(eps)
        for k in (1, 2, 3):
            err = helstrom_error_c(a, k)
            assert err <= delta_k(eps, k) + 1e-12
            assert err <= eve_guess_bound(q, eps, k) + 1e-12
            hits += 1
    assert hits == 60


def test_helstrom_error_decoupled_is_half():
    assert helstrom_error_c(decoupled_attack(0.2), 2) == pytest.approx(0.5)


def test_verdict_flags_insecure_case(rng):
    a = random_attack(rng, tied_cross=True, eps=0.45)  # beta = 0.818
    v = evaluate_conditions(a)
    if v.q_value <= v.beta:
        assert v.thm2_applicable and v.thm2_insecure and not v.thm1_sufficient
    assert v.check() == []


def test_verdict_from_values_logic():
    v = verdict_from_values(0.5, 0.7, 0.6, 0.2, thm2_applicable=True)
    assert v.beta == pytest.approx(0.25)
    assert v.thm1_sufficient and not v.thm2_insecure
    assert v.f_sufficient  # 0.49 > 0.25
    assert v.d_sufficient  # 0.4 > 0.25
    v = verdict_from_values(0.2, 0.45, 0.8, 0.2, thm2_applicable=True)
    assert v.thm2_insecure and not v.f_sufficient
    assert "insecure" in v.report()
    v = verdict_from_values(0.2, 0.45, 0.8, 0.2, thm2_applicable=False)
    assert not v.thm2_insecure and "undecided" in v.report()


def test_verdict_csv():
    v = verdict_from_values(0.5, 0.7, 0.6, 0.2, thm2_applicable=True)
    lines = v.to_csv().splitlines()
    assert lines[0].startswith("eps,beta,Q,F,d")
    assert lines[1].split(",")[:3] == ["0.2", "0.25", "0.5"]


def test_verdicts_consistent_on_random_attacks(rng):
    for _ in range(30):
        a = random_attack(rng, tied_cross=bool(rng.integers(2)))
        v = evaluate_conditions(a)
        assert v.check() == []
        r0, r1 = a.rho(0, 0), a.rho(1, 1)
        assert v.f_value == pytest.approx(fidelity(r0, r1))
        assert v.d_value == pytest.approx(trace_distance(r0, r1))
