import math

import numpy as np
import pytest

from padic_heat import BallModel, Constants, coefficient_ap, lambda_value
from padic_heat.ball_model import freq_abs_table, point_abs_table, valuation_table


def brute_valuation(n, p, cap):
    # count base-p trailing zeros directly
    if n == 0:
        return cap
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def test_valuation_against_digit_count():
    for p in (2, 3, 5):
        model = BallModel(p, 1, 3)
        S = model.S
        for n in range(S):
            assert model.valuation(n) == brute_valuation(n, p, model.N + model.M)


def test_point_abs_values():
    model = BallModel(2, 1, 3)
    # x = n * p^-N; |x| = p^(N - v(n)), with 0 mapped to the 0.0 sentinel
    assert model.point_abs(0) == 0.0
    assert model.point_abs(1) == 2.0
    assert model.point_abs(2) == 1.0
    assert model.point_abs(4) == 0.5
    assert model.point_abs(8) == 0.25
    assert model.point_abs(3) == 2.0


def test_freq_abs_values():
    model = BallModel(2, 1, 3)
    assert model.freq_abs(0) == 0.0
    assert model.freq_abs(1) == 8.0
    assert model.freq_abs(2) == 4.0
    assert model.freq_abs(8) == 1.0


def test_tables_match_scalar_accessors(model_alpha):
    model, _ = model_alpha
    vt = valuation_table(model)
    pt = point_abs_table(model)
    ft = freq_abs_table(model)
    for n in range(model.S):
        assert vt[n] == model.valuation(n)
        assert pt[n] == model.point_abs(n)
        assert ft[n] == model.freq_abs(n)
    with pytest.raises(ValueError):
        vt[0] = 7  # read-only


def test_character_is_group_homomorphism():
    model = BallModel(3, 0, 3)
    S = model.S
    rng = np.random.default_rng(0)
    for _ in range(200):
        n1, n2, k = rng.integers(0, S, size=3)
        lhs = model.character(int((n1 + n2) % S), int(k))
        rhs = model.character(int(n1), int(k)) * model.character(int(n2), int(k))
        assert abs(lhs - rhs) < 1e-14


def test_character_orthogonality():
    # sum_n chi(n k) = S * [k == 0], to rounding
    for p, levels in ((2, 6), (3, 4)):
        model = BallModel(p, 0, levels)
        S = model.S
        n = np.arange(S)
        for k in range(S):
            total = sum(model.character(int(j), k) for j in n)
            expected = S if k == 0 else 0.0
            assert abs(total - expected) < 1e-11 * S


def test_ultrametric_inequality_exhaustive():
    model = BallModel(2, 0, 5)
    S = model.S
    pt = point_abs_table(model)
    for a in range(S):
        for b in range(S):
            assert pt[(a + b) % S] <= max(pt[a], pt[b]) + 1e-15


def test_lambda_closed_forms_agree():
    # (p-1)/(p^(alpha+1)-1) * p^(alpha(1-N))  ==  (1-1/p)/(1-p^(-alpha-1)) * p^(-alpha N)
    for p in (2, 3, 5, 7):
        for N in (-2, -1, 0, 1, 3):
            for alpha in (0.5, 1.0, 1.5, 2.0, 3.7):
                a = (p - 1) / (p ** (alpha + 1) - 1) * float(p) ** (alpha * (1 - N))
                b = (1 - 1 / p) / (1 - float(p) ** (-alpha - 1)) * float(p) ** (-alpha * N)
                lam = lambda_value(p, alpha, N)
                assert abs(lam - a) <= 1e-13 * abs(a)
                assert abs(lam - b) <= 1e-13 * abs(b)


def test_lambda_pinned_value():
    assert abs(lambda_value(2, 1.0, 0) - 2.0 / 3.0) < 1e-15


def test_coefficient_ap_sign_and_value():
    # (1 - p^alpha) / (1 - p^(-alpha-1)) is negative for alpha > 0
    for p in (2, 3, 5):
        for alpha in (0.5, 1.0, 2.0):
            a = coefficient_ap(p, alpha)
            assert a < 0
    assert abs(coefficient_ap(2, 1.0) - (1 - 2.0) / (1 - 0.25)) < 1e-15


def test_constants_container():
    c = Constants(2, 1.0, 0)
    assert abs(c.lam - 2.0 / 3.0) < 1e-15
    assert c.a_p == coefficient_ap(2, 1.0)


def test_validation_errors():
    with pytest.raises(ValueError):
        BallModel(4, 0, 3)  # not prime
    with pytest.raises(ValueError):
        BallModel(2, 0, -1)  # N + M < 0
    with pytest.raises(ValueError):
        BallModel(2, 10, 30)  # exceeds order cap
    with pytest.raises(ValueError):
        lambda_value(2, 0.0, 0)
    with pytest.raises(ValueError):
        lambda_value(2, -1.0, 0)
    with pytest.raises(ValueError):
        coefficient_ap(2, 0.0)
    model = BallModel(2, 0, 3)
    with pytest.raises(IndexError):
        model.valuation(model.S)
    with pytest.raises(IndexError):
        model.valuation(-1)


def test_degenerate_single_point_model():
    model = BallModel(3, 2, -2)
    assert model.S == 1
    assert model.valuation(0) == 0
    assert model.point_abs(0) == 0.0


def test_model_is_hashable_and_frozen():
    m1 = BallModel(2, 0, 3)
    m2 = BallModel(2, 0, 3)
    assert m1 == m2
    assert hash(m1) == hash(m2)
    with pytest.raises(Exception):
        m1.p = 3
