import math

import numpy as np
import pytest

from padic_heat import (
    BallModel,
    GridFunction,
    ball_indicator,
    constant,
    make_initial,
    positive_bump,
    random_function,
)


def brute_convolve(u, v):
    # independent double-loop oracle for the measure-weighted convolution
    model = u.model
    S = model.S
    out = np.zeros(S, dtype=np.result_type(u.values, v.values))
    for n in range(S):
        acc = 0.0
        for m in range(S):
            acc += u.values[(n - m) % S] * v.values[m]
        out[n] = acc * float(model.p) ** (-model.M)
    return GridFunction(model, out)


def test_integral_of_constant_is_ball_measure(model_alpha):
    model, _ = model_alpha
    one = constant(model, 1.0)
    assert abs(one.integral() - float(model.p) ** model.N) < 1e-12


def test_lp_norms_direct():
    model = BallModel(2, 0, 4)
    u = random_function(model, 3)
    meas = 2.0 ** (-4)
    for gamma in (1.0, 2.0, 3.0, 4.0):
        direct = (meas * np.sum(np.abs(u.values) ** gamma)) ** (1 / gamma)
        assert abs(u.lp_norm(gamma) - direct) < 1e-13
    assert u.lp_norm(math.inf) == np.abs(u.values).max()
    with pytest.raises(ValueError):
        u.lp_norm(0.5)


def test_norm_inequalities():
    model = BallModel(3, 0, 3)
    rng = np.random.default_rng(11)
    for _ in range(20):
        u = GridFunction(model, rng.standard_normal(model.S))
        v = GridFunction(model, rng.standard_normal(model.S))
        # triangle inequality and Cauchy-Schwarz on the unit-measure ball
        assert (u + v).lp_norm(2) <= u.lp_norm(2) + v.lp_norm(2) + 1e-12
        prod = GridFunction(model, u.values * v.values)
        assert prod.lp_norm(1) <= u.lp_norm(2) * v.lp_norm(2) + 1e-12
        # norms are nondecreasing in gamma when the total measure is 1
        assert u.lp_norm(1) <= u.lp_norm(2) + 1e-12
        assert u.lp_norm(2) <= u.lp_norm(4) + 1e-12
        assert u.lp_norm(4) <= u.lp_norm(math.inf) + 1e-12


def test_convolution_matches_brute_force():
    for p, N, M in ((2, 0, 4), (3, 1, 2), (5, -1, 2)):
        model = BallModel(p, N, M)
        u = random_function(model, 5)
        v = random_function(model, 6)
        got = u.convolve(v)
        want = brute_convolve(u, v)
        assert np.max(np.abs(got.values - want.values)) < 1e-12
        # commutative
        flipped = v.convolve(u)
        assert np.max(np.abs(got.values - flipped.values)) < 1e-12


def test_convolution_identity_element():
    model = BallModel(2, 0, 5)
    u = random_function(model, 9)
    delta = np.zeros(model.S)
    delta[0] = float(model.p) ** model.M  # unit mass at the origin
    e = GridFunction(model, delta)
    out = u.convolve(e)
    assert np.max(np.abs(out.values - u.values)) < 1e-12


def test_convolution_complex_values():
    model = BallModel(2, 0, 3)
    rng = np.random.default_rng(2)
    u = GridFunction(model, rng.standard_normal(model.S) + 1j * rng.standard_normal(model.S))
    v = random_function(model, 3)
    got = u.convolve(v)
    want = brute_convolve(u, v)
    assert np.max(np.abs(got.values - want.values)) < 1e-12


def test_refine_coarsen_round_trip():
    model = BallModel(3, 1, 2)
    u = random_function(model, 8)
    for levels in (1, 2):
        fine = u.refine(levels)
        assert fine.model.M == model.M + levels
        # refinement reproduces values on sub-cosets and keeps the integral
        assert abs(fine.integral() - u.integral()) < 1e-12
        for gamma in (1.0, 2.0, math.inf):
            assert abs(fine.lp_norm(gamma) - u.lp_norm(gamma)) < 1e-12
        back = fine.coarsen(levels)
        assert back.model == model
        assert np.max(np.abs(back.values - u.values)) < 1e-13


def test_coarsen_preserves_integral():
    model = BallModel(2, 0, 6)
    u = random_function(model, 4)
    for levels in (1, 3, 6):
        down = u.coarsen(levels)
        assert abs(down.integral() - u.integral()) < 1e-12
    with pytest.raises(ValueError):
        u.coarsen(7)
    with pytest.raises(ValueError):
        u.coarsen(-1)
    with pytest.raises(ValueError):
        u.refine(-1)


def test_ball_indicator_measure_pin():
    model = BallModel(2, 1, 4)
    # indicator of a radius p**r sub-ball integrates to p**r
    for r in (-4, -2, 0, 1):
        ind = ball_indicator(model, center=3, radius_exp=r)
        assert abs(ind.integral() - 2.0 ** r) < 1e-12
        assert set(np.unique(ind.values)) <= {0.0, 1.0}
    full = ball_indicator(model, radius_exp=model.N)
    assert np.all(full.values == 1.0)
    with pytest.raises(ValueError):
        ball_indicator(model, radius_exp=model.N + 1)
    with pytest.raises(ValueError):
        ball_indicator(model, radius_exp=-model.M - 1)


def test_ball_indicator_membership():
    model = BallModel(2, 0, 5)
    ind = ball_indicator(model, center=4, radius_exp=-2)
    q = 2 ** 2
    for n in range(model.S):
        assert ind.values[n] == (1.0 if (n - 4) % q == 0 else 0.0)


def test_make_initial_kinds():
    model = BallModel(2, 0, 4)
    c = make_initial(model, {"kind": "constant", "value": 2.5})
    assert np.all(c.values == 2.5)
    ind = make_initial(model, {"kind": "indicator", "center": 1, "radius_exp": -1})
    assert np.max(np.abs(ind.values - ball_indicator(model, 1, -1).values)) == 0.0
    r1 = make_initial(model, {"kind": "random", "seed": 42})
    r2 = make_initial(model, {"kind": "random", "seed": 42})
    assert np.array_equal(r1.values, r2.values)
    b = make_initial(model, {"kind": "bump", "center": 0, "radius_exp": 0})
    assert np.max(np.abs(b.values - positive_bump(model, 0, 0).values)) == 0.0
    assert b.values.min() >= 1.0
    with pytest.raises(ValueError):
        make_initial(model, {"value": 1.0})
    with pytest.raises(ValueError):
        make_initial(model, {"kind": "sine"})
    with pytest.raises(ValueError):
        make_initial(model, {"kind": "constant", "amplitude": 2.0})


def test_csv_round_trip_exact(tmp_path):
    model = BallModel(3, 0, 3)
    u = random_function(model, 17)
    path = tmp_path / "u.csv"
    u.to_csv(path)
    back = GridFunction.from_csv(path, model)
    assert np.array_equal(back.values, u.values)
    header = path.read_text().splitlines()[0]
    assert header == "index,valuation,value"


def test_csv_round_trip_complex(tmp_path):
    model = BallModel(2, 0, 3)
    rng = np.random.default_rng(7)
    u = GridFunction(model, rng.standard_normal(model.S) + 1j * rng.standard_normal(model.S))
    path = tmp_path / "u.csv"
    u.to_csv(path)
    back = GridFunction.from_csv(path, model)
    assert np.array_equal(back.values, u.values)


def test_csv_header_validation(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,b,c\n0,inf,1.0\n")
    with pytest.raises(ValueError):
        GridFunction.from_csv(path, BallModel(2, 0, 0))


def test_json_round_trip(tmp_path):
    model = BallModel(5, -1, 3)
    u = random_function(model, 23)
    path = tmp_path / "u.json"
    u.to_json(path)
    back = GridFunction.from_json(path)
    assert back.model == model
    assert np.array_equal(back.values, u.values)


def test_algebra_and_errors():
    model = BallModel(2, 0, 3)
    u = random_function(model, 1)
    v = random_function(model, 2)
    w = 2.0 * u + v - u * 3.0
    assert np.max(np.abs(w.values - (2 * u.values + v.values - 3 * u.values))) < 1e-15
    assert np.array_equal((-u).values, -u.values)
    other = random_function(BallModel(2, 0, 2), 1)
    with pytest.raises(ValueError):
        u + other
    with pytest.raises(ValueError):
        GridFunction(model, np.zeros(model.S + 1))
    with pytest.raises(ValueError):
        u.values[0] = 99.0  # stored array is read-only
