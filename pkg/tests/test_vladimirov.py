import numpy as np
import pytest

import padic_heat.vladimirov as vlad
from padic_heat import (
    BallModel,
    ConsistencyError,
    GridFunction,
    RieszDistribution,
    apply_global_restriction,
    apply_hypersingular,
    apply_spectral,
    build_matrix,
    constant,
    convolve_riesz,
    domain_check,
    lambda_value,
    multiplier,
    random_function,
    riesz_pairing,
    spectrum_multiset,
    symbol_quadrature,
)
from tests.conftest import rel_linf


def test_symbol_quadrature_pins():
    # p = 2, alpha = 1, N = 0: lambda = 2/3, so the symbol alone is
    # |xi| - 2/3 at each nonzero frequency
    model = BallModel(2, 0, 3)
    assert symbol_quadrature(model, 1.0, 0) == 0.0
    k_abs1 = 2 ** 2  # valuation 2 -> |xi| = 2
    assert abs(symbol_quadrature(model, 1.0, k_abs1) - 4.0 / 3.0) < 1e-13
    k_abs2 = 2 ** 1  # valuation 1 -> |xi| = 4
    assert abs(symbol_quadrature(model, 1.0, k_abs2) - 10.0 / 3.0) < 1e-13


def test_symbol_identity_all_frequencies(model_alpha):
    # quadrature + lambda reproduces the closed-form multiplier
    model, alpha = model_alpha
    lam = lambda_value(model.p, alpha, model.N)
    eig = multiplier(model, alpha).eigenvalues
    for k in range(model.S):
        quad = symbol_quadrature(model, alpha, k) + (lam if k else 0.0)
        want = eig[k] if k else 0.0
        assert abs(quad - want) < 1e-11 * max(abs(want), 1.0)


def test_two_by_two_matrix_pin():
    A = build_matrix(BallModel(2, 0, 1), 1.0)
    want = np.array([[4.0 / 3.0, -2.0 / 3.0], [-2.0 / 3.0, 4.0 / 3.0]])
    assert np.max(np.abs(A - want)) < 1e-14
    eigs = np.sort(np.linalg.eigvalsh(A))
    assert np.max(np.abs(eigs - np.array([2.0 / 3.0, 2.0]))) < 1e-14


def test_four_representations_agree(model_alpha):
    model, alpha = model_alpha
    A = build_matrix(model, alpha)
    for seed in range(5):
        u = random_function(model, seed)
        routes = [
            apply_spectral(u, alpha).values,
            apply_hypersingular(u, alpha).values,
            apply_global_restriction(u, alpha).values,
            convolve_riesz(u, alpha).values,
            A @ u.values,
        ]
        ref = routes[0]
        for other in routes[1:]:
            assert rel_linf(ref, other) < 1e-10


def test_spectrum_matches_dense_matrix(model_alpha):
    model, alpha = model_alpha
    computed = np.sort(np.linalg.eigvalsh(build_matrix(model, alpha)))
    expected = spectrum_multiset(model, alpha)
    assert computed.shape == expected.shape
    assert np.max(np.abs(computed - expected)) < 1e-9


def test_spectrum_multiset_structure():
    model = BallModel(2, 0, 6)
    eigs = spectrum_multiset(model, 1.0)
    lam = lambda_value(2, 1.0, 0)
    assert eigs.size == model.S
    assert np.min(eigs) == lam
    # each scale 2**k appears 2**(k-1) times, k = 1..M
    for k in range(1, 7):
        assert int(np.sum(np.abs(eigs - 2.0 ** k) < 1e-12)) == 2 ** (k - 1)


def test_constant_functions_are_eigenfunctions(model_alpha):
    model, alpha = model_alpha
    lam = lambda_value(model.p, alpha, model.N)
    c = constant(model, 3.5)
    for route in (apply_spectral, apply_hypersingular,
                  apply_global_restriction, convolve_riesz):
        out = route(c, alpha)
        assert np.max(np.abs(out.values - lam * 3.5)) < 1e-10 * max(lam * 3.5, 1.0)


def test_riesz_pairing_pins():
    model = BallModel(2, 0, 4)
    one = constant(model, 1.0)
    # the operator kernel sees only the point mass on constants
    got = riesz_pairing(RieszDistribution(model, 2.0, -1), one)
    assert abs(got - lambda_value(2, 2.0, 0)) < 1e-14
    # the inverse kernel pin: (1 - 1/p) / (1 - p**(alpha-1)) at p = 2, alpha = 2, N = 0
    got = riesz_pairing(RieszDistribution(model, 2.0, +1), one)
    assert abs(got - (-0.5)) < 1e-14


def test_riesz_pairing_on_characters_gives_multiplier():
    model = BallModel(3, 0, 3)
    alpha = 1.5
    eig = multiplier(model, alpha).eigenvalues
    dist = RieszDistribution(model, alpha, -1)
    n = np.arange(model.S)
    for k in (0, 1, 3, 9, 13):
        chi = GridFunction(model, np.exp(2j * np.pi * n * k / model.S))
        got = riesz_pairing(dist, chi)
        assert abs(got - eig[k]) < 1e-12 * max(eig[k], 1.0)


def test_riesz_plus_kernel_inverts_on_mean_zero():
    # convolving with the +alpha kernel undoes the operator on mean-zero data
    for p, N, M, alpha in ((2, 0, 4, 2.0), (3, 0, 3, 0.5), (5, -1, 2, 1.5)):
        model = BallModel(p, N, M)
        u = random_function(model, 7)
        mean = u.integral() / float(p) ** N
        u = GridFunction(model, u.values - mean)
        du = apply_spectral(u, alpha)
        dist = RieszDistribution(model, alpha, +1)
        base = np.arange(model.S)
        back = np.array([
            riesz_pairing(dist, GridFunction(model, du.values[(n - base) % model.S]))
            for n in range(model.S)
        ])
        assert np.max(np.abs(back - u.values)) < 1e-12


def test_riesz_validation():
    model = BallModel(2, 0, 3)
    with pytest.raises(ValueError):
        RieszDistribution(model, 1.0, +1)  # normaliser vanishes at alpha = 1
    with pytest.raises(ValueError):
        RieszDistribution(model, -1.0, -1)
    with pytest.raises(ValueError):
        RieszDistribution(model, 1.0, 0)
    dist = RieszDistribution(model, 1.0, -1)
    with pytest.raises(ValueError):
        riesz_pairing(dist, constant(BallModel(2, 0, 2), 1.0))


def test_matrix_symmetry_and_row_sums(model_alpha):
    model, alpha = model_alpha
    A = build_matrix(model, alpha)
    assert np.max(np.abs(A - A.T)) < 1e-12
    lam = lambda_value(model.p, alpha, model.N)
    assert np.max(np.abs(A.sum(axis=1) - lam)) < 1e-11


def test_matrix_cap():
    with pytest.raises(ValueError):
        build_matrix(BallModel(2, 0, 13), 1.0, cap=4096)


def test_operator_commutes_with_refinement():
    # data resolved at level M stays resolved: the fine-grid operator
    # agrees with the coarse result re-expressed on the fine grid
    model = BallModel(2, 0, 4)
    alpha = 1.0
    u = random_function(model, 21)
    coarse_then_refine = apply_spectral(u, alpha).refine(2)
    refine_then_apply = apply_spectral(u.refine(2), alpha)
    assert np.max(np.abs(coarse_then_refine.values - refine_then_apply.values)) < 1e-11


def test_domain_check_resolved_data():
    model = BallModel(2, 0, 4)
    u = random_function(model, 5)
    report = domain_check(u, 1.0, levels=3)
    assert report.bounded
    assert report.levels == [4, 5, 6, 7]
    spread = max(report.norms) - min(report.norms)
    assert spread < 1e-10 * max(report.norms)


def test_domain_check_callable_profile():
    base = BallModel(2, 0, 3)

    def profile(m):
        # a sub-ball indicator sampled at each resolution: resolved, so bounded
        from padic_heat import ball_indicator
        return ball_indicator(m, center=0, radius_exp=-1)

    report = domain_check(profile, 1.5, levels=3, base_model=base)
    assert report.bounded
    with pytest.raises(ValueError):
        domain_check(profile, 1.5)


def test_domain_check_flags_rough_profile():
    base = BallModel(2, 0, 3)

    def noise(m):
        return random_function(m, m.M)

    report = domain_check(noise, 2.0, levels=4, base_model=base)
    # fresh noise at every level keeps energy at the top frequencies,
    # where the multiplier grows by p**alpha per refinement
    assert not report.bounded
    assert report.norms[-1] > 2.0 * report.norms[0]


def test_multiplier_validation_and_consistency_gate(monkeypatch):
    with pytest.raises(ValueError):
        multiplier(BallModel(2, 0, 3), 0.0)
    with pytest.raises(ValueError):
        multiplier(BallModel(2, 0, 3), -2.0)
    # sabotage the quadrature cross-check to prove the gate is armed
    monkeypatch.setattr(vlad, "symbol_quadrature", lambda m, a, k: 1e6)
    with pytest.raises(ConsistencyError):
        multiplier(BallModel(2, 0, 3), 1.234567)
