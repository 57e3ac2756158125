import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from permlab.errors import ConfigError, DegenerateDispersionError, DomainError
from permlab.estimators import (
    CONTINUOUS,
    EnsembleConfig,
    EstimateResult,
    PhaseConfig,
    actual_error,
    error_ratio_delta,
    estimate_perm_squared_gurvits_biased,
    estimate_perm_squared_qcp,
    estimate_permanent,
    experimental_error,
    glynn_polynomial,
    haar_average_perm_squared,
    haar_member,
    sample_phase_vector,
    scaling_law_epsilon,
    subensemble_means,
)
from permlab.permanent import permanent_glynn
from permlab.seeding import stream


def _haar_block(seed, j, n, m):
    return haar_member(seed, j, m)[:n, :n]


def _exact2(a):
    p = permanent_glynn(a)
    return p.real ** 2 + p.imag ** 2


# -- phases -----------------------------------------------------------------

def test_d2_phases_are_signs():
    z = sample_phase_vector(1000, 2, stream(1, 0))
    assert set(np.unique(z.values)) <= {1, -1}
    assert set(np.unique(z.indices)) == {0, 1}


def test_d4_phases_are_exact_quarter_turns():
    z = sample_phase_vector(1000, 4, stream(2, 0))
    assert set(np.unique(z.values)) <= {1, 1j, -1, -1j}


@pytest.mark.parametrize("d", [3, 5, 7, 16])
def test_finite_d_are_roots_of_unity(d):
    z = sample_phase_vector(200, d, stream(3, 0))
    assert np.allclose(np.abs(z.values), 1, atol=1e-12)
    assert np.allclose(z.values, np.exp(2j * np.pi * z.indices / d), atol=1e-15)
    assert np.allclose(z.values ** d, 1, atol=1e-12)


def test_continuous_phases_circle_mean():
    z = sample_phase_vector(10**6, CONTINUOUS, stream(4, 0)).values
    assert np.allclose(np.abs(z), 1, atol=1e-12)
    assert abs(z.mean()) < 3 / math.sqrt(z.size)


def test_phase_config_parse():
    assert PhaseConfig.parse("inf").continuous
    assert PhaseConfig.parse("continuous") == CONTINUOUS
    assert PhaseConfig.parse("4").d == 4
    with pytest.raises(ConfigError):
        PhaseConfig(1)
    with pytest.raises(ConfigError):
        PhaseConfig.parse("two")


def test_ensemble_config_validation():
    with pytest.raises(ConfigError):
        EnsembleConfig(0, 10)
    with pytest.raises(ConfigError):
        EnsembleConfig(10, 3)
    with pytest.raises(ConfigError):
        EnsembleConfig(10, 0)
    assert EnsembleConfig(10, 4, "2").phase.d == 2


# -- Glynn polynomial ---------------------------------------------------------

def test_polynomial_identity_is_one():
    z = sample_phase_vector(6, CONTINUOUS, stream(5, 0))
    assert glynn_polynomial(np.eye(6), z) == pytest.approx(1, abs=1e-14)
    z4 = sample_phase_vector(6, 4, stream(5, 1))
    assert glynn_polynomial(np.eye(6), z4) == 1


def test_polynomial_all_ones():
    assert glynn_polynomial(np.ones((5, 5)), np.ones(5)) == 5**5


def test_polynomial_length_mismatch():
    with pytest.raises(ValueError):
        glynn_polynomial(np.eye(3), np.ones(4))


@pytest.mark.parametrize("d", [2, 3])
def test_polynomial_exhaustive_average_is_permanent(d):
    # Full enumeration over all d^N phase vectors reproduces perm exactly.
    rng = stream(6, d)
    a = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
    roots = PhaseConfig(d).roots()
    total = sum(glynn_polynomial(a, roots[list(q)]) for q in itertools.product(range(d), repeat=5))
    assert total / d**5 == pytest.approx(permanent_glynn(a), rel=1e-12)


def test_polynomial_sampled_mean_is_permanent():
    rng = stream(7, 0)
    a = (rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))) / math.sqrt(5)
    est = estimate_permanent(a, EnsembleConfig(100_000, 100, CONTINUOUS, seed=7))
    assert actual_error(est, permanent_glynn(a)) <= 4 * est.std_error


@pytest.mark.parametrize("c", [1, -1, 1j, -1j])
def test_polynomial_equal_phases_exact(c):
    rng = stream(8, 0)
    a = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
    want = 1 + 0j
    for row in a:
        rs = 0j
        for x in row:  # sequential order, as the polynomial accumulates
            rs += x
        want *= rs
    assert glynn_polynomial(a, np.full(6, c, dtype=complex)) == want


def test_polynomial_equal_generic_phase():
    rng = stream(8, 1)
    a = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
    c = np.exp(0.77j)
    assert glynn_polynomial(a, np.full(6, c)) == pytest.approx(np.prod(a.sum(axis=1)), rel=1e-13)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 8), st.integers(0, 2**32))
def test_polynomial_scale_equivariance(n, seed):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    z = sample_phase_vector(n, CONTINUOUS, rng)
    # Power-of-two scaling is exact in floating point.
    assert glynn_polynomial(2 * a, z) == 2**n * glynn_polynomial(a, z)
    c = math.sqrt(0.37)
    assert glynn_polynomial(c * a, z) == pytest.approx(c**n * glynn_polynomial(a, z), rel=1e-12, abs=1e-300)


# -- sub-ensemble estimators ---------------------------------------------------

def test_estimate_permanent_identity_constant():
    est = estimate_permanent(np.eye(6), EnsembleConfig(500, 10, 2, seed=1))
    assert est.mean == 1 and est.std_error == 0
    assert error_ratio_delta(est, 1.0) == 0.0


def test_estimate_permanent_all_ones():
    est = estimate_permanent(np.ones((4, 4)), EnsembleConfig(20_000, 50, CONTINUOUS, seed=2))
    assert abs(est.mean - 24) <= 3 * est.std_error


def test_result_mean_is_mean_of_values():
    a = _haar_block(3, 0, 4, 8)
    for est in (
        estimate_permanent(a, EnsembleConfig(300, 20, 2, seed=3)),
        estimate_perm_squared_qcp(a, EnsembleConfig(300, 20, 2, seed=3)),
    ):
        assert est.mean == pytest.approx(np.mean(est.subensemble_values), rel=1e-12)
        assert est.effective_subensembles == est.subensemble_values.size
        assert est.std_error >= 0


def test_qcp_identity_exactly_one():
    est = estimate_perm_squared_qcp(np.eye(5), EnsembleConfig(100, 10, 4, seed=1))
    assert est.mean == 1.0 and est.std_error == 0.0
    assert est.effective_subensembles == 5


def test_qcp_zero_target():
    # Identity rows {0,1} x cols {1,2} is a disjoint selection: perm = 0.
    a = np.array([[0, 0], [1, 0]], dtype=complex)
    est = estimate_perm_squared_qcp(a, EnsembleConfig(1000, 40, CONTINUOUS, seed=5))
    assert abs(est.mean) <= 4 * est.std_error + 1e-300


def test_qcp_pairs_adjacent_subensembles():
    a = _haar_block(4, 0, 3, 6)
    cfg = EnsembleConfig(200, 8, 2, seed=9)
    means = subensemble_means(a, cfg)
    est = estimate_perm_squared_qcp(a, cfg)
    want = (means[0::2] * np.conj(means[1::2])).real
    assert np.array_equal(est.subensemble_values, want)
    gur = estimate_perm_squared_gurvits_biased(a, cfg)
    assert np.allclose(gur.subensemble_values, np.abs(means) ** 2, rtol=1e-14, atol=0)
    assert gur.effective_subensembles == 8


def test_gurvits_requires_d2():
    with pytest.raises(ConfigError):
        estimate_perm_squared_gurvits_biased(np.eye(2), EnsembleConfig(10, 2, CONTINUOUS))


def test_gurvits_identity():
    assert estimate_perm_squared_gurvits_biased(np.eye(4), EnsembleConfig(10, 4, 2)).mean == 1.0


def test_gurvits_bias_equals_subensemble_variance():
    # E|mean|^2 - |perm|^2 = Var(mean): compare against the sample variance
    # of the complex sub-ensemble means on the same draws.
    for j in range(5):
        a = _haar_block(12, j, 5, 20)
        cfg = EnsembleConfig(200, 400, 2, seed=12)
        means = subensemble_means(a, cfg, matrix_index=j)
        gur = estimate_perm_squared_gurvits_biased(a, cfg, matrix_index=j)
        var = np.mean(np.abs(means - means.mean()) ** 2) * cfg.L2 / (cfg.L2 - 1)
        assert abs((gur.mean - _exact2(a)) - var) <= 3 * gur.std_error


def test_gurvits_positive_bias_n10():
    rel = []
    for j in range(4):
        a = _haar_block(21, j, 10, 40)
        est = estimate_perm_squared_gurvits_biased(a, EnsembleConfig(10_000, 100, 2, seed=21), j)
        rel.append((est.mean - _exact2(a)) / _exact2(a))
    assert np.mean(rel) > 0


def test_gurvits_bias_shrinks_with_L1():
    small, large = [], []
    for j in range(3):
        a = _haar_block(22, j, 10, 40)
        ex = _exact2(a)
        small.append(estimate_perm_squared_gurvits_biased(a, EnsembleConfig(10_000, 20, 2, seed=22), j).mean / ex - 1)
        large.append(estimate_perm_squared_gurvits_biased(a, EnsembleConfig(1_000_000, 20, 2, seed=22), j).mean / ex - 1)
    assert np.mean(large) < np.mean(small)


@pytest.mark.parametrize("d", [2, 4, None])
def test_qcp_unbiased_battery(d):
    # Unbiased estimator: Delta <= 3 for >= 99% of 200 independent runs.
    a = _haar_block(30, 0, 5, 10)
    ex = _exact2(a)
    deltas = [
        error_ratio_delta(estimate_perm_squared_qcp(a, EnsembleConfig(500, 100, d, seed=s)), ex)
        for s in range(200)
    ]
    assert np.mean(np.array(deltas) <= 3) >= 0.99


def test_permanent_unbiased_battery():
    a = _haar_block(31, 0, 6, 12)
    p = permanent_glynn(a)
    deltas = [error_ratio_delta(estimate_permanent(a, EnsembleConfig(500, 100, 2, seed=s)), p) for s in range(200)]
    assert np.mean(np.array(deltas) <= 3) >= 0.99


def test_qcp_actual_error_consistent_8x8():
    a = _haar_block(32, 0, 8, 16)
    ex = _exact2(a)
    deltas = [
        error_ratio_delta(estimate_perm_squared_qcp(a, EnsembleConfig(1000, 100, CONTINUOUS, seed=s)), ex)
        for s in range(200)
    ]
    assert np.mean(np.array(deltas) <= 3) >= 0.99


@pytest.mark.slow
def test_gurvits_permanent_n10_k4_seeds():
    # |mean - perm| <= 4 std_error in >= 95% of 100 seeds, L = 1e7, d = 2.
    a = _haar_block(33, 0, 10, 40)
    p = permanent_glynn(a)
    ok = [error_ratio_delta(estimate_permanent(a, EnsembleConfig(100_000, 100, 2, seed=s)), p) <= 4 for s in range(100)]
    assert np.mean(ok) >= 0.95


def test_reproducible_across_threads():
    a = _haar_block(34, 0, 5, 10)
    cfg = EnsembleConfig(3000, 16, CONTINUOUS, seed=34)
    one = estimate_perm_squared_qcp(a, cfg, threads=1)
    many = estimate_perm_squared_qcp(a, cfg, threads=4)
    assert one.mean == many.mean and one.std_error == many.std_error
    assert np.array_equal(one.subensemble_values, many.subensemble_values)


# -- error statistics ---------------------------------------------------------------

def _result(mean, se):
    return EstimateResult(mean, se, np.array([mean]), 1)


def test_actual_error_examples():
    assert actual_error(_result(1.0, 0.1), 1.0) == 0
    assert actual_error(_result(2.5, 0.1), 2.0) == 0.5


def test_delta_examples():
    assert error_ratio_delta(_result(1.0, 0.2), 1.0) == 0
    assert error_ratio_delta(_result(1.6, 0.2), 1.0) == pytest.approx(3.0)
    with pytest.raises(DegenerateDispersionError):
        error_ratio_delta(_result(1.5, 0.0), 1.0)


def test_experimental_error_examples():
    assert experimental_error(1.0, 100) == pytest.approx(0.1)
    assert experimental_error(0.0, 12345) == 0.0
    with pytest.raises(ValueError):
        experimental_error(-1.0, 10)


def test_shot_noise_exceeds_qcp_error_n10():
    a = _haar_block(35, 0, 10, 40)
    est = estimate_perm_squared_qcp(a, EnsembleConfig(100_000, 100, CONTINUOUS, seed=35))
    assert experimental_error(_exact2(a), 10**7) > est.std_error


def test_from_values_complex_error():
    v = np.array([1 + 1j, 1 - 1j, 3 + 1j, 3 - 1j])
    r = EstimateResult.from_values(v)
    assert r.mean == 2
    assert r.std_error == pytest.approx(math.sqrt((np.var(v.real, ddof=1) + np.var(v.imag, ddof=1)) / 4))


# -- Haar averages and scaling law ------------------------------------------------

def test_haar_average_trivial():
    assert haar_average_perm_squared(1, 1, 5, seed=1).mean == pytest.approx(1.0, abs=1e-12)


def test_haar_average_n1_k2():
    # E|U_00|^2 = 1/2 over 2x2 Haar.
    r = haar_average_perm_squared(1, 2, 4000, seed=2)
    assert abs(r.mean - 0.5) <= 3 * r.std_error


def test_haar_average_sampled_matches_exact():
    cfg = EnsembleConfig(2000, 20, CONTINUOUS, seed=3)
    ex = haar_average_perm_squared(3, 2, 10, seed=3, exact=True)
    est = haar_average_perm_squared(3, 2, 10, cfg, seed=3)
    assert np.allclose(est.subensemble_values, ex.subensemble_values, rtol=0.2)


def test_haar_average_slope_k2():
    ns = np.arange(4, 11)
    logs = [math.log(haar_average_perm_squared(int(n), 2, 100, seed=40, exact=True).mean) for n in ns]
    slope = np.polyfit(ns, logs, 1)[0]
    assert abs(slope - scaling_law_epsilon(2)) <= 0.15 * abs(scaling_law_epsilon(2))


def test_epsilon_values():
    assert scaling_law_epsilon(1) == pytest.approx(-2 * math.log(2), abs=1e-12)
    assert scaling_law_epsilon(2) == pytest.approx(-1.909543, abs=1e-6)
    with pytest.raises(DomainError):
        scaling_law_epsilon(0.5)


def test_epsilon_strictly_decreasing():
    ks = np.linspace(1, 10, 400)
    vals = np.array([scaling_law_epsilon(k) for k in ks])
    assert np.all(np.diff(vals) < 0)
    # d eps / dk = ln(k / (1 + k)); finite-difference check.
    h = 1e-6
    for k in (1.5, 3.0, 7.0):
        fd = (scaling_law_epsilon(k + h) - scaling_law_epsilon(k - h)) / (2 * h)
        assert fd == pytest.approx(math.log(k / (1 + k)), rel=1e-6)
