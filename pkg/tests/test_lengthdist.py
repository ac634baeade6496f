import math

import numpy as np
import pytest

from topkorders import CategoricalLengthParams, PoissonLengthParams
from topkorders.lengthdist import (
    categorical_log_pmf,
    categorical_log_prob,
    poisson_clipped_dlogp_dlam,
    poisson_clipped_log_pmf,
    poisson_clipped_log_prob,
    sample_length,
)


def test_categorical_uniform():
    p = CategoricalLengthParams(np.zeros(3))
    assert categorical_log_prob(2, p) == pytest.approx(math.log(1 / 3))


def test_categorical_peaked():
    p = CategoricalLengthParams(np.array([10.0, 0.0, 0.0]))
    # ln(e^10 / (e^10 + 2)) = -ln(1 + 2 e^-10)
    assert categorical_log_prob(1, p) == pytest.approx(-math.log1p(2 * math.exp(-10)))
    assert categorical_log_prob(1, p) == pytest.approx(-9.08e-5, rel=1e-2)


def test_categorical_shift_invariance():
    rng = np.random.default_rng(0)
    logits = rng.normal(size=5)
    a = categorical_log_pmf(CategoricalLengthParams(logits))
    b = categorical_log_pmf(CategoricalLengthParams(logits + 3.7))
    np.testing.assert_allclose(a, b, atol=1e-12)


def test_categorical_out_of_range():
    p = CategoricalLengthParams(np.zeros(3))
    with pytest.raises(ValueError):
        categorical_log_prob(4, p)
    with pytest.raises(ValueError):
        categorical_log_prob(0, p)


def test_poisson_clipped_boundary_values():
    p = PoissonLengthParams(np.zeros(2), 10)
    x = np.zeros(2)  # lambda = 1
    assert poisson_clipped_log_prob(1, x, p) == pytest.approx(math.log(2 / math.e))
    assert poisson_clipped_log_prob(2, x, p) == pytest.approx(math.log(0.5 / math.e))


def test_poisson_clipped_single_support():
    p = PoissonLengthParams(np.array([2.0]), 1)
    assert poisson_clipped_log_prob(1, np.array([1.3]), p) == pytest.approx(0.0)


@pytest.mark.parametrize("m", list(range(1, 21)))
def test_normalization_both_families(m):
    rng = np.random.default_rng(m)
    logp = categorical_log_pmf(CategoricalLengthParams(rng.normal(size=m)))
    assert abs(np.exp(logp).sum() - 1.0) < 1e-10
    lam = math.exp(rng.normal())
    logp = poisson_clipped_log_pmf(lam, m)
    assert abs(np.exp(logp).sum() - 1.0) < 1e-10


def test_poisson_dlogp_matches_finite_difference():
    h = 1e-6
    for m in (1, 5, 10):
        for k in range(1, m + 1):
            for lam in (0.3, 1.0, 4.0):
                a = poisson_clipped_log_pmf(lam + h, m)[k - 1]
                b = poisson_clipped_log_pmf(lam - h, m)[k - 1]
                fd = (a - b) / (2 * h)
                assert poisson_clipped_dlogp_dlam(k, lam, m) == pytest.approx(
                    fd, abs=1e-5
                )


def test_sample_length_degenerate():
    p = CategoricalLengthParams(np.array([-1e6, 1e6, -1e6]))
    rng = np.random.default_rng(0)
    assert all(sample_length(p, rng=rng) == 2 for _ in range(50))


def test_sample_length_categorical_tv():
    m = 3
    p = CategoricalLengthParams(np.zeros(m))
    rng = np.random.default_rng(1)
    draws = np.array([sample_length(p, rng=rng) for _ in range(20000)])
    emp = np.bincount(draws, minlength=m + 1)[1:] / draws.size
    assert 0.5 * np.abs(emp - 1 / 3).sum() < 0.02


def test_sample_length_poisson_tv():
    m = 10
    p = PoissonLengthParams(np.zeros(1), m)
    x = np.zeros(1)
    exact = np.exp(poisson_clipped_log_pmf(1.0, m))
    rng = np.random.default_rng(2)
    draws = np.array([sample_length(p, x, rng) for _ in range(20000)])
    emp = np.bincount(draws, minlength=m + 1)[1:] / draws.size
    assert 0.5 * np.abs(emp - exact).sum() < 0.02
