import math

import numpy as np
import pytest

from topkorders import (
    CategoricalLengthParams,
    CompositeModel,
    CovariateTensor,
    PLParams,
    PartialOrder,
    PoissonLengthParams,
    StratifiedPLParams,
    Universe,
    composite_log_prob,
    sample_composite_dataset,
)
from topkorders.composite import cci_log_prob, ci_log_prob, cld_log_prob
from topkorders.lengthdist import poisson_clipped_log_pmf
from util import empirical_pmf, enum_pmf, random_model


def uniform_ci(m=3):
    return CompositeModel(
        "c-i",
        CategoricalLengthParams(np.zeros(m)),
        PLParams(np.zeros(m)),
        Universe(m),
    )


def test_ci_uniform_example():
    assert ci_log_prob(PartialOrder((1, 2)), uniform_ci()) == pytest.approx(
        math.log(1 / 18)
    )


def test_ci_uniform_normalizes():
    space, p = enum_pmf(uniform_ci())
    assert len(space) == 15
    assert p.sum() == pytest.approx(1.0, abs=1e-12)


def test_ci_degenerate_length_gives_minus_inf():
    m = 3
    model = CompositeModel(
        "c-i",
        CategoricalLengthParams(np.array([-np.inf, -np.inf, 0.0])),
        PLParams(np.zeros(m)),
        Universe(m),
    )
    assert composite_log_prob(PartialOrder((1,)), model) == -np.inf
    total = sum(
        math.exp(composite_log_prob(q, model))
        for q, _ in zip(*enum_pmf(uniform_ci()))
        if len(q) == m
    )
    assert total == pytest.approx(1.0)


def test_cci_zero_params_product():
    m = 3
    model = CompositeModel(
        "c-ci",
        PoissonLengthParams(np.zeros(2), m),
        PLParams(np.zeros(m), np.zeros(2)),
        Universe(m),
    )
    x_row = np.zeros((m, 2))
    expected = poisson_clipped_log_pmf(1.0, m)[0] + math.log(1 / 3)
    assert cci_log_prob(PartialOrder((1,)), model, x_row) == pytest.approx(expected)


def test_cci_zero_covariates_reduce_to_plain():
    rng = np.random.default_rng(0)
    m = 3
    delta = rng.normal(size=m)
    model = CompositeModel(
        "c-ci",
        PoissonLengthParams(rng.normal(size=2), m),
        PLParams(delta, rng.normal(size=2)),
        Universe(m),
    )
    x_row = np.zeros((m, 2))
    plain = CompositeModel(
        "c-ci",
        PoissonLengthParams(np.zeros(2), m),
        PLParams(delta, np.zeros(2)),
        Universe(m),
    )
    # with x = 0 the rate is exp(0)=1 regardless of weights, and beta drops out
    assert cci_log_prob(PartialOrder((2, 1)), model, x_row) == pytest.approx(
        cci_log_prob(PartialOrder((2, 1)), plain, x_row)
    )


def test_cci_normalizes_with_random_covariates():
    rng = np.random.default_rng(1)
    m = 3
    model = CompositeModel(
        "c-ci",
        PoissonLengthParams(rng.normal(size=2), m),
        PLParams(rng.normal(size=m), rng.normal(size=2)),
        Universe(m),
    )
    x_row = rng.normal(size=(m, 2))
    space, _ = enum_pmf(uniform_ci())
    total = sum(math.exp(cci_log_prob(q, model, x_row)) for q in space)
    assert total == pytest.approx(1.0, abs=1e-9)


def test_cld_single_stratum_equals_ci():
    rng = np.random.default_rng(2)
    m = 3
    logits = rng.normal(size=m)
    delta = rng.normal(size=m)
    cld = CompositeModel(
        "c-ld",
        CategoricalLengthParams(logits),
        StratifiedPLParams((PLParams(delta),)),
        Universe(m),
    )
    ci = CompositeModel(
        "c-i", CategoricalLengthParams(logits), PLParams(delta), Universe(m)
    )
    space, _ = enum_pmf(uniform_ci())
    for q in space:
        assert cld_log_prob(q, cld) == pytest.approx(ci_log_prob(q, ci), abs=1e-12)


def test_cld_stratum_isolation():
    rng = np.random.default_rng(3)
    m = 3
    logits = rng.normal(size=m)
    base = rng.normal(size=m)
    cld = CompositeModel(
        "c-ld",
        CategoricalLengthParams(logits),
        StratifiedPLParams((PLParams(base), PLParams(rng.normal(size=m)))),
        Universe(m),
    )
    ci = CompositeModel(
        "c-i", CategoricalLengthParams(logits), PLParams(base), Universe(m)
    )
    for q, _ in zip(*enum_pmf(uniform_ci())):
        if len(q) == 1:
            assert cld_log_prob(q, cld) == pytest.approx(ci_log_prob(q, ci))


@pytest.mark.parametrize("variant,m", [("c-i", 4), ("c-ld", 4)])
def test_normalization_random_params(variant, m):
    rng = np.random.default_rng(42)
    for _ in range(5):
        model = random_model(variant, m, rng)
        _, p = enum_pmf(model)
        assert abs(p.sum() - 1.0) < 1e-9


def test_sample_degenerate_length_gives_total_orders():
    m = 3
    model = CompositeModel(
        "c-i",
        CategoricalLengthParams(np.array([-1e3, -1e3, 0.0])),
        PLParams(np.zeros(m)),
        Universe(m),
    )
    D = sample_composite_dataset(model, 200, np.random.default_rng(0))
    assert all(len(q) == m for q in D.orders)


@pytest.mark.parametrize("variant", ["c-i", "c-ld"])
def test_sampler_matches_enumeration(variant):
    rng = np.random.default_rng(5)
    model = random_model(variant, 3, rng)
    space, p = enum_pmf(model)
    D = sample_composite_dataset(model, 50000, np.random.default_rng(6))
    emp = empirical_pmf(D.orders, space)
    assert 0.5 * np.abs(emp - p).sum() < 0.02


def test_cld_length_marginal_is_categorical():
    rng = np.random.default_rng(7)
    model = random_model("c-ld", 3, rng)
    space, p = enum_pmf(model)
    length_marginal = np.zeros(3)
    for q, pr in zip(space, p):
        length_marginal[len(q) - 1] += pr
    from topkorders.lengthdist import categorical_log_pmf

    np.testing.assert_allclose(
        length_marginal, np.exp(categorical_log_pmf(model.length_params)), atol=1e-12
    )


def test_variant_pairing_enforced():
    m = 3
    with pytest.raises(TypeError):
        CompositeModel(
            "c-i",
            PoissonLengthParams(np.zeros(1), m),
            PLParams(np.zeros(m)),
            Universe(m),
        )
    with pytest.raises(ValueError):
        CompositeModel(
            "c-x",
            CategoricalLengthParams(np.zeros(m)),
            PLParams(np.zeros(m)),
            Universe(m),
        )


def test_cci_sampling_uses_covariates():
    rng = np.random.default_rng(8)
    m, d, n = 3, 2, 40
    model = random_model("c-ci", m, rng, d=d)
    cov = CovariateTensor(rng.normal(size=(n, m, d)))
    D = sample_composite_dataset(model, n, np.random.default_rng(9), covariates=cov)
    assert D.n == n
    assert all(1 <= len(q) <= m for q in D.orders)
