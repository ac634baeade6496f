import math

import numpy as np
import pytest

from topkorders import (
    AugmentedModel,
    AugmentedNaiveParams,
    PartialOrder,
    PositionDependentParams,
    StratifiedAugmentedParams,
    Universe,
    augmented_log_prob,
    enumerate_partial_orders,
    sample_augmented_dataset,
)
from topkorders.augmented import empty_list_log_prob, sample_augmented_batch
from util import empirical_pmf, enum_pmf, random_model


def naive(theta, m=3):
    return AugmentedModel("a", AugmentedNaiveParams(np.asarray(theta)), Universe(m))


def test_naive_uniform_single_item():
    model = naive(np.zeros(4))
    assert augmented_log_prob(PartialOrder((1,)), model) == pytest.approx(
        math.log(1 / 12)
    )


def test_naive_empty_list():
    model = naive(np.zeros(4))
    assert augmented_log_prob(PartialOrder(()), model) == pytest.approx(math.log(1 / 4))


def test_naive_end_suppressed_approaches_pl():
    from topkorders import PLParams, pl_log_marginal

    rng = np.random.default_rng(0)
    delta = rng.normal(size=3)
    model = naive(np.concatenate([delta, [-50.0]]))
    Q = PartialOrder((2, 3, 1))
    assert augmented_log_prob(Q, model) == pytest.approx(
        pl_log_marginal(Q, PLParams(delta)), abs=1e-9
    )


def test_apd_constant_gamma_reduces_to_naive():
    rng = np.random.default_rng(1)
    m = 4
    theta = rng.normal(size=m)
    c = 0.37
    apd = AugmentedModel(
        "a-pd", PositionDependentParams(theta, np.full(m, c)), Universe(m)
    )
    a = naive(np.concatenate([theta, [c]]), m)
    for q in enumerate_partial_orders(m, include_empty=True):
        assert augmented_log_prob(q, apd) == pytest.approx(
            augmented_log_prob(q, a), abs=1e-12
        )


def test_apd_uniform_example():
    m = 3
    apd = AugmentedModel(
        "a-pd", PositionDependentParams(np.zeros(m), np.zeros(m)), Universe(m)
    )
    assert augmented_log_prob(PartialOrder((1,)), apd) == pytest.approx(
        math.log(1 / 12)
    )


def test_as_single_bank_equals_naive():
    rng = np.random.default_rng(2)
    m = 4
    bank = rng.normal(size=m + 1)
    strat = AugmentedModel(
        "a-s", StratifiedAugmentedParams(bank[None, :]), Universe(m)
    )
    a = naive(bank, m)
    for q in enumerate_partial_orders(m, include_empty=True):
        assert augmented_log_prob(q, strat) == pytest.approx(
            augmented_log_prob(q, a), abs=1e-12
        )


def test_as_equal_banks_equal_naive():
    rng = np.random.default_rng(3)
    m = 3
    bank = rng.normal(size=m + 1)
    strat = AugmentedModel(
        "a-s", StratifiedAugmentedParams(np.tile(bank, (3, 1))), Universe(m)
    )
    a = naive(bank, m)
    for q in enumerate_partial_orders(m, include_empty=True):
        assert augmented_log_prob(q, strat) == pytest.approx(
            augmented_log_prob(q, a), abs=1e-12
        )


@pytest.mark.parametrize("variant", ["a", "a-pd", "a-s"])
@pytest.mark.parametrize("m", [2, 3, 4])
def test_normalization_including_empty(variant, m):
    rng = np.random.default_rng(17)
    for _ in range(5):
        model = random_model(variant, m, rng)
        _, p = enum_pmf(model)
        assert abs(p.sum() - 1.0) < 1e-9


@pytest.mark.parametrize("variant", ["a", "a-pd", "a-s"])
def test_shift_invariance(variant):
    rng = np.random.default_rng(4)
    m = 4
    c = 11.5
    model = random_model(variant, m, rng)
    if variant == "a":
        shifted = naive(model.params.theta + c, m)
    elif variant == "a-pd":
        shifted = AugmentedModel(
            "a-pd",
            PositionDependentParams(model.params.theta + c, model.params.gamma + c),
            Universe(m),
        )
    else:
        shifted = AugmentedModel(
            "a-s", StratifiedAugmentedParams(model.params.banks + c), Universe(m)
        )
    for q in enumerate_partial_orders(m, include_empty=True):
        assert augmented_log_prob(q, model) == pytest.approx(
            augmented_log_prob(q, shifted), abs=1e-10
        )


def test_end_dominant_yields_empty_lists():
    model = naive(np.array([0.0, 0.0, 0.0, 50.0]))
    D = sample_augmented_dataset(model, 100, np.random.default_rng(0))
    assert all(len(q) == 0 for q in D.orders)


def test_apd_end_unreachable_at_position_one():
    m = 3
    apd = AugmentedModel(
        "a-pd",
        PositionDependentParams(np.zeros(m), np.array([-50.0, 0.0, 0.0])),
        Universe(m),
    )
    orders = sample_augmented_batch(apd, 2000, np.random.default_rng(1))
    assert all(len(q) >= 1 for q in orders)


@pytest.mark.parametrize("variant", ["a", "a-pd", "a-s"])
def test_sampler_matches_enumeration(variant):
    rng = np.random.default_rng(5)
    model = random_model(variant, 3, rng)
    space, p = enum_pmf(model)
    orders = sample_augmented_batch(model, 50000, np.random.default_rng(6))
    emp = empirical_pmf(orders, space)
    assert 0.5 * np.abs(emp - p).sum() < 0.02


def test_no_empty_resampling():
    rng = np.random.default_rng(7)
    model = random_model("a", 3, rng)
    D = sample_augmented_dataset(model, 2000, np.random.default_rng(8), no_empty=True)
    assert all(len(q) >= 1 for q in D.orders)
    # conditional distribution matches enumeration restricted to k >= 1
    space, p = enum_pmf(model)
    keep = [i for i, q in enumerate(space) if len(q) >= 1]
    p_cond = p[keep] / p[keep].sum()
    emp = empirical_pmf(D.orders, [space[i] for i in keep])
    assert 0.5 * np.abs(emp - p_cond).sum() < 0.05


def test_empty_list_log_prob_matches_formula():
    rng = np.random.default_rng(9)
    model = random_model("a-pd", 3, rng)
    assert empty_list_log_prob(model) == pytest.approx(
        augmented_log_prob(PartialOrder(()), model)
    )


def test_total_order_has_no_terminal_factor():
    # when k = m the END factor is a forced choice contributing log 1 = 0
    rng = np.random.default_rng(10)
    m = 3
    theta = rng.normal(size=m)
    hi = naive(np.concatenate([theta, [99.0]]), m)
    lo = naive(np.concatenate([theta, [-99.0]]), m)
    q = PartialOrder((3, 1, 2))
    # END utility affects denominators of the item choices but never adds a
    # terminal factor; with END suppressed both should match plain PL
    from topkorders import PLParams, pl_log_marginal

    assert augmented_log_prob(q, lo) == pytest.approx(
        pl_log_marginal(q, PLParams(theta)), abs=1e-9
    )
    assert np.isfinite(augmented_log_prob(q, hi))
