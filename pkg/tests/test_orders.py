import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from topkorders import (
    Dataset,
    PartialOrder,
    Universe,
    enumerate_partial_orders,
    extension_count,
    validate_order,
)
from topkorders.orders import InvalidOrderError, num_partial_orders


def test_extension_count_examples():
    assert extension_count(1, 3) == 2
    assert extension_count(5, 5) == 1
    assert extension_count(2, 5) == 6


def test_extension_count_domain_error():
    with pytest.raises(ValueError):
        extension_count(4, 3)


@pytest.mark.parametrize("m,total", [(1, 1), (3, 15), (4, 64)])
def test_enumeration_counts(m, total):
    space = enumerate_partial_orders(m)
    assert len(space) == total
    assert len(set(q.items for q in space)) == total


@pytest.mark.parametrize("m", [1, 2, 3, 4, 5])
def test_enumeration_matches_formula(m):
    expected = sum(
        math.factorial(m) // math.factorial(m - i) for i in range(1, m + 1)
    )
    assert len(enumerate_partial_orders(m)) == expected
    assert num_partial_orders(m) == expected


def test_enumeration_cap():
    with pytest.raises(ValueError):
        enumerate_partial_orders(7)
    assert len(enumerate_partial_orders(7, cap=7)) == num_partial_orders(7)


@pytest.mark.parametrize("m", [2, 3, 4, 5])
def test_extension_count_agrees_with_filtering(m):
    rng = np.random.default_rng(m)
    totals = [q for q in enumerate_partial_orders(m) if len(q) == m]
    for k in range(1, m + 1):
        prefix = tuple(int(a) + 1 for a in rng.permutation(m)[:k])
        matches = [r for r in totals if r.items[:k] == prefix]
        assert len(matches) == extension_count(k, m)


def test_validate_order():
    u = Universe(3)
    validate_order(PartialOrder((1, 2)), u)
    with pytest.raises(InvalidOrderError):
        validate_order(PartialOrder((1, 1)), u)
    with pytest.raises(InvalidOrderError):
        validate_order(PartialOrder((4,)), u)
    with pytest.raises(InvalidOrderError):
        validate_order(PartialOrder(()), u)
    validate_order(PartialOrder(()), u, allow_empty=True)


@given(st.integers(min_value=1, max_value=5), st.data())
def test_any_permutation_prefix_is_valid(m, data):
    u = Universe(m)
    perm = data.draw(st.permutations(list(range(1, m + 1))))
    k = data.draw(st.integers(min_value=1, max_value=m))
    validate_order(PartialOrder(tuple(perm[:k])), u)


def test_universe_invariants():
    with pytest.raises(ValueError):
        Universe(0)
    with pytest.raises(ValueError):
        Universe(2, labels=("a",))
    assert Universe(2, labels=("a", "b")).label(2) == "b"


def test_dataset_validation_and_padding():
    u = Universe(3)
    D = Dataset(u, (PartialOrder((1,)), PartialOrder((3, 2))))
    items, lengths = D.to_padded()
    assert lengths.tolist() == [1, 2]
    assert items.tolist() == [[0, -1], [2, 1]]
    with pytest.raises(InvalidOrderError):
        Dataset(u, (PartialOrder(()),))
