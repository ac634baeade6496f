"""Domain types for top-k partial orders and combinatorial utilities.

Alternative ids are 1-based contiguous integers. A partial order is a
strict ordering of k distinct alternatives out of a universe of m; a total
order is the special case k = m.
"""

from dataclasses import dataclass, field
from itertools import permutations
from math import factorial

import numpy as np

DEFAULT_ENUMERATION_CAP = 6


class InvalidOrderError(ValueError):
    """A partial order violates the universe constraints."""


@dataclass(frozen=True)
class Universe:
    """A collection of m alternatives, optionally labeled for reporting."""

    m: int
    labels: tuple | None = None

    def __post_init__(self):
        if self.m < 1:
            raise ValueError(f"universe size must be >= 1, got {self.m}")
        if self.labels is not None:
            object.__setattr__(self, "labels", tuple(self.labels))
            if len(self.labels) != self.m:
                raise ValueError(
                    f"expected {self.m} labels, got {len(self.labels)}"
                )

    def label(self, item: int) -> str:
        if self.labels is not None:
            return self.labels[item - 1]
        return str(item)


@dataclass(frozen=True)
class PartialOrder:
    """A strict top-k ordering of distinct alternative ids (1-based).

    The empty order is constructible because the augmented sampling process
    can terminate before any item is chosen; dataset ingestion rejects it.
    """

    items: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "items", tuple(int(a) for a in self.items))

    def __len__(self) -> int:
        return len(self.items)

    def __iter__(self):
        return iter(self.items)


def validate_order(order: PartialOrder, universe: Universe, allow_empty: bool = False) -> None:
    """Raise InvalidOrderError unless ids are distinct, in range, and k in [1, m]."""
    items = order.items
    if not items and not allow_empty:
        raise InvalidOrderError("empty order")
    if len(items) > universe.m:
        raise InvalidOrderError(
            f"order of length {len(items)} exceeds universe size {universe.m}"
        )
    seen = set()
    for a in items:
        if not 1 <= a <= universe.m:
            raise InvalidOrderError(f"alternative id {a} outside [1, {universe.m}]")
        if a in seen:
            raise InvalidOrderError(f"duplicate alternative id {a}")
        seen.add(a)


@dataclass(frozen=True)
class CovariateTensor:
    """Dense agent-by-item feature tensor of shape (n, m, d)."""

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 3:
            raise ValueError(f"expected a 3-d tensor, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("covariates contain non-finite entries")
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[2]


@dataclass(frozen=True)
class Dataset:
    """A multiset of partial orders over a shared universe."""

    universe: Universe
    orders: tuple = ()
    covariates: CovariateTensor | None = None
    allow_empty: bool = False

    def __post_init__(self):
        object.__setattr__(self, "orders", tuple(self.orders))
        for q in self.orders:
            validate_order(q, self.universe, allow_empty=self.allow_empty)
        if self.covariates is not None:
            if self.covariates.n != len(self.orders):
                raise ValueError(
                    f"covariate rows ({self.covariates.n}) != number of orders"
                    f" ({len(self.orders)})"
                )
            if self.covariates.values.shape[1] != self.universe.m:
                raise ValueError("covariate item dimension != universe size")

    @property
    def n(self) -> int:
        return len(self.orders)

    @property
    def m(self) -> int:
        return self.universe.m

    def lengths(self) -> np.ndarray:
        return np.array([len(q) for q in self.orders], dtype=np.int64)

    def to_padded(self) -> tuple[np.ndarray, np.ndarray]:
        """Return (items, lengths): 0-based ids padded with -1, shape (n, kmax)."""
        lengths = self.lengths()
        kmax = int(lengths.max()) if len(lengths) else 0
        items = np.full((len(self.orders), max(kmax, 1)), -1, dtype=np.int64)
        for i, q in enumerate(self.orders):
            for j, a in enumerate(q.items):
                items[i, j] = a - 1
        return items, lengths


def extension_count(k: int, m: int) -> int:
    """Number of completions of a length-k partial order: (m - k)!."""
    if k < 0 or m < 0 or k > m:
        raise ValueError(f"need 0 <= k <= m, got k={k}, m={m}")
    return factorial(m - k)


def num_partial_orders(m: int, include_empty: bool = False) -> int:
    total = sum(factorial(m) // factorial(m - i) for i in range(1, m + 1))
    return total + 1 if include_empty else total


def enumerate_partial_orders(
    m: int,
    cap: int = DEFAULT_ENUMERATION_CAP,
    include_empty: bool = False,
) -> list[PartialOrder]:
    """All top-k partial orders of a size-m universe, for every k in [1, m].

    Refuses m above ``cap``: the space has sum_i m!/(m-i)! elements, which
    blows up combinatorially.
    """
    if m > cap:
        raise ValueError(f"m={m} exceeds enumeration cap {cap}")
    out = [PartialOrder(())] if include_empty else []
    for k in range(1, m + 1):
        for items in permutations(range(1, m + 1), k):
            out.append(PartialOrder(items))
    return out
