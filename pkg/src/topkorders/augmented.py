"""Augmented ranking models over the universe plus an END token.

A partial order arises as a sequence of choices from the shrinking
augmented universe; choosing END terminates the list. END sits at index
m + 1 (1-based) internally. Variants:

  a     one fixed END utility: theta in R^(m+1)
  a-pd  position-dependent END utilities gamma in R^m, fixed item utilities
  a-s   K rank-stratified banks, each in R^(m+1); position j uses bank
        min(j, K)

Item utilities may optionally be covariate-linear (delta_j + beta . x_ij);
the END token never receives covariates.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .orders import Dataset, PartialOrder, Universe, validate_order

AUGMENTED_VARIANTS = ("a", "a-pd", "a-s")


@dataclass(frozen=True)
class AugmentedNaiveParams:
    """theta (m+1,): item utilities then the END utility. Optional beta (d,)."""

    theta: np.ndarray
    beta: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "theta", np.asarray(self.theta, dtype=np.float64))
        if self.beta is not None:
            object.__setattr__(self, "beta", np.asarray(self.beta, dtype=np.float64))

    @property
    def m(self) -> int:
        return self.theta.shape[0] - 1


@dataclass(frozen=True)
class PositionDependentParams:
    """Item utilities theta (m,) and per-position END utilities gamma (m,)."""

    theta: np.ndarray
    gamma: np.ndarray
    beta: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "theta", np.asarray(self.theta, dtype=np.float64))
        object.__setattr__(self, "gamma", np.asarray(self.gamma, dtype=np.float64))
        if self.theta.shape != self.gamma.shape:
            raise ValueError("theta and gamma must both have length m")
        if self.beta is not None:
            object.__setattr__(self, "beta", np.asarray(self.beta, dtype=np.float64))

    @property
    def m(self) -> int:
        return self.theta.shape[0]


@dataclass(frozen=True)
class StratifiedAugmentedParams:
    """banks (K, m+1): one augmented utility vector per choice position."""

    banks: np.ndarray
    betas: np.ndarray | None = None  # (K, d) when covariate-linear

    def __post_init__(self):
        banks = np.asarray(self.banks, dtype=np.float64)
        if banks.ndim != 2:
            raise ValueError("banks must be a (K, m+1) array")
        object.__setattr__(self, "banks", banks)
        if self.betas is not None:
            betas = np.asarray(self.betas, dtype=np.float64)
            if betas.shape[0] != banks.shape[0]:
                raise ValueError("need one beta row per bank")
            object.__setattr__(self, "betas", betas)

    @property
    def K(self) -> int:
        return self.banks.shape[0]

    @property
    def m(self) -> int:
        return self.banks.shape[1] - 1


@dataclass(frozen=True)
class AugmentedModel:
    variant: str
    params: AugmentedNaiveParams | PositionDependentParams | StratifiedAugmentedParams
    universe: Universe

    def __post_init__(self):
        pairing = {
            "a": AugmentedNaiveParams,
            "a-pd": PositionDependentParams,
            "a-s": StratifiedAugmentedParams,
        }
        if self.variant not in pairing:
            raise ValueError(f"unknown augmented variant {self.variant!r}")
        if not isinstance(self.params, pairing[self.variant]):
            raise TypeError(f"{self.variant} requires {pairing[self.variant].__name__}")
        if self.params.m != self.universe.m:
            raise ValueError("params m != universe m")


def _position_utilities(model: AugmentedModel, position: int, x_row) -> np.ndarray:
    """Utilities over the augmented universe for a choice at ``position`` (1-based)."""
    p = model.params
    m = model.universe.m
    if model.variant == "a":
        u = p.theta.copy()
        beta = p.beta
    elif model.variant == "a-pd":
        u = np.empty(m + 1)
        u[:m] = p.theta
        u[m] = p.gamma[min(position, m) - 1]
        beta = p.beta
    else:
        bank = min(position, p.K) - 1
        u = p.banks[bank].copy()
        beta = p.betas[bank] if p.betas is not None else None
    if beta is not None:
        if x_row is None:
            raise ValueError("model has covariate weights but no covariate row given")
        u[:m] = u[:m] + np.asarray(x_row, dtype=np.float64) @ beta
    return u


def augmented_log_prob(
    Q: PartialOrder, model: AugmentedModel, x_row: np.ndarray | None = None
) -> float:
    """Log probability of Q, including the terminal END choice.

    The empty order (END chosen first) is a valid event. When k = m no
    items remain, END is forced, and the terminal factor contributes 0.
    """
    validate_order(Q, model.universe, allow_empty=True)
    m = model.universe.m
    avail = np.ones(m + 1, dtype=bool)
    total = 0.0
    for j, a in enumerate(Q.items, start=1):
        u = _position_utilities(model, j, x_row)
        total += u[a - 1] - logsumexp(u[avail])
        avail[a - 1] = False
    k = len(Q)
    if k < m:
        u = _position_utilities(model, k + 1, x_row)
        total += u[m] - logsumexp(u[avail])
    return float(total)


def a_log_prob(Q, params: AugmentedNaiveParams, universe=None, x_row=None) -> float:
    universe = universe or Universe(params.m)
    return augmented_log_prob(Q, AugmentedModel("a", params, universe), x_row)


def apd_log_prob(Q, params: PositionDependentParams, universe=None, x_row=None) -> float:
    universe = universe or Universe(params.m)
    return augmented_log_prob(Q, AugmentedModel("a-pd", params, universe), x_row)


def as_log_prob(Q, params: StratifiedAugmentedParams, universe=None, x_row=None) -> float:
    universe = universe or Universe(params.m)
    return augmented_log_prob(Q, AugmentedModel("a-s", params, universe), x_row)


def sample_augmented(
    model: AugmentedModel,
    rng,
    x_row: np.ndarray | None = None,
    no_empty: bool = False,
) -> PartialOrder:
    """Draw one partial order by sequential choice until END.

    ``no_empty`` rejection-resamples empty draws; that deviates from exact
    model sampling and exists for parity with ballot datasets, where every
    record has k >= 1.
    """
    rng = np.random.default_rng(rng)
    m = model.universe.m
    while True:
        avail = np.ones(m + 1, dtype=bool)
        items = []
        while True:
            u = _position_utilities(model, len(items) + 1, x_row)
            logits = u[avail]
            p = np.exp(logits - logsumexp(logits))
            p = p / p.sum()
            idx = np.flatnonzero(avail)[rng.choice(p.shape[0], p=p)]
            if idx == m:
                break
            items.append(int(idx) + 1)
            avail[idx] = False
            if len(items) == m:
                break
        if items or not no_empty:
            return PartialOrder(tuple(items))


def sample_augmented_batch(
    model: AugmentedModel, n: int, rng, no_empty: bool = False
) -> list[PartialOrder]:
    """Vectorized Algorithm-2 sampling for covariate-free models.

    Positions are advanced in lockstep across all n draws; each round draws
    one choice for every still-active list.
    """
    if getattr(model.params, "beta", None) is not None or getattr(
        model.params, "betas", None
    ) is not None:
        raise ValueError("batch sampling requires a covariate-free model")
    rng = np.random.default_rng(rng)
    m = model.universe.m
    items = np.full((n, m), -1, dtype=np.int64)
    avail = np.ones((n, m + 1), dtype=bool)
    active = np.ones(n, dtype=bool)
    for pos in range(1, m + 1):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        u = _position_utilities(model, pos, None)
        w = np.exp(u - u.max()) * avail[idx]
        cum = np.cumsum(w, axis=1)
        r = rng.random(idx.size) * cum[:, -1]
        choice = (cum < r[:, None]).sum(axis=1)
        ended = choice == m
        active[idx[ended]] = False
        chose = idx[~ended]
        items[chose, pos - 1] = choice[~ended]
        avail[chose, choice[~ended]] = False
    lengths = (items >= 0).sum(axis=1)
    out = [
        PartialOrder(tuple(int(a) + 1 for a in items[i, : lengths[i]]))
        for i in range(n)
    ]
    if no_empty:
        empties = [i for i, q in enumerate(out) if len(q) == 0]
        while empties:
            redraw = sample_augmented_batch(model, len(empties), rng)
            for i, q in zip(empties, redraw):
                out[i] = q
            empties = [i for i in empties if len(out[i]) == 0]
    return out


def sample_augmented_dataset(
    model: AugmentedModel,
    n: int,
    rng,
    covariates=None,
    no_empty: bool = False,
) -> Dataset:
    rng = np.random.default_rng(rng)
    if covariates is None:
        orders = sample_augmented_batch(model, n, rng, no_empty=no_empty)
    else:
        orders = []
        for i in range(n):
            x_row = covariates.values[i] if covariates is not None else None
            orders.append(sample_augmented(model, rng, x_row, no_empty=no_empty))
    return Dataset(
        model.universe, tuple(orders), covariates=covariates, allow_empty=not no_empty
    )


def empty_list_log_prob(model: AugmentedModel, x_row=None) -> float:
    """Log probability of END being chosen first (the empty list)."""
    u = _position_utilities(model, 1, x_row)
    return float(u[model.universe.m] - logsumexp(u))
