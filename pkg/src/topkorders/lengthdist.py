"""Distributions over list length k in [1, m].

Two families: a categorical over the m possible lengths (softmax logits),
and a covariate-conditioned Poisson with rate exp(theta . x), clipped into
[1, m] by absorbing the boundary mass (k <= 1 collapses to 1, k >= m to m)
so the support sums to one.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, logsumexp
from scipy.stats import poisson


@dataclass(frozen=True)
class CategoricalLengthParams:
    """Length logits theta (m,); p_k = softmax(theta)_k."""

    logits: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "logits", np.asarray(self.logits, dtype=np.float64))

    @property
    def m(self) -> int:
        return self.logits.shape[0]


@dataclass(frozen=True)
class PoissonLengthParams:
    """Rate weights theta (d,) for lambda(x) = exp(theta . x), support [1, m]."""

    weights: np.ndarray
    m: int

    def __post_init__(self):
        object.__setattr__(self, "weights", np.asarray(self.weights, dtype=np.float64))

    @property
    def d(self) -> int:
        return self.weights.shape[0]


def categorical_log_pmf(params: CategoricalLengthParams) -> np.ndarray:
    return params.logits - logsumexp(params.logits)


def categorical_log_prob(k: int, params: CategoricalLengthParams) -> float:
    if not 1 <= k <= params.m:
        raise ValueError(f"length {k} outside [1, {params.m}]")
    return float(categorical_log_pmf(params)[k - 1])


def poisson_rate(x_agent: np.ndarray, params: PoissonLengthParams) -> float:
    x_agent = np.asarray(x_agent, dtype=np.float64)
    lam = float(np.exp(params.weights @ x_agent))
    if not np.isfinite(lam):
        raise ValueError("non-finite Poisson rate")
    return lam


def poisson_clipped_log_pmf(lam: float, m: int) -> np.ndarray:
    """Log pmf over k = 1..m of a Poisson(lam) with boundary absorption."""
    if m == 1:
        return np.zeros(1)
    ks = np.arange(1, m + 1)
    logp = ks * np.log(lam) - lam - gammaln(ks + 1)
    # k=1 absorbs the k=0 mass; k=m absorbs the upper tail, computed as a
    # stable complementary sum 1 - CDF(m-1).
    logp[0] = np.logaddexp(-lam, logp[0])
    logp[-1] = poisson.logsf(m - 1, lam)
    return logp


def poisson_clipped_log_prob(
    k: int, x_agent: np.ndarray, params: PoissonLengthParams
) -> float:
    if not 1 <= k <= params.m:
        raise ValueError(f"length {k} outside [1, {params.m}]")
    lam = poisson_rate(x_agent, params)
    return float(poisson_clipped_log_pmf(lam, params.m)[k - 1])


def poisson_clipped_dlogp_dlam(k: int, lam: float, m: int) -> float:
    """d/dlambda of the clipped log pmf at k; used by the analytic gradients."""
    if m == 1:
        return 0.0
    if k == 1:
        # P(1) = e^-lam (1 + lam); dlog/dlam = -lam / (1 + lam)
        return -lam / (1.0 + lam)
    if k < m:
        return k / lam - 1.0
    # d/dlam P(X >= m) = pmf(m-1; lam)
    return float(np.exp(poisson.logpmf(m - 1, lam) - poisson.logsf(m - 1, lam)))


def sample_length(params, x_agent=None, rng=None) -> int:
    """Draw a length from the exact pmf of the given parameter family."""
    rng = np.random.default_rng(rng)
    if isinstance(params, CategoricalLengthParams):
        p = np.exp(categorical_log_pmf(params))
    elif isinstance(params, PoissonLengthParams):
        if x_agent is None:
            raise ValueError("Poisson length model needs an agent covariate vector")
        p = np.exp(poisson_clipped_log_pmf(poisson_rate(x_agent, params), params.m))
    else:
        raise TypeError(f"unknown length params {type(params)!r}")
    p = p / p.sum()
    return int(rng.choice(params.m, p=p)) + 1
