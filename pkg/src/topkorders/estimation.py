"""Regularized maximum-likelihood fitting for all six model variants.

The objective is F = nll + l2 penalty, plus the Laplacian coupling term
for the stratified variants (c-ld, a-s), whose per-stratum losses are each
averaged over their own records or choice events. Gradients are analytic;
optimization is a hand-rolled Adam on a flat parameter vector, initialized
at zero, full-batch by default.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp, softmax

from .augmented import (
    AugmentedModel,
    AugmentedNaiveParams,
    PositionDependentParams,
    StratifiedAugmentedParams,
    augmented_log_prob,
)
from .composite import CompositeModel, composite_log_prob
from .kernels import apd_nll_grad, augs_nll_grad, pl_nll_grad
from .lengthdist import (
    CategoricalLengthParams,
    PoissonLengthParams,
    poisson_clipped_dlogp_dlam,
    poisson_clipped_log_pmf,
)
from .orders import Dataset, PartialOrder
from .ranking import PLParams, StratifiedPLParams

ALL_VARIANTS = ("c-i", "c-ci", "c-ld", "a", "a-pd", "a-s")
END = 0  # marker for the END token in by-rank choice events


class NonFiniteLossError(RuntimeError):
    pass


@dataclass(frozen=True)
class FitConfig:
    learning_rate: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon_opt: float = 1e-8
    lambda_l2: float = 1e-5
    lambda_laplacian: float = 0.0
    K: int = 1
    max_epochs: int = 2000
    tol: float = 1e-4
    batch_size: int | str = "full"
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0 or self.tol <= 0 or self.max_epochs < 1:
            raise ValueError("positive learning rate, tolerance, epoch count required")
        if self.K < 1:
            raise ValueError("K must be >= 1")


@dataclass
class FitResult:
    model: object
    trace: list = field(default_factory=list)  # (epoch, objective, grad_norm)
    converged: bool = False
    epochs_run: int = 0

    @property
    def final_objective(self) -> float:
        return self.trace[-1][1]


# ---------------------------------------------------------------------------
# Penalties
# ---------------------------------------------------------------------------

def l2_penalty(params: np.ndarray, lambda_l2: float) -> float:
    params = np.asarray(params, dtype=np.float64)
    return float(lambda_l2 * np.sum(params * params))


def laplacian_penalty(banks, lambda_laplacian: float) -> float:
    """lambda_L * sum_{i=2..K} ||theta_i - theta_{i-1}||^2 over a path graph."""
    banks = [np.asarray(b, dtype=np.float64).ravel() for b in banks]
    if len({b.shape[0] for b in banks}) > 1:
        raise ValueError("bank shape mismatch")
    total = 0.0
    for prev, cur in zip(banks, banks[1:]):
        diff = cur - prev
        total += float(diff @ diff)
    return lambda_laplacian * total


def _laplacian_grad(banks_2d: np.ndarray, lambda_laplacian: float) -> np.ndarray:
    grad = np.zeros_like(banks_2d)
    if banks_2d.shape[0] > 1:
        diff = banks_2d[1:] - banks_2d[:-1]
        grad[1:] += 2.0 * lambda_laplacian * diff
        grad[:-1] -= 2.0 * lambda_laplacian * diff
    return grad


# ---------------------------------------------------------------------------
# Dataset stratification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ChoiceEvent:
    """A single sequential choice: the chosen id (END = 0) and the choice set."""

    chosen: int
    available: tuple
    position: int


def stratify_dataset(D: Dataset, K: int, mode: str = "by-length"):
    """Split D into K strata by list length, or into K banks of choice events.

    by-length: stratum i (1-based) holds orders of length i, the last
    stratum holds lengths >= K. by-rank: stratum i holds all position-i
    choice events, including terminal END choices, the last stratum all
    events at positions >= K.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    if mode == "by-length":
        groups = [[] for _ in range(K)]
        for q in D.orders:
            groups[min(max(len(q), 1), K) - 1].append(q)
        return [
            Dataset(D.universe, tuple(g), allow_empty=D.allow_empty) for g in groups
        ]
    if mode == "by-rank":
        m = D.universe.m
        groups = [[] for _ in range(K)]
        for q in D.orders:
            remaining = list(range(1, m + 1))
            for pos, a in enumerate(q.items, start=1):
                groups[min(pos, K) - 1].append(
                    ChoiceEvent(a, tuple(remaining) + (END,), pos)
                )
                remaining.remove(a)
            if len(q) < m:
                pos = len(q) + 1
                groups[min(pos, K) - 1].append(
                    ChoiceEvent(END, tuple(remaining) + (END,), pos)
                )
        return groups
    raise ValueError(f"unknown stratification mode {mode!r}")


# ---------------------------------------------------------------------------
# Parameter layouts: flat vector <-> model objects
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ParamLayout:
    variant: str
    m: int
    d: int  # 0 when covariate-free
    K: int

    @property
    def size(self) -> int:
        m, d, K = self.m, self.d, self.K
        if self.variant == "c-i":
            return 2 * m
        if self.variant == "c-ci":
            return d + m + d
        if self.variant == "c-ld":
            return m + K * (m + d)
        if self.variant == "a":
            return m + 1 + d
        if self.variant == "a-pd":
            return 2 * m + d
        if self.variant == "a-s":
            return K * (m + 1 + d)
        raise ValueError(self.variant)

    def to_model(self, flat: np.ndarray, universe) -> object:
        m, d, K = self.m, self.d, self.K
        v = self.variant
        if v == "c-i":
            return CompositeModel(
                "c-i",
                CategoricalLengthParams(flat[:m]),
                PLParams(flat[m:]),
                universe,
            )
        if v == "c-ci":
            return CompositeModel(
                "c-ci",
                PoissonLengthParams(flat[:d], m),
                PLParams(flat[d : d + m], flat[d + m :]),
                universe,
            )
        if v == "c-ld":
            banks = flat[m:].reshape(K, m + d)
            pl_banks = tuple(
                PLParams(b[:m], b[m:] if d else None) for b in banks
            )
            return CompositeModel(
                "c-ld",
                CategoricalLengthParams(flat[:m]),
                StratifiedPLParams(pl_banks),
                universe,
            )
        if v == "a":
            beta = flat[m + 1 :] if d else None
            return AugmentedModel(
                "a", AugmentedNaiveParams(flat[: m + 1], beta), universe
            )
        if v == "a-pd":
            beta = flat[2 * m :] if d else None
            return AugmentedModel(
                "a-pd",
                PositionDependentParams(flat[:m], flat[m : 2 * m], beta),
                universe,
            )
        if v == "a-s":
            banks = flat.reshape(K, m + 1 + d)
            betas = banks[:, m + 1 :] if d else None
            return AugmentedModel(
                "a-s", StratifiedAugmentedParams(banks[:, : m + 1], betas), universe
            )
        raise ValueError(v)

    def from_model(self, model) -> np.ndarray:
        v = self.variant
        if v == "c-i":
            return np.concatenate(
                [model.length_params.logits, model.ranking_params.delta]
            )
        if v == "c-ci":
            return np.concatenate(
                [
                    model.length_params.weights,
                    model.ranking_params.delta,
                    model.ranking_params.beta,
                ]
            )
        if v == "c-ld":
            parts = [model.length_params.logits]
            for b in model.ranking_params.banks:
                parts.append(b.delta)
                if b.beta is not None:
                    parts.append(b.beta)
            return np.concatenate(parts)
        if v == "a":
            parts = [model.params.theta]
            if model.params.beta is not None:
                parts.append(model.params.beta)
            return np.concatenate(parts)
        if v == "a-pd":
            parts = [model.params.theta, model.params.gamma]
            if model.params.beta is not None:
                parts.append(model.params.beta)
            return np.concatenate(parts)
        if v == "a-s":
            if model.params.betas is not None:
                return np.hstack([model.params.banks, model.params.betas]).ravel()
            return model.params.banks.ravel()
        raise ValueError(v)


# ---------------------------------------------------------------------------
# NLL (public evaluation form: mean per record)
# ---------------------------------------------------------------------------

def model_log_prob(model, Q: PartialOrder, x_row=None) -> float:
    if isinstance(model, CompositeModel):
        return composite_log_prob(Q, model, x_row)
    return augmented_log_prob(Q, model, x_row)


def nll(D: Dataset, model) -> float:
    """Mean negative log-probability over records; -inf log-probs abort."""
    if D.n == 0:
        raise ValueError("empty dataset")
    total = 0.0
    for i, q in enumerate(D.orders):
        x_row = D.covariates.values[i] if D.covariates is not None else None
        lp = model_log_prob(model, q, x_row)
        if not np.isfinite(lp):
            raise NonFiniteLossError(
                f"record {i} ({list(q.items)}) has non-finite log-probability"
            )
        total += lp
    return -total / D.n


# ---------------------------------------------------------------------------
# Objective and analytic gradient
# ---------------------------------------------------------------------------

class _FitData:
    """Padded, duplicate-aggregated arrays prepared once per fit."""

    def __init__(self, D: Dataset):
        self.D = D
        self.n = D.n
        self.m = D.universe.m
        items, lengths = D.to_padded()
        self.items_raw = items
        self.lengths_raw = lengths
        if D.covariates is None:
            rows = np.hstack([lengths[:, None], items])
            uniq, counts = np.unique(rows, axis=0, return_counts=True)
            self.lengths = uniq[:, 0]
            self.items = uniq[:, 1:]
            self.weights = counts.astype(np.float64)
        else:
            self.lengths = lengths
            self.items = items
            self.weights = np.ones(self.n)
        self.length_counts = np.bincount(lengths, minlength=self.m + 1)[
            : self.m + 1
        ].astype(np.float64)


def objective_and_grad(
    variant: str, data: _FitData, layout: ParamLayout, flat: np.ndarray, cfg: FitConfig
):
    """Return (F, dF/dflat) for the full dataset."""
    m, d, K = layout.m, layout.d, layout.K
    n = data.n
    lam = cfg.lambda_l2
    grad = np.zeros_like(flat)

    if variant == "c-i":
        logits, delta = flat[:m], flat[m:]
        f_len, g_len = _categorical_nll_grad(logits, data.length_counts, n)
        ll, g_pl = pl_nll_grad(data.items, data.lengths, data.weights, delta)
        F = f_len - ll / n
        grad[:m] = g_len
        grad[m:] = -g_pl / n
    elif variant == "c-ci":
        F, grad[:] = _cci_nll_grad(data, layout, flat)
    elif variant == "c-ld":
        F, grad[:] = _cld_nll_grad(data, layout, flat, cfg)
        # Laplacian and per-bank l2 are handled below with the shared terms
    elif variant == "a":
        if d:
            F, grad[:] = _aug_cov_nll_grad("a", data, layout, flat)
        else:
            ll_by, g, _ = augs_nll_grad(
                data.items, data.lengths, data.weights, flat[None, :].copy()
            )
            F = -ll_by.sum() / n
            grad[:] = -g[0] / n
    elif variant == "a-pd":
        if d:
            F, grad[:] = _aug_cov_nll_grad("a-pd", data, layout, flat)
        else:
            ll, gt, gg = apd_nll_grad(
                data.items, data.lengths, data.weights, flat[:m], flat[m:]
            )
            F = -ll / n
            grad[:m] = -gt / n
            grad[m:] = -gg / n
    elif variant == "a-s":
        if d:
            F, grad[:] = _aug_cov_nll_grad("a-s", data, layout, flat)
        else:
            banks = flat.reshape(K, m + 1)
            ll_by, g, ev_by = augs_nll_grad(
                data.items, data.lengths, data.weights, np.ascontiguousarray(banks)
            )
            scale = np.where(ev_by > 0, 1.0 / np.maximum(ev_by, 1.0), 0.0)
            F = float(-(ll_by * scale).sum())
            grad[:] = (-g * scale[:, None]).ravel()
    else:
        raise ValueError(f"unknown variant {variant!r}")

    F += l2_penalty(flat, lam)
    grad += 2.0 * lam * flat

    if variant in ("c-ld", "a-s") and cfg.lambda_laplacian:
        if variant == "c-ld":
            banks = flat[m:].reshape(K, m + d)
            F += laplacian_penalty(banks, cfg.lambda_laplacian)
            grad[m:] += _laplacian_grad(banks, cfg.lambda_laplacian).ravel()
        else:
            banks = flat.reshape(K, m + 1 + d)
            F += laplacian_penalty(banks, cfg.lambda_laplacian)
            grad[:] += _laplacian_grad(banks, cfg.lambda_laplacian).ravel()
    return float(F), grad


def _categorical_nll_grad(logits, length_counts, n):
    p = softmax(logits)
    counts = length_counts[1:]
    f = -(counts @ (np.log(p))) / n
    g = (counts.sum() * p - counts) / n
    return float(f), g


def _pl_record_ll_grad(items0, u):
    """Log-prob of one record's sequential choices; gradient w.r.t. utilities."""
    ml = u.shape[0]
    avail = np.ones(ml, dtype=bool)
    dll = np.zeros(ml)
    ll = 0.0
    for a in items0:
        z = logsumexp(u[avail])
        ll += u[a] - z
        p = np.zeros(ml)
        p[avail] = np.exp(u[avail] - z)
        dll -= p
        dll[a] += 1.0
        avail[a] = False
    return ll, dll


def _cci_nll_grad(data: _FitData, layout: ParamLayout, flat):
    m, d = layout.m, layout.d
    rate_w, delta, beta = flat[:d], flat[d : d + m], flat[d + m :]
    X = data.D.covariates.values
    n = data.n
    F = 0.0
    grad = np.zeros_like(flat)
    for i in range(n):
        x_row = X[i]
        x_agent = x_row.mean(axis=0)
        k = int(data.lengths_raw[i])
        lam_rate = float(np.exp(rate_w @ x_agent))
        F -= poisson_clipped_log_pmf(lam_rate, m)[k - 1]
        dld = poisson_clipped_dlogp_dlam(k, lam_rate, m)
        grad[:d] -= dld * lam_rate * x_agent
        u = delta + x_row @ beta
        items0 = data.items_raw[i, :k]
        ll, dll = _pl_record_ll_grad(items0, u)
        F -= ll
        grad[d : d + m] -= dll
        grad[d + m :] -= x_row.T @ dll
    return F / n, grad / n


def _cld_nll_grad(data: _FitData, layout: ParamLayout, flat, cfg: FitConfig):
    m, d, K = layout.m, layout.d, layout.K
    n = data.n
    logits = flat[:m]
    banks = flat[m:].reshape(K, m + d)
    F, g_len = _categorical_nll_grad(logits, data.length_counts, n)
    grad = np.zeros_like(flat)
    grad[:m] = g_len
    strata = np.minimum(np.maximum(data.lengths, 1), K) - 1
    for b in range(K):
        mask = strata == b
        cnt = float(data.weights[mask].sum())
        if cnt == 0:
            continue
        if d == 0:
            ll, g = pl_nll_grad(
                np.ascontiguousarray(data.items[mask]),
                np.ascontiguousarray(data.lengths[mask]),
                np.ascontiguousarray(data.weights[mask]),
                np.ascontiguousarray(banks[b, :m]),
            )
            F += -ll / cnt
            grad[m + b * m : m + (b + 1) * m] = -g / cnt
        else:
            X = data.D.covariates.values
            gb = np.zeros(m + d)
            ll_sum = 0.0
            for i in np.flatnonzero(mask):
                x_row = X[i]
                u = banks[b, :m] + x_row @ banks[b, m:]
                k = int(data.lengths[i])
                ll, dll = _pl_record_ll_grad(data.items[i, :k], u)
                ll_sum += ll
                gb[:m] += dll
                gb[m:] += x_row.T @ dll
            F += -ll_sum / cnt
            lo = m + b * (m + d)
            grad[lo : lo + m + d] = -gb / cnt
    return F, grad


def _aug_cov_nll_grad(variant, data: _FitData, layout: ParamLayout, flat):
    """Per-record event loop for covariate-linear augmented models."""
    m, d, K = layout.m, layout.d, layout.K
    n = data.n
    X = data.D.covariates.values
    grad = np.zeros_like(flat)
    if variant == "a-s":
        banks = flat.reshape(K, m + 1 + d)
        ll_by = np.zeros(K)
        ev_by = np.zeros(K)
        g_by = np.zeros_like(banks)
    else:
        F = 0.0

    for i in range(n):
        x_row = X[i]
        k = int(data.lengths_raw[i])
        events = list(data.items_raw[i, :k])
        if k < m:
            events.append(-1)  # END
        avail = np.ones(m + 1, dtype=bool)
        for pos, chosen in enumerate(events, start=1):
            if variant == "a":
                u = np.empty(m + 1)
                u[:m] = flat[:m] + x_row @ flat[m + 1 :]
                u[m] = flat[m]
            elif variant == "a-pd":
                u = np.empty(m + 1)
                u[:m] = flat[:m] + x_row @ flat[2 * m :]
                u[m] = flat[m + pos - 1]
            else:
                b = min(pos, K) - 1
                u = banks[b, : m + 1].copy()
                u[:m] += x_row @ banks[b, m + 1 :]
            c = m if chosen == -1 else int(chosen)
            z = logsumexp(u[avail])
            ll = u[c] - z
            p = np.zeros(m + 1)
            p[avail] = np.exp(u[avail] - z)
            dll = -p
            dll[c] += 1.0
            if variant == "a":
                F -= ll
                grad[:m] -= dll[:m]
                grad[m] -= dll[m]
                grad[m + 1 :] -= x_row.T @ dll[:m]
            elif variant == "a-pd":
                F -= ll
                grad[:m] -= dll[:m]
                grad[m + pos - 1] -= dll[m]
                grad[2 * m :] -= x_row.T @ dll[:m]
            else:
                b = min(pos, K) - 1
                ll_by[b] += ll
                ev_by[b] += 1.0
                g_by[b, : m + 1] += dll
                g_by[b, m + 1 :] += x_row.T @ dll[:m]
            if c < m:
                avail[c] = False
    if variant == "a-s":
        scale = np.where(ev_by > 0, 1.0 / np.maximum(ev_by, 1.0), 0.0)
        F = float(-(ll_by * scale).sum())
        grad[:] = (-g_by * scale[:, None]).ravel()
        return F, grad
    return F / n, grad / n


# ---------------------------------------------------------------------------
# Fitting
# ---------------------------------------------------------------------------

def fit(variant: str, D: Dataset, cfg: FitConfig | None = None) -> FitResult:
    """Minimize F by Adam until |F_t - F_{t-1}| < tol or max_epochs."""
    cfg = cfg or FitConfig()
    if variant not in ALL_VARIANTS:
        raise ValueError(f"unknown model variant {variant!r}")
    needs_cov = variant == "c-ci"
    if needs_cov and D.covariates is None:
        raise ValueError(f"{variant} requires covariates")
    d = D.covariates.d if D.covariates is not None else 0
    K = cfg.K if variant in ("c-ld", "a-s") else 1
    layout = ParamLayout(variant, D.universe.m, d, K)
    data = _FitData(D)

    flat = np.zeros(layout.size)
    mom = np.zeros_like(flat)
    vel = np.zeros_like(flat)
    b1, b2, eps = cfg.beta1, cfg.beta2, cfg.epsilon_opt
    rng = np.random.default_rng(cfg.seed)

    trace = []
    prev_F = None
    converged = False
    epoch = 0
    full_batch = cfg.batch_size == "full" or (
        isinstance(cfg.batch_size, int) and cfg.batch_size >= data.weights.shape[0]
    )
    step = 0
    for epoch in range(1, cfg.max_epochs + 1):
        if full_batch:
            F, g = objective_and_grad(variant, data, layout, flat, cfg)
            if not np.isfinite(F):
                raise NonFiniteLossError(
                    f"objective diverged at epoch {epoch}; trace={trace}"
                )
            step += 1
            flat = _adam_step(flat, g, mom, vel, step, cfg.learning_rate, b1, b2, eps)
            gnorm = float(np.linalg.norm(g))
        else:
            # mini-batches over the aggregated rows, reshuffled per epoch
            nrows = data.weights.shape[0]
            perm = rng.permutation(nrows)
            for lo in range(0, nrows, int(cfg.batch_size)):
                sub = perm[lo : lo + int(cfg.batch_size)]
                sub_data = _subset_fitdata(data, sub)
                _, g = objective_and_grad(variant, sub_data, layout, flat, cfg)
                step += 1
                flat = _adam_step(
                    flat, g, mom, vel, step, cfg.learning_rate, b1, b2, eps
                )
            F, g = objective_and_grad(variant, data, layout, flat, cfg)
            if not np.isfinite(F):
                raise NonFiniteLossError(
                    f"objective diverged at epoch {epoch}; trace={trace}"
                )
            gnorm = float(np.linalg.norm(g))
        trace.append((epoch, F, gnorm))
        if prev_F is not None and abs(F - prev_F) < cfg.tol:
            converged = True
            break
        prev_F = F

    model = layout.to_model(flat, D.universe)
    return FitResult(model=model, trace=trace, converged=converged, epochs_run=epoch)


def _adam_step(flat, g, mom, vel, t, lr, b1, b2, eps):
    mom *= b1
    mom += (1 - b1) * g
    vel *= b2
    vel += (1 - b2) * g * g
    mhat = mom / (1 - b1**t)
    vhat = vel / (1 - b2**t)
    return flat - lr * mhat / (np.sqrt(vhat) + eps)


def _subset_fitdata(data: _FitData, rows):
    sub = _FitData.__new__(_FitData)
    sub.D = data.D
    sub.m = data.m
    sub.items = data.items[rows]
    sub.lengths = data.lengths[rows]
    sub.weights = data.weights[rows]
    sub.items_raw = data.items_raw[rows] if data.D.covariates is not None else sub.items
    sub.lengths_raw = (
        data.lengths_raw[rows] if data.D.covariates is not None else sub.lengths
    )
    sub.n = int(sub.weights.sum())
    counts = np.zeros(data.m + 1)
    for ln, w in zip(sub.lengths, sub.weights):
        counts[int(ln)] += w
    sub.length_counts = counts
    return sub


# ---------------------------------------------------------------------------
# Cross-validation and grid search
# ---------------------------------------------------------------------------

def kfold_split(D: Dataset, folds: int = 5, seed: int = 0):
    """Disjoint, exhaustive, seed-deterministic (train, test) partition."""
    if D.n < folds:
        raise ValueError(f"need at least {folds} records, have {D.n}")
    perm = np.random.default_rng(seed).permutation(D.n)
    chunks = np.array_split(perm, folds)
    pairs = []
    for f in range(folds):
        test_idx = np.sort(chunks[f])
        train_idx = np.sort(np.concatenate([chunks[g] for g in range(folds) if g != f]))
        pairs.append((_subset_dataset(D, train_idx), _subset_dataset(D, test_idx)))
    return pairs


def _subset_dataset(D: Dataset, idx) -> Dataset:
    cov = None
    if D.covariates is not None:
        from .orders import CovariateTensor

        cov = CovariateTensor(D.covariates.values[idx])
    return Dataset(
        D.universe,
        tuple(D.orders[i] for i in idx),
        covariates=cov,
        allow_empty=D.allow_empty,
    )


def grid_search(
    variant: str,
    D: Dataset,
    Ks,
    lambda_laplacians,
    cfg: FitConfig | None = None,
    folds: int = 5,
):
    """5-fold-CV mean validation NLL for each (K, lambda_L); returns argmin + table."""
    cfg = cfg or FitConfig()
    table = []
    best = None
    for K in Ks:
        for lapl in lambda_laplacians:
            trial = FitConfig(
                learning_rate=cfg.learning_rate,
                beta1=cfg.beta1,
                beta2=cfg.beta2,
                epsilon_opt=cfg.epsilon_opt,
                lambda_l2=cfg.lambda_l2,
                lambda_laplacian=lapl,
                K=K,
                max_epochs=cfg.max_epochs,
                tol=cfg.tol,
                batch_size=cfg.batch_size,
                seed=cfg.seed,
            )
            nlls = []
            for train, test in kfold_split(D, folds, cfg.seed):
                res = fit(variant, train, trial)
                from .evaluation import test_nll

                nlls.append(test_nll(res.model, test).nll)
            mean_nll = float(np.mean(nlls))
            table.append((K, lapl, mean_nll))
            if best is None or mean_nll < best[2]:
                best = (K, lapl, mean_nll)
    return best[:2], table
