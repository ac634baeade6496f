"""Batch log-likelihood and gradient kernels for covariate-free models.

Inputs are padded ballot arrays: ``items`` is (n, kmax) of 0-based ids with
-1 padding, ``lengths`` (n,), and ``weights`` (n,) multiplicities. Every
kernel returns weighted log-likelihood sums and the gradient of that sum
with respect to the raw parameters.

Each kernel has an explicit-loop implementation (numba-compiled when the
numba backend is active) and a vectorized pure-numpy implementation; the
public names dispatch on the backend. Both are exercised by the tests and
compared by the benchmark script.
"""

import numpy as np

from .backend import USE_NUMBA, maybe_jit


# ---------------------------------------------------------------------------
# Plackett-Luce over the plain universe (composite ranking component)
# ---------------------------------------------------------------------------

def _pl_loop(items, lengths, weights, theta):
    n, kmax = items.shape
    m = theta.shape[0]
    shift = theta.max()
    e = np.exp(theta - shift)
    S = e.sum()
    grad = np.zeros(m)
    total = 0.0
    invcum = np.empty(kmax)
    for i in range(n):
        w = weights[i]
        k = lengths[i]
        rem = S
        acc = 0.0
        for j in range(k):
            a = items[i, j]
            total += w * (theta[a] - shift - np.log(rem))
            acc += 1.0 / rem
            invcum[j] = acc
            rem -= e[a]
        if k > 0:
            invtot = invcum[k - 1]
            for a in range(m):
                grad[a] -= w * e[a] * invtot
            for j in range(k):
                a = items[i, j]
                grad[a] += w * (1.0 + e[a] * (invtot - invcum[j]))
    return total, grad


_pl_loop_jit = maybe_jit(_pl_loop)


def pl_nll_grad_numpy(items, lengths, weights, theta):
    """Vectorized twin of the loop kernel; identical contract."""
    n, kmax = items.shape
    m = theta.shape[0]
    shift = theta.max()
    e = np.exp(theta - shift)
    S = e.sum()
    valid = items >= 0
    it = np.where(valid, items, 0)
    ei = e[it] * valid
    rem = S - (np.cumsum(ei, axis=1) - ei)
    rem_safe = np.where(valid, rem, 1.0)
    ll = (((theta - shift)[it] - np.log(rem_safe)) * valid).sum(axis=1)
    total = float(weights @ ll)
    inv = np.where(valid, 1.0 / rem_safe, 0.0)
    invcum = np.cumsum(inv, axis=1)
    invtot = invcum[:, -1]
    grad = -e * float(weights @ invtot)
    corr = weights[:, None] * (1.0 + e[it] * (invtot[:, None] - invcum))
    np.add.at(grad, it[valid], corr[valid])
    return total, grad


def pl_nll_grad(items, lengths, weights, theta):
    """Weighted sum of PL log-marginals and its gradient w.r.t. theta (m,)."""
    if USE_NUMBA:
        return _pl_loop_jit(items, lengths, weights, theta)
    return pl_nll_grad_numpy(items, lengths, weights, theta)


# ---------------------------------------------------------------------------
# Stratified augmented model (naive A is the K=1 case)
# ---------------------------------------------------------------------------

def _augs_loop(items, lengths, weights, banks):
    K, mp1 = banks.shape
    m = mp1 - 1
    n, kmax = items.shape
    shifts = np.empty(K)
    e = np.empty((K, mp1))
    S = np.empty(K)
    for b in range(K):
        shifts[b] = banks[b].max()
        for a in range(mp1):
            e[b, a] = np.exp(banks[b, a] - shifts[b])
        S[b] = e[b].sum()
    ll_by = np.zeros(K)
    ev_by = np.zeros(K)
    grad = np.zeros((K, mp1))
    for i in range(n):
        w = weights[i]
        k = lengths[i]
        nev = k if k == m else k + 1
        for j in range(1, nev + 1):
            b = min(j, K) - 1
            rem = S[b]
            for t in range(j - 1):
                rem -= e[b, items[i, t]]
            c = m if j == k + 1 else items[i, j - 1]
            ll_by[b] += w * (banks[b, c] - shifts[b] - np.log(rem))
            ev_by[b] += w
            grad[b, c] += w
            inv = w / rem
            for a in range(mp1):
                grad[b, a] -= e[b, a] * inv
            for t in range(j - 1):
                a = items[i, t]
                grad[b, a] += e[b, a] * inv
    return ll_by, grad, ev_by


_augs_loop_jit = maybe_jit(_augs_loop)


def augs_nll_grad_numpy(items, lengths, weights, banks):
    """Vectorized twin: per-position columns, bank-specific prefix sums."""
    K, mp1 = banks.shape
    m = mp1 - 1
    n, kmax = items.shape
    shifts = banks.max(axis=1)
    e = np.exp(banks - shifts[:, None])
    S = e.sum(axis=1)
    ll_by = np.zeros(K)
    ev_by = np.zeros(K)
    grad = np.zeros((K, mp1))
    for j in range(1, kmax + 2):
        b = min(j, K) - 1
        item_rows = np.flatnonzero(lengths >= j)
        term_rows = np.flatnonzero((lengths == j - 1) & (lengths < m))
        for rows, terminal in ((item_rows, False), (term_rows, True)):
            if rows.size == 0:
                continue
            prefix_items = items[rows, : j - 1]
            rem = S[b] - e[b][prefix_items].sum(axis=1)
            chosen = np.full(rows.size, m) if terminal else items[rows, j - 1]
            w = weights[rows]
            ll_by[b] += w @ (banks[b][chosen] - shifts[b] - np.log(rem))
            ev_by[b] += w.sum()
            np.add.at(grad[b], chosen, w)
            inv = w / rem
            grad[b] -= e[b] * inv.sum()
            if j > 1:
                np.add.at(grad[b], prefix_items.ravel(),
                          (e[b][prefix_items] * inv[:, None]).ravel())
    return ll_by, grad, ev_by


def augs_nll_grad(items, lengths, weights, banks):
    """Per-stratum weighted log-likelihood sums, gradient (K, m+1), event counts.

    Position j (1-based, including the terminal END choice at k+1) belongs
    to stratum min(j, K). Records with k = m have no terminal factor.
    """
    if USE_NUMBA:
        return _augs_loop_jit(items, lengths, weights, banks)
    return augs_nll_grad_numpy(items, lengths, weights, banks)


# ---------------------------------------------------------------------------
# Position-dependent augmented model (A-PD)
# ---------------------------------------------------------------------------

def _apd_loop(items, lengths, weights, theta, gamma):
    m = theta.shape[0]
    n, kmax = items.shape
    shift = max(theta.max(), gamma.max())
    e = np.exp(theta - shift)
    eg = np.exp(gamma - shift)
    S = e.sum()
    total = 0.0
    gtheta = np.zeros(m)
    ggamma = np.zeros(m)
    for i in range(n):
        w = weights[i]
        k = lengths[i]
        rem_items = S
        for j in range(1, k + 1):
            denom = eg[j - 1] + rem_items
            c = items[i, j - 1]
            total += w * (theta[c] - shift - np.log(denom))
            gtheta[c] += w
            inv = w / denom
            ggamma[j - 1] -= eg[j - 1] * inv
            for a in range(m):
                gtheta[a] -= e[a] * inv
            for t in range(j - 1):
                a = items[i, t]
                gtheta[a] += e[a] * inv
            rem_items -= e[c]
        if k < m:
            denom = eg[k] + rem_items
            total += w * (gamma[k] - shift - np.log(denom))
            inv = w / denom
            ggamma[k] += w * (1.0 - eg[k] / denom)
            for a in range(m):
                gtheta[a] -= e[a] * inv
            for t in range(k):
                a = items[i, t]
                gtheta[a] += e[a] * inv
    return total, gtheta, ggamma


_apd_loop_jit = maybe_jit(_apd_loop)


def apd_nll_grad_numpy(items, lengths, weights, theta, gamma):
    m = theta.shape[0]
    n, kmax = items.shape
    shift = max(theta.max(), gamma.max())
    e = np.exp(theta - shift)
    eg = np.exp(gamma - shift)
    S = e.sum()
    total = 0.0
    gtheta = np.zeros(m)
    ggamma = np.zeros(m)
    for j in range(1, kmax + 2):
        item_rows = np.flatnonzero(lengths >= j)
        term_rows = np.flatnonzero((lengths == j - 1) & (lengths < m))
        for rows, terminal in ((item_rows, False), (term_rows, True)):
            if rows.size == 0 or (not terminal and j > kmax):
                continue
            prefix_items = items[rows, : j - 1]
            rem = S - e[prefix_items].sum(axis=1)
            denom = eg[j - 1] + rem
            w = weights[rows]
            inv = w / denom
            if terminal:
                total += float(w @ (gamma[j - 1] - shift - np.log(denom)))
                ggamma[j - 1] += float((w * (1.0 - eg[j - 1] / denom)).sum())
            else:
                chosen = items[rows, j - 1]
                total += float(w @ (theta[chosen] - shift - np.log(denom)))
                np.add.at(gtheta, chosen, w)
                ggamma[j - 1] -= eg[j - 1] * float(inv.sum())
            gtheta -= e * float(inv.sum())
            if j > 1:
                np.add.at(gtheta, prefix_items.ravel(),
                          (e[prefix_items] * inv[:, None]).ravel())
    return total, gtheta, ggamma


def apd_nll_grad(items, lengths, weights, theta, gamma):
    """Weighted A-PD log-likelihood sum and gradients w.r.t. theta and gamma."""
    if USE_NUMBA:
        return _apd_loop_jit(items, lengths, weights, theta, gamma)
    return apd_nll_grad_numpy(items, lengths, weights, theta, gamma)


ALL_IMPLEMENTATIONS = {
    "pl": {"loop": _pl_loop, "numpy": pl_nll_grad_numpy},
    "aug-s": {"loop": _augs_loop, "numpy": augs_nll_grad_numpy},
    "a-pd": {"loop": _apd_loop, "numpy": apd_nll_grad_numpy},
}
