"""Student-proposing deferred acceptance with capacities and priorities.

A generic assignment harness: students submit (possibly truncated) ranked
lists over programs, each program has a capacity and a strict priority
order over students. The output is the student-optimal stable matching
with respect to the submitted lists.
"""

from dataclasses import dataclass

import numpy as np

from .orders import PartialOrder

UNASSIGNED = 0


@dataclass(frozen=True)
class Market:
    """preferences: per-student PartialOrder over programs (1-based ids);
    capacities: (m,) nonnegative ints; priority_rank[p][s]: rank of student
    s at program p (lower is better)."""

    preferences: tuple
    capacities: tuple
    priority_rank: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "preferences", tuple(self.preferences))
        object.__setattr__(
            self, "capacities", tuple(int(c) for c in self.capacities)
        )
        pr = np.asarray(self.priority_rank, dtype=np.int64)
        object.__setattr__(self, "priority_rank", pr)
        m = len(self.capacities)
        n = len(self.preferences)
        if pr.shape != (m, n):
            raise ValueError(f"priority_rank shape {pr.shape}, expected ({m}, {n})")
        if any(c < 0 for c in self.capacities):
            raise ValueError("capacities must be nonnegative")

    @property
    def n(self) -> int:
        return len(self.preferences)

    @property
    def m(self) -> int:
        return len(self.capacities)


def uniform_priorities(n: int, m: int, seed: int) -> np.ndarray:
    """One independent uniform priority permutation per program."""
    rng = np.random.default_rng(seed)
    rank = np.empty((m, n), dtype=np.int64)
    for p in range(m):
        order = rng.permutation(n)
        rank[p, order] = np.arange(n)
    return rank


def make_market(preferences, capacities, seed: int = 0, priority_rank=None) -> Market:
    prefs = tuple(preferences)
    caps = tuple(capacities)
    if priority_rank is None:
        priority_rank = uniform_priorities(len(prefs), len(caps), seed)
    return Market(prefs, caps, priority_rank)


@dataclass(frozen=True)
class Matching:
    """assignment[s]: program id (1-based) or UNASSIGNED (0)."""

    assignment: tuple

    def assigned(self, s: int) -> int:
        return self.assignment[s]


def deferred_acceptance(market: Market) -> Matching:
    n, m = market.n, market.m
    next_choice = [0] * n
    held: list[list[int]] = [[] for _ in range(m)]  # students held, any order
    assignment = [UNASSIGNED] * n
    free = list(range(n))
    pr = market.priority_rank
    while free:
        s = free.pop()
        prefs = market.preferences[s].items
        while next_choice[s] < len(prefs):
            p = prefs[next_choice[s]] - 1
            next_choice[s] += 1
            cap = market.capacities[p]
            if cap == 0:
                continue
            if len(held[p]) < cap:
                held[p].append(s)
                assignment[s] = p + 1
                break
            worst = max(held[p], key=lambda t: pr[p, t])
            if pr[p, s] < pr[p, worst]:
                held[p].remove(worst)
                assignment[worst] = UNASSIGNED
                free.append(worst)
                held[p].append(s)
                assignment[s] = p + 1
                break
        # list exhausted -> stays unassigned
    return Matching(tuple(assignment))


def find_blocking_pair(market: Market, matching: Matching):
    """Exhaustive scan; returns a (student, program) blocking pair or None."""
    pr = market.priority_rank
    held: list[list[int]] = [[] for _ in range(market.m)]
    for s, p in enumerate(matching.assignment):
        if p != UNASSIGNED:
            held[p - 1].append(s)
    for s in range(market.n):
        prefs = market.preferences[s].items
        assigned = matching.assignment[s]
        assigned_pos = prefs.index(assigned) if assigned in prefs else len(prefs)
        for pos in range(assigned_pos):
            p = prefs[pos] - 1
            if market.capacities[p] == 0:
                continue
            if len(held[p]) < market.capacities[p]:
                return (s, p + 1)
            worst = max(held[p], key=lambda t: pr[p, t])
            if pr[p, s] < pr[p, worst]:
                return (s, p + 1)
    return None


@dataclass(frozen=True)
class OutcomeRates:
    top1: float
    top3: float
    any_listed: float


def outcome_stats(matching: Matching, preferences) -> OutcomeRates:
    """Fractions assigned to top-1, any of top-3, and any listed program."""
    n = len(matching.assignment)
    top1 = top3 = anyl = 0
    for s, p in enumerate(matching.assignment):
        prefs = preferences[s].items
        if p == UNASSIGNED or p not in prefs:
            continue
        pos = prefs.index(p)
        anyl += 1
        if pos < 3:
            top3 += 1
        if pos == 0:
            top1 += 1
    return OutcomeRates(top1 / n, top3 / n, anyl / n)
