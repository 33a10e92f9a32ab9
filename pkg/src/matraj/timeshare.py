"""Time allocation across deployment patterns (a small epigraph LP).

Given per-pattern per-user rates, find stay durations t_i that maximize the
minimum per-user average rate over the horizon:

    max r  s.t.  (sum_i t_i * rates[i, k] + offsets[k]) / T >= r  for all k,
                 sum_i t_i = budget,  t_i >= 0.

offsets carry the rates accumulated during switching (zero in the ideal
case).  The problems are tiny (a handful of patterns/users), so a dense
two-phase simplex with Bland's rule is exact and always terminates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_TOL = 1e-9


class InfeasibleError(RuntimeError):
    """Phase-1 simplex ended with a positive artificial objective."""


@dataclass
class TimeAllocation:
    durations: np.ndarray   # (Gamma,) seconds
    min_rate: float         # bits/s/Hz, recomputed from durations


# ---------------------------------------------------------------------------
# dense two-phase simplex: max c^T x  s.t.  A x = b, x >= 0
# ---------------------------------------------------------------------------

def _simplex_core(tab: np.ndarray, basis: list, cost: np.ndarray,
                  n_allowed: int) -> None:
    """Minimize cost over the tableau in place (Bland's anti-cycling rule).

    tab is (m, n_total+1) with the rhs in the last column; basis holds the
    current basic column of each row.  Only columns < n_allowed may enter.
    """
    m = tab.shape[0]
    while True:
        cb = cost[basis]
        reduced = cost[:n_allowed] - cb @ tab[:, :n_allowed]
        entering = -1
        for j in range(n_allowed):
            if reduced[j] < -_TOL:
                entering = j
                break
        if entering < 0:
            return
        col = tab[:, entering]
        best, leave = np.inf, -1
        for i in range(m):
            if col[i] > _TOL:
                ratio = tab[i, -1] / col[i]
                if ratio < best - _TOL or (ratio < best + _TOL
                                           and (leave < 0 or basis[i] < basis[leave])):
                    best, leave = min(best, ratio), i
        if leave < 0:
            raise InfeasibleError("unbounded linear program")
        piv = tab[leave, entering]
        tab[leave] /= piv
        for i in range(m):
            if i != leave and abs(tab[i, entering]) > 0.0:
                tab[i] -= tab[i, entering] * tab[leave]
        basis[leave] = entering


def _solve_lp(c: np.ndarray, A: np.ndarray, b: np.ndarray) -> np.ndarray:
    """max c^T x s.t. A x = b, x >= 0; returns an optimal vertex x."""
    A = np.array(A, dtype=float)
    b = np.array(b, dtype=float)
    neg = b < 0
    A[neg] *= -1.0
    b[neg] *= -1.0
    m, n = A.shape

    # phase 1: artificial basis
    tab = np.hstack([A, np.eye(m), b[:, None]])
    basis = list(range(n, n + m))
    cost1 = np.concatenate([np.zeros(n), np.ones(m)])
    _simplex_core(tab, basis, cost1, n_allowed=n + m)
    if cost1[basis] @ tab[:, -1] > _TOL * (1.0 + abs(b).max(initial=0.0)):
        raise InfeasibleError("no feasible point")
    # pivot remaining artificials out (or identify redundant rows)
    for i in range(m):
        if basis[i] >= n:
            row = tab[i, :n]
            j = int(np.argmax(np.abs(row)))
            if abs(row[j]) > _TOL:
                piv = tab[i, j]
                tab[i] /= piv
                for r in range(m):
                    if r != i and abs(tab[r, j]) > 0.0:
                        tab[r] -= tab[r, j] * tab[i]
                basis[i] = j

    # phase 2 on the original columns only
    cost2 = np.concatenate([-np.asarray(c, dtype=float), np.zeros(m)])
    keep = [i for i in range(m) if basis[i] < n]
    tab = tab[keep]
    basis = [basis[i] for i in keep]
    _simplex_core(tab, basis, cost2, n_allowed=n)

    x = np.zeros(n)
    for i, bi in enumerate(basis):
        x[bi] = tab[i, -1]
    return x


# ---------------------------------------------------------------------------
# the allocation problem
# ---------------------------------------------------------------------------

def allocate_time(rates: np.ndarray, budget: float, offsets: np.ndarray,
                  horizon: float) -> TimeAllocation:
    """Optimal vertex of the min-average-rate maximization LP.

    Among optimal allocations, returns the one minimizing sum_i i*t_i
    (earliest-pattern-heavy) for determinism, via a second lexicographic LP.
    """
    rates = np.atleast_2d(np.asarray(rates, dtype=float))
    gamma, k = rates.shape
    offsets = np.zeros(k) if offsets is None else np.asarray(offsets, dtype=float)
    if budget < 0:
        raise ValueError("budget must be >= 0")
    if not np.all(np.isfinite(rates)) or np.any(rates < 0):
        raise ValueError("rates must be finite and nonnegative")
    if np.any(offsets < 0):
        raise ValueError("offsets must be >= 0")
    if not horizon > 0:
        raise ValueError("horizon must be > 0")

    # stage 1 variables: [t_1..t_G, r, slack_1..slack_K]
    # rows: horizon*r - sum_i rates[i,k] t_i + slack_k = offsets[k]   (per user)
    #       sum_i t_i = budget
    n = gamma + 1 + k
    A = np.zeros((k + 1, n))
    b = np.zeros(k + 1)
    for j in range(k):
        A[j, :gamma] = -rates[:, j]
        A[j, gamma] = horizon
        A[j, gamma + 1 + j] = 1.0
        b[j] = offsets[j]
    A[k, :gamma] = 1.0
    b[k] = budget
    c = np.zeros(n)
    c[gamma] = 1.0
    x = _solve_lp(c, A, b)
    r_star = x[gamma]

    # stage 2: fix the achieved rate, minimize sum_i i*t_i among optima
    # rows: sum_i rates[i,k] t_i - surplus_k = r*T - offsets[k]
    n2 = gamma + k
    A2 = np.zeros((k + 1, n2))
    b2 = np.zeros(k + 1)
    slack = _TOL * max(1.0, abs(r_star) * horizon)  # keep stage-1 vertex feasible
    for j in range(k):
        A2[j, :gamma] = rates[:, j]
        A2[j, gamma + j] = -1.0
        b2[j] = max(0.0, r_star * horizon - offsets[j] - slack)
    A2[k, :gamma] = 1.0
    b2[k] = budget
    c2 = np.zeros(n2)
    c2[:gamma] = -np.arange(1, gamma + 1, dtype=float)
    t = _solve_lp(c2, A2, b2)[:gamma]

    averages = (rates.T @ t + offsets) / horizon
    return TimeAllocation(durations=t, min_rate=float(averages.min()))
