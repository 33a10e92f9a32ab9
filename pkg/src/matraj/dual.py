"""Ellipsoid-method dual loop: optimal fairness weights and the pattern set.

The dual function f(mu) = max_x sum_k mu_k log2(1 + gamma_k(x)) is evaluated
by multi-start SCA; the dual problem min f(mu) s.t. sum mu = 1, mu > 0 is
solved with ellipsoid cuts.  The output is the set of deployment patterns
that concurrently maximize the weighted objective at the final weights,
which the time-sharing stage then schedules.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .channel import check_pattern
from .mmse import rate_matrix, rate_vector, weighted_rate
from .scenario import Scenario, SolverConfig
from .sca import random_pattern, sca_iterate

SUM_TOL = 1e-9            # |sum(mu) - 1| treated as on the simplex
# Simplex tolerance as a fraction of the ellipsoid extent along (1,...,1).
# An e-cut reduces the violation by extent/(K+1) while the extent only
# shrinks by K/(K+1), so any fraction > 1/(2K+1) makes the feasibility
# phase terminate; 0.25 is safe for K >= 2 and keeps objective cuts frequent.
FEAS_CUT_FRACTION = 0.25


class EllipsoidCollapseError(RuntimeError):
    """g^T B g <= 0: the ellipsoid matrix lost positive definiteness."""


@dataclass
class DualState:
    mu: np.ndarray          # (K,)
    B: np.ndarray           # (K, K) symmetric positive definite
    iteration: int = 0


@dataclass
class PatternSet:
    patterns: list          # Gamma feasible patterns, lexicographically sorted
    rates: np.ndarray       # (Gamma, K) per-user rates at each pattern
    mu: np.ndarray          # weights the set was extracted at
    dual_value: float       # f(mu)
    converged: bool = True
    stationary: list = field(default_factory=list)  # all deduped SCA limits

    @property
    def gamma(self) -> int:
        return len(self.patterns)


def canonicalize_pattern(x: np.ndarray, scn: Scenario) -> np.ndarray:
    """Right-shift the pattern so the last track sits at L.

    Rates are invariant under common track translation, so this picks a
    unique representative from each translation ridge of stationary points.
    """
    x = np.asarray(x, dtype=float)
    return x + (scn.geometry.span - x[-1])


def default_starts(scn: Scenario, cfg: SolverConfig,
                   rng: np.random.Generator) -> list[np.ndarray]:
    """S initial patterns: spread/compact corner layouts, then random draws."""
    geom = scn.geometry
    m = geom.num_tracks
    off = geom.min_separation * np.arange(m)
    starts = [np.linspace(0.0, geom.span, m) if m > 1 else np.array([geom.span / 2]),
              off.astype(float),                      # packed left
              off + (geom.span - off[-1])]            # packed right
    starts = starts[: cfg.num_starts]
    while len(starts) < cfg.num_starts:
        starts.append(random_pattern(geom, rng))
    return starts


def _dedup_candidates(scn: Scenario, mu: np.ndarray, stationary: list[np.ndarray],
                      cfg: SolverConfig) -> tuple[float, list[np.ndarray], list[np.ndarray]]:
    """Merge near-duplicates, keep the concurrently-maximizing subset."""
    objs = np.array([weighted_rate(scn, mu, x) for x in stationary])
    order = np.argsort(-objs, kind="stable")
    kept, kept_objs = [], []
    for i in order:
        x = stationary[i]
        if any(np.max(np.abs(x - y)) <= cfg.pattern_merge_tol for y in kept):
            continue
        kept.append(x)
        kept_objs.append(objs[i])
    f = kept_objs[0]
    cut = f - cfg.concurrent_max_rel_tol * abs(f)
    winners = [x for x, o in zip(kept, kept_objs) if o >= cut]
    winners.sort(key=tuple)
    return float(f), winners, kept


def dual_function(scn: Scenario, mu: np.ndarray, cfg: SolverConfig | None = None,
                  starts: list[np.ndarray] | None = None,
                  rng: np.random.Generator | None = None,
                  ) -> tuple[float, PatternSet]:
    """Evaluate f(mu) by multi-start SCA; return the maximizing pattern set."""
    cfg = cfg or scn.solver
    mu = np.asarray(mu, dtype=float)
    if rng is None:
        rng = np.random.default_rng(cfg.rng_seed)
    if starts is None:
        starts = default_starts(scn, cfg, rng)
    stationary = []
    for x0 in starts:
        x, _ = sca_iterate(scn, mu, x0, cfg)
        stationary.append(canonicalize_pattern(x, scn))
    f, winners, kept = _dedup_candidates(scn, mu, stationary, cfg)
    ps = PatternSet(
        patterns=winners,
        rates=rate_matrix(scn, winners),
        mu=mu.copy(),
        dual_value=f,
        stationary=kept,
    )
    return f, ps


def subgradient(state: DualState, candidates: PatternSet | None,
                lower_tol: float = SUM_TOL,
                upper_tol: float = SUM_TOL) -> np.ndarray:
    """Ellipsoid cut direction for the current dual variables.

    The objective cut g = rates(x*) is an exact subgradient of f at the
    center even off the simplex (scaling mu does not change the argmax),
    but it only never discards the optimum when sum(mu) >= 1: below the
    simplex f(center) < f(mu*) and a central cut can slice mu* off.  Hence
    the band is asymmetric: any sum(mu) < 1 gets the -e feasibility cut.
    """
    mu = state.mu
    k = len(mu)
    if mu.min() <= 0.0:
        g = np.zeros(k)
        g[int(np.argmin(mu))] = -1.0
        return g
    s = mu.sum()
    if s > 1.0 + upper_tol:
        return np.ones(k)
    if s < 1.0 - lower_tol:
        return -np.ones(k)
    if candidates is None or candidates.gamma == 0:
        raise ValueError("objective cut requires the dual_function output at mu")
    # rates at the selected (lexicographically smallest) maximizing pattern
    return candidates.rates[0].astype(float).copy()


def ellipsoid_step(state: DualState, gra: np.ndarray) -> DualState:
    """One cut: shrink the ellipsoid and move its center (deep-cut-free form)."""
    k = len(state.mu)
    if k < 2:
        raise ValueError("ellipsoid update undefined for K=1 (simplex is a point)")
    B = state.B
    g = np.asarray(gra, dtype=float)
    Bg = B @ g
    q = float(g @ Bg)
    if q <= 0.0:
        raise EllipsoidCollapseError(f"g^T B g = {q:g} <= 0")
    mu = state.mu - Bg / ((k + 1) * np.sqrt(q))
    B_new = (k * k) / (k * k - 1.0) * (B - (2.0 / (k + 1)) * np.outer(Bg, Bg) / q)
    B_new = 0.5 * (B_new + B_new.T)
    min_eig = float(np.linalg.eigvalsh(B_new)[0])
    if min_eig < -1e-12 * max(1.0, float(np.trace(B_new))):
        raise EllipsoidCollapseError(f"B lost definiteness (min eig {min_eig:g})")
    return DualState(mu=mu, B=B_new, iteration=state.iteration + 1)


def run_algorithm1(scn: Scenario, cfg: SolverConfig | None = None,
                   trace_path=None) -> PatternSet:
    """Full dual loop: returns the pattern set at the converged weights.

    Emits an optional CSV convergence trace (iteration, mu, f, criterion).
    Warm-starts each dual evaluation from the previously found stationary
    patterns so the inner SCA only refines them as mu drifts.
    """
    cfg = cfg or scn.solver
    k = scn.num_users
    rng = np.random.default_rng(cfg.rng_seed)

    rows = []
    if k == 1:
        f, ps = dual_function(scn, np.array([1.0]), cfg, rng=rng)
        _write_trace(trace_path, rows)
        return ps

    state = DualState(mu=np.full(k, 1.0 / k), B=float(k) * np.eye(k))
    pool: list[np.ndarray] = []   # stationary patterns from previous evals
    converged = False
    mu_best, f_best = None, np.inf
    for _ in range(cfg.ellipsoid_max_iters):
        mu = state.mu
        s = mu.sum()
        f = None
        tol_up = _simplex_tol(state.B)
        is_objective_cut = mu.min() > 0.0 and 1.0 - SUM_TOL <= s <= 1.0 + tol_up
        if not is_objective_cut:
            gra = subgradient(state, None, lower_tol=SUM_TOL, upper_tol=tol_up)
        else:
            if pool:
                starts = pool + [random_pattern(scn.geometry, rng)]
            else:
                starts = default_starts(scn, cfg, rng)
            f, cand = dual_function(scn, mu / s, cfg, starts=starts, rng=rng)
            pool = _refresh_pool(cfg, cand, pool)
            if f < f_best:
                mu_best, f_best = mu / s, f
            gra = subgradient(state, cand, lower_tol=np.inf, upper_tol=np.inf)
        crit = float(np.sqrt(gra @ state.B @ gra))
        rows.append((state.iteration, mu.copy(), f, crit))
        # only an objective cut's extent bounds the dual suboptimality gap
        if is_objective_cut and crit < cfg.ellipsoid_tol:
            converged = True
            break
        state = ellipsoid_step(state, gra)

    # Extract at the better of the incumbent and the final center, both
    # re-evaluated with the final warm pool: mid-run f values can be
    # underestimates (the pool was smaller then), so they are only used to
    # nominate the incumbent, never trusted as-is.
    center = np.clip(state.mu, 1e-12, None)
    center = center / center.sum()
    candidates_mu = [center] if mu_best is None else [mu_best, center]
    f, ps = np.inf, None
    for mu_c in candidates_mu:
        f_c, ps_c = dual_function(scn, mu_c, cfg, starts=pool or None, rng=rng)
        pool = _refresh_pool(cfg, ps_c, pool)
        if f_c < f:
            f, ps = f_c, ps_c
    ps.converged = converged
    for x in ps.patterns:
        check_pattern(x, scn.geometry)
    _write_trace(trace_path, rows)
    return ps


def _simplex_tol(B: np.ndarray) -> float:
    """Adaptive |sum(mu)-1| tolerance tied to the ellipsoid extent along e.

    Objective cuts only help once mu is (nearly) on the simplex; shrinking
    the tolerance with the ellipsoid keeps a healthy mix of cut types.
    """
    k = B.shape[0]
    e = np.ones(k)
    return max(SUM_TOL, FEAS_CUT_FRACTION * float(np.sqrt(e @ B @ e)))


def _refresh_pool(cfg: SolverConfig, cand: PatternSet,
                  prev_pool: list[np.ndarray]) -> list[np.ndarray]:
    """Warm-start pool: every stationary point seen recently, deduped.

    Non-winning stationary points are kept because they become the winners
    as mu moves; re-running SCA from a stationary point is nearly free.
    """
    pool = [x.copy() for x in cand.stationary]
    for x in prev_pool:
        if len(pool) >= 2 * cfg.num_starts:
            break
        if all(np.max(np.abs(x - y)) > cfg.pattern_merge_tol for y in pool):
            pool.append(x)
    return pool


def _write_trace(trace_path, rows) -> None:
    if trace_path is None:
        return
    with open(trace_path, "w", newline="") as fh:
        w = csv.writer(fh)
        if rows:
            k = len(rows[0][1])
            w.writerow(["iteration"] + [f"mu_{i+1}" for i in range(k)]
                       + ["f", "criterion"])
            for it, mu, f, crit in rows:
                w.writerow([it] + [f"{v:.12g}" for v in mu]
                           + ["" if f is None else f"{f:.12g}", f"{crit:.12g}"])
        else:
            w.writerow(["iteration", "f", "criterion"])
