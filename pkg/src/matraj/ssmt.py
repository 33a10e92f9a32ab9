"""Speed-constrained stay-then-move trajectory across the pattern set.

The tracks stay at each deployment pattern for an allocated duration, then
all slide in parallel at the speed cap toward the next pattern.  Pieces:
visiting order (shortest open Hamiltonian path in Chebyshev time),
transition kinematics with per-track arrival clamping, inter-track spacing
verification during motion, rate credit accumulated while moving, and the
final plan that falls back to the static deployment when moving does not
pay off within the horizon.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .baseline import static_optimal
from .channel import check_pattern
from .dual import PatternSet
from .mmse import rate_vector
from .scenario import Scenario, SolverConfig
from .timeshare import allocate_time

SPACING_SLACK = 1e-9


@dataclass
class SwitchSegment:
    start: np.ndarray        # pattern at motion start, (M,)
    target: np.ndarray       # pattern at motion end, (M,)
    duration: float          # Chebyshev time, seconds
    signs: np.ndarray        # per-track direction in {-1, 0, +1}
    arrivals: np.ndarray     # per-track arrival times, <= duration
    v_max: float
    min_separation: float


@dataclass
class SsmtPlan:
    ordering: list                   # visit order as indices into the pattern set
    patterns: list                   # patterns in visit order
    segments: list                   # Gamma-1 SwitchSegments (dynamic mode)
    stay_durations: np.ndarray       # seconds per visited pattern
    switching_rates: np.ndarray      # (K,) bits/Hz credited during motion
    t_swi: float                     # total switching time, seconds
    min_rate: float                  # min average rate, bits/s/Hz
    mode: str                        # "dynamic" | "static-fallback"


def switching_time(a: np.ndarray, b: np.ndarray, v_max: float) -> float:
    """Chebyshev travel time: all tracks move in parallel at v_max."""
    dist = float(np.max(np.abs(np.asarray(b, float) - np.asarray(a, float))))
    if dist == 0.0:
        return 0.0
    if v_max <= 0.0:
        return math.inf  # unreachable
    return dist / v_max


def make_segment(a: np.ndarray, b: np.ndarray, v_max: float,
                 min_separation: float) -> SwitchSegment:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    duration = switching_time(a, b, v_max)
    signs = np.sign(b - a)
    arrivals = (np.abs(b - a) / v_max) if v_max > 0 else np.zeros_like(a)
    return SwitchSegment(start=a, target=b, duration=duration, signs=signs,
                         arrivals=arrivals, v_max=v_max,
                         min_separation=min_separation)


def transition_pattern(seg: SwitchSegment, t: float) -> np.ndarray:
    """Pattern at time t into the segment; tracks clamp on arrival."""
    if not 0.0 <= t <= seg.duration + SPACING_SLACK:
        raise ValueError(f"t={t} outside segment duration {seg.duration}")
    travel = seg.v_max * np.minimum(t, seg.arrivals)
    return seg.start + seg.signs * travel


def _segment_times(seg: SwitchSegment, samples: int) -> np.ndarray:
    """Uniform sample times plus every per-track arrival breakpoint."""
    ts = np.linspace(0.0, seg.duration, samples)
    br = seg.arrivals[(seg.arrivals > 0.0) & (seg.arrivals < seg.duration)]
    return np.unique(np.concatenate([ts, br]))


def transition_patterns(seg: SwitchSegment, ts: np.ndarray) -> np.ndarray:
    """Patterns at many segment times at once, shape (len(ts), M)."""
    ts = np.asarray(ts, dtype=float)
    travel = seg.v_max * np.minimum(ts[:, None], seg.arrivals[None, :])
    return seg.start[None, :] + seg.signs[None, :] * travel


def verify_no_coupling(seg: SwitchSegment, samples: int) -> tuple[bool, float]:
    """Min inter-track spacing over the motion; true iff it never dips below d_min.

    Spacings are piecewise affine in t with breakpoints only at arrival
    times, so checking breakpoints (plus samples, defensively) is exact.
    """
    if seg.start.shape[0] < 2:
        return True, math.inf
    if samples < 2:
        raise ValueError("samples must be >= 2")
    xs = transition_patterns(seg, _segment_times(seg, samples))
    dmin = float(np.min(np.diff(xs, axis=1)))
    return dmin >= seg.min_separation - SPACING_SLACK, dmin


def switching_rates(scn: Scenario, seg: SwitchSegment,
                    cfg: SolverConfig | None = None) -> np.ndarray:
    """Per-user rate integral over the motion, bits/Hz (trapezoid rule)."""
    cfg = cfg or scn.solver
    if seg.duration == 0.0:
        return np.zeros(scn.num_users)
    ts = _segment_times(seg, cfg.quadrature_samples_per_segment)
    vals = np.array([rate_vector(scn, transition_pattern(seg, float(t)))
                     for t in ts])
    return np.trapezoid(vals, ts, axis=0)


def switching_rate(scn: Scenario, seg: SwitchSegment, k: int,
                   cfg: SolverConfig | None = None) -> float:
    return float(switching_rates(scn, seg, cfg)[k])


# ---------------------------------------------------------------------------
# visiting order: shortest open Hamiltonian path
# ---------------------------------------------------------------------------

def _held_karp_path(dist: np.ndarray) -> tuple[list, float]:
    """Exact min-cost open path over all nodes, free endpoints.

    f[S][j] = cost of the best path covering subset S that starts at j;
    reconstruction scans candidates in index order, so ties resolve to the
    lexicographically smallest sequence.
    """
    n = dist.shape[0]
    full = (1 << n) - 1
    f = np.full((1 << n, n), np.inf)
    for j in range(n):
        f[1 << j, j] = 0.0
    for s in range(1, full + 1):
        if s & (s - 1) == 0:
            continue
        for j in range(n):
            if not (s >> j) & 1:
                continue
            rem = s & ~(1 << j)
            best = np.inf
            k = rem
            while k:
                b = k & -k
                m = b.bit_length() - 1
                cand = dist[j, m] + f[rem, m]
                if cand < best:
                    best = cand
                k ^= b
            f[s, j] = best
    total = float(f[full].min())
    # lexicographically-smallest reconstruction
    path = []
    s = full
    j = None
    for cand in range(n):
        if math.isclose(f[full, cand], total, rel_tol=0.0, abs_tol=1e-12):
            j = cand
            break
    while True:
        path.append(j)
        rem = s & ~(1 << j)
        if rem == 0:
            break
        target = f[s, j] - dist[j, 0:n]  # value f[rem, m] must equal target[m]
        nxt = None
        for m in range(n):
            if (rem >> m) & 1 and math.isclose(f[rem, m], target[m],
                                               rel_tol=0.0, abs_tol=1e-9):
                nxt = m
                break
        s, j = rem, nxt
    return path, total


def _nn_two_opt_path(dist: np.ndarray) -> tuple[list, float]:
    """Nearest-neighbor + 2-opt heuristic for large pattern counts."""
    n = dist.shape[0]
    best_path, best_cost = None, np.inf
    for start in range(n):
        path = [start]
        left = set(range(n)) - {start}
        while left:
            j = min(left, key=lambda m: (dist[path[-1], m], m))
            path.append(j)
            left.remove(j)
        improved = True
        while improved:
            improved = False
            for i in range(n - 2):
                for j in range(i + 1, n - 1):
                    new = path[:i + 1] + path[i + 1:j + 1][::-1] + path[j + 1:]
                    if _path_cost(dist, new) < _path_cost(dist, path) - 1e-12:
                        path = new
                        improved = True
        cost = _path_cost(dist, path)
        if cost < best_cost:
            best_path, best_cost = path, cost
    return best_path, best_cost


def _path_cost(dist: np.ndarray, path: list) -> float:
    return float(sum(dist[a, b] for a, b in zip(path, path[1:])))


def order_patterns(ps: PatternSet, v_max: float) -> tuple[list, float]:
    """Visit order minimizing total switching time, and that time."""
    gamma = ps.gamma
    if gamma == 1:
        return [0], 0.0
    cheb = np.zeros((gamma, gamma))
    for i in range(gamma):
        for j in range(gamma):
            cheb[i, j] = np.max(np.abs(ps.patterns[i] - ps.patterns[j]))
    if gamma <= 20:
        path, total = _held_karp_path(cheb)
    else:
        path, total = _nn_two_opt_path(cheb)
    rev = path[::-1]
    if rev < path and math.isclose(_path_cost(cheb, rev), total, abs_tol=1e-12):
        path = rev
    if v_max <= 0.0:
        return path, (math.inf if total > 0 else 0.0)
    return path, total / v_max


# ---------------------------------------------------------------------------
# the full plan
# ---------------------------------------------------------------------------

def _static_plan(scn: Scenario, cfg: SolverConfig) -> SsmtPlan:
    x_st, r_st = static_optimal(scn, cfg)
    return SsmtPlan(ordering=[0], patterns=[x_st], segments=[],
                    stay_durations=np.array([scn.horizon]),
                    switching_rates=np.zeros(scn.num_users),
                    t_swi=0.0, min_rate=r_st, mode="static-fallback")


def plan_ssmt(scn: Scenario, ps: PatternSet,
              cfg: SolverConfig | None = None) -> SsmtPlan:
    """Stay-then-move plan, or the static fallback when moving does not pay.

    Fallback triggers when the total switching time exhausts the horizon or
    when the optimized dynamic rate is below the static baseline.
    """
    cfg = cfg or scn.solver
    if ps.gamma == 0:
        raise ValueError("empty pattern set")
    order, t_swi = order_patterns(ps, scn.geometry.max_speed)
    if t_swi >= scn.horizon:
        return _static_plan(scn, cfg)

    patterns = [check_pattern(ps.patterns[i], scn.geometry) for i in order]
    segments = []
    offsets = np.zeros(scn.num_users)
    for a, b in zip(patterns, patterns[1:]):
        seg = make_segment(a, b, scn.geometry.max_speed,
                           scn.geometry.min_separation)
        ok, dmin = verify_no_coupling(seg, cfg.quadrature_samples_per_segment)
        if not ok:
            raise RuntimeError(
                f"inter-track spacing {dmin:g} fell below the minimum during "
                "motion; this contradicts the parallel-motion spacing guarantee")
        segments.append(seg)
        offsets += switching_rates(scn, seg, cfg)

    rates = np.array([rate_vector(scn, x) for x in patterns])
    alloc = allocate_time(rates, scn.horizon - t_swi, offsets, scn.horizon)

    static = _static_plan(scn, cfg)
    if alloc.min_rate < static.min_rate:
        return static
    return SsmtPlan(ordering=order, patterns=patterns, segments=segments,
                    stay_durations=alloc.durations, switching_rates=offsets,
                    t_swi=t_swi, min_rate=alloc.min_rate, mode="dynamic")
