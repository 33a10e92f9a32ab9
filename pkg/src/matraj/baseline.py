"""Static-deployment baseline and the M=2 one-dimensional search oracle.

The static baseline holds one pattern for the whole horizon, chosen to
maximize the minimum per-user rate.  For M <= 2 the rates depend only on
the track difference, so pinning the last track at L and scanning the
first is exhaustive; for M >= 3 a max-min variant of the SCA solver runs
from multiple starts.
"""

from __future__ import annotations

import numpy as np

from .mmse import rate_vector, weighted_rate
from .scenario import Scenario, SolverConfig
from .sca import (LOG_DOMAIN_FLOOR, build_surrogate, project_pattern,
                  random_pattern, surrogate_gradients, surrogate_values)

LOG2 = np.log(2.0)


def grid_oracle(scn: Scenario, objective: str = "max-min",
                mu: np.ndarray | None = None,
                cfg: SolverConfig | None = None) -> tuple[float, float]:
    """Exhaustive scan of x_1 with x_2 = L; returns (argmax x_1, value).

    objective: "max-min" for min_k rate, "weighted" for sum_k mu_k rate_k.
    """
    cfg = cfg or scn.solver
    if scn.geometry.num_tracks != 2:
        raise ValueError("the one-dimensional oracle requires exactly 2 tracks")
    if objective == "weighted":
        if mu is None:
            raise ValueError("weighted objective requires mu")
        mu = np.asarray(mu, dtype=float)
        score = lambda r: float(mu @ r)
    elif objective == "max-min":
        score = lambda r: float(r.min())
    else:
        raise ValueError(f"unknown objective {objective!r}")
    L, dmin = scn.geometry.span, scn.geometry.min_separation
    xs = np.arange(0.0, L - dmin + 0.5 * cfg.grid_step, cfg.grid_step)
    best_x, best_v = 0.0, -np.inf
    for x1 in xs:
        v = score(rate_vector(scn, np.array([x1, L])))
        if v > best_v:
            best_x, best_v = float(x1), v
    return best_x, best_v


def _minrate_sca(scn: Scenario, x0: np.ndarray,
                 cfg: SolverConfig) -> tuple[np.ndarray, float]:
    """Max-min analogue of the weighted SCA loop (surrogate + extrapolation)."""
    geom = scn.geometry
    p = scn.norm_powers

    def true_obj(x):
        return float(rate_vector(scn, x).min())

    x = project_pattern(np.asarray(x0, dtype=float), geom)
    obj = true_obj(x)
    for _ in range(cfg.sca_max_iters):
        coeffs = build_surrogate(scn, x)

        def evaluate(xx):
            arg = 1.0 + p * surrogate_values(coeffs, xx)
            if np.any(arg <= LOG_DOMAIN_FLOOR):
                return -np.inf, None
            vals = np.log2(arg)
            k = int(np.argmin(vals))
            grad = (p[k] / (arg[k] * LOG2)) * surrogate_gradients(coeffs, xx)[k]
            return float(vals[k]), grad

        # projected supergradient ascent on the surrogate min-rate
        xs = x.copy()
        sobj, grad = evaluate(xs)
        step = 0.1
        for _ in range(200):
            accepted = False
            for _ in range(40):
                x_new = project_pattern(xs + step * grad, geom)
                o_new, g_new = evaluate(x_new)
                if o_new > sobj:
                    accepted = True
                    break
                step *= 0.5
            if not accepted:
                break
            move = np.max(np.abs(x_new - xs))
            xs, sobj, grad = x_new, o_new, g_new
            step *= 1.5
            if move < 1e-10:
                break

        delta = xs - x
        if np.max(np.abs(delta)) < 1e-9:
            break
        x_new, obj_new = xs, true_obj(xs)
        scale = 2.0
        while scale <= 2.0 ** 22:
            x_try = project_pattern(x + scale * delta, geom)
            o_try = true_obj(x_try)
            if o_try <= obj_new:
                break
            x_new, obj_new = x_try, o_try
            scale *= 2.0
        if obj_new < obj - 1e-10:
            break
        done = obj_new - obj < cfg.sca_rel_tol * (1.0 + abs(obj)) \
            and np.max(np.abs(x_new - x)) < 1e-4
        x, obj = x_new, obj_new
        if done:
            break
    return x, obj


def static_optimal(scn: Scenario,
                   cfg: SolverConfig | None = None) -> tuple[np.ndarray, float]:
    """Best single pattern for the whole horizon and its min rate."""
    cfg = cfg or scn.solver
    geom = scn.geometry
    if geom.num_tracks == 1:
        # rates are invariant under a common shift; pin the track at L
        x = np.array([geom.span])
        return x, float(rate_vector(scn, x).min())
    if geom.num_tracks == 2:
        x1, v = grid_oracle(scn, "max-min", cfg=cfg)
        return np.array([x1, geom.span]), v
    rng = np.random.default_rng(cfg.rng_seed)
    starts = [np.linspace(0.0, geom.span, geom.num_tracks)]
    starts += [random_pattern(geom, rng) for _ in range(cfg.num_starts - 1)]
    best_x, best_v = None, -np.inf
    for x0 in starts:
        x, v = _minrate_sca(scn, x0, cfg)
        if v > best_v:
            best_x, best_v = x, v
    return best_x, best_v
