"""Concave surrogate of the weighted-sum-rate objective and its maximizer.

For a fixed anchor pattern x_q the per-user SINR kernel
gamma~_k(x) = h_k^H A_k^{-1} h_k admits a global concave quadratic lower
bound that is tight (value and gradient) at the anchor.  Expanding the
bound element-wise and absorbing the vertical-array phases, it collapses
to per-user per-track quadratic coefficients in Delta = x - x_q, which is
what makes the inner solver cheap.

The weighted subproblem max_x sum_k mu_k log2(1 + Pbar_k * bound_k(x))
is concave on its domain and is solved by projected gradient ascent with
an exact pool-adjacent-violators projection onto the spacing polytope
{x : x_m - x_{m-1} >= d_min, 0 <= x_m <= L}.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import TWO_PI, channel_matrix
from .mmse import _interference_from_H, weighted_rate
from .scenario import ArrayGeometry, Scenario, SolverConfig

LOG2 = np.log(2.0)
LOG_DOMAIN_FLOOR = 1e-9   # reject steps with any 1 + Pbar*bound below this
MONOTONE_SLACK = 1e-10


@dataclass
class SurrogateCoefficients:
    """Quadratic-in-Delta form of the per-user SINR lower bounds at one anchor."""

    anchor: np.ndarray        # x_q, shape (M,)
    const: np.ndarray         # (K,)   bound value at Delta = 0
    lin: np.ndarray           # (K, M) d bound / d x_m at the anchor
    quad: np.ndarray          # (K, M) curvature (<= 0), coefficient of Delta_m^2
    g: np.ndarray             # (K, MN) anchor directions A_k^{-1} h_k
    lam_max: np.ndarray       # (K,)   ||g_k||^2 (max eigenvalue of g g^H)
    d_const: np.ndarray       # (K,)   additive constants D_k


@dataclass
class ScaTrace:
    iterates: list = field(default_factory=list)    # anchor patterns
    objectives: list = field(default_factory=list)  # true weighted objective
    converged: bool = False


def build_surrogate(scn: Scenario, x_q: np.ndarray) -> SurrogateCoefficients:
    """Coefficients of the concave bounds for every user at anchor x_q."""
    geom = scn.geometry
    m_tracks, n_per = geom.num_tracks, geom.antennas_per_track
    mn = m_tracks * n_per
    x_q = np.asarray(x_q, dtype=float)
    H = channel_matrix(scn, x_q)
    K = scn.num_users
    p = scn.norm_powers
    beta = scn.betas
    slope = TWO_PI * scn.virtual_aoa_h  # phase slope per track coordinate, per user

    const = np.zeros(K)
    lin = np.zeros((K, m_tracks))
    quad = np.zeros((K, m_tracks))
    g_all = np.zeros((K, mn), dtype=complex)
    lam_all = np.zeros(K)
    d_all = np.zeros(K)

    def accumulate(k: int, t: np.ndarray, w: float, scale: float):
        # t[i] = conj(h_i(x_q)) * v_i encodes sqrt(beta)|v_i| e^{j(zeta_q + arg v_i)};
        # second-order cosine bound per element, summed over the track's antennas.
        t = t.reshape(m_tracks, n_per)
        const[k] += scale * 2.0 * np.sum(t.real)
        lin[k] += scale * (-2.0 * w) * np.sum(t.imag, axis=1)
        quad[k] += scale * (-(w * w)) * np.sum(np.abs(t), axis=1)

    for k in range(K):
        A = _interference_from_H(scn, k, H)
        g = np.linalg.solve(A, H[k])
        g_all[k] = g
        lam = float(np.vdot(g, g).real)
        lam_all[k] = lam
        # own-signal term 2 Re(h_k(x)^H g)
        accumulate(k, H[k].conj() * g, slope[k], 1.0)
        d_k = lam  # ||g||^2
        for j in range(K):
            if j == k:
                continue
            gh = np.vdot(g, H[j])               # g^H h_j(x_q)
            o = lam * H[j] - g * gh             # (lam I - g g^H) h_j(x_q)
            accumulate(k, H[j].conj() * o, slope[j], p[j])
            c_j = 2.0 * lam * beta[j] * mn - abs(gh) ** 2
            d_k += p[j] * c_j
        const[k] -= d_k
        d_all[k] = d_k

    return SurrogateCoefficients(anchor=x_q, const=const, lin=lin, quad=quad,
                                 g=g_all, lam_max=lam_all, d_const=d_all)


def surrogate_values(coeffs: SurrogateCoefficients, x: np.ndarray) -> np.ndarray:
    """All K lower-bound values at pattern x, shape (K,)."""
    delta = np.asarray(x, dtype=float) - coeffs.anchor
    return coeffs.const + coeffs.lin @ delta + coeffs.quad @ (delta * delta)


def surrogate_value(scn: Scenario, k: int, x: np.ndarray,
                    coeffs: SurrogateCoefficients) -> float:
    """Lower bound of gamma~_k(x) built at coeffs.anchor."""
    return float(surrogate_values(coeffs, x)[k])


def surrogate_gradients(coeffs: SurrogateCoefficients, x: np.ndarray) -> np.ndarray:
    """Gradients of all K bounds w.r.t. x, shape (K, M)."""
    delta = np.asarray(x, dtype=float) - coeffs.anchor
    return coeffs.lin + 2.0 * coeffs.quad * delta


# ---------------------------------------------------------------------------
# feasible-set projection
# ---------------------------------------------------------------------------

def _isotonic(v: np.ndarray) -> np.ndarray:
    """Least-squares nondecreasing fit of v (pool-adjacent-violators)."""
    n = len(v)
    vals = np.empty(n)
    wts = np.empty(n)
    idx = np.empty(n, dtype=int)  # block end positions
    top = 0
    for i in range(n):
        vals[top] = v[i]
        wts[top] = 1.0
        idx[top] = i
        while top > 0 and vals[top - 1] > vals[top]:
            tot = wts[top - 1] + wts[top]
            vals[top - 1] = (wts[top - 1] * vals[top - 1] + wts[top] * vals[top]) / tot
            wts[top - 1] = tot
            idx[top - 1] = idx[top]
            top -= 1
        top += 1
    out = np.empty(n)
    start = 0
    for b in range(top):
        end = idx[b] + 1
        out[start:end] = vals[b]
        start = end
    return out


def project_pattern(v: np.ndarray, geom: ArrayGeometry) -> np.ndarray:
    """Euclidean projection onto the feasible spacing polytope.

    Substituting u_m = x_m - (m-1)*d_min turns the constraints into a
    nondecreasing sequence with a common box [0, L - (M-1)*d_min]; projection
    is then isotonic regression followed by a clip.
    """
    v = np.asarray(v, dtype=float)
    m = geom.num_tracks
    if m == 1:
        return np.clip(v, 0.0, geom.span)
    off = geom.min_separation * np.arange(m)
    u = _isotonic(v - off)
    u = np.clip(u, 0.0, geom.span - off[-1])
    return u + off


def random_pattern(geom: ArrayGeometry, rng: np.random.Generator) -> np.ndarray:
    """Uniform draw from the feasible polytope via sorted uniforms in u-space."""
    m = geom.num_tracks
    off = geom.min_separation * np.arange(m)
    u = np.sort(rng.uniform(0.0, geom.span - off[-1], size=m))
    return u + off


# ---------------------------------------------------------------------------
# subproblem and SCA outer loop
# ---------------------------------------------------------------------------

def _pga_maximize(coeffs: SurrogateCoefficients, scn: Scenario, mu: np.ndarray,
                  x0: np.ndarray, max_iters: int = 400) -> np.ndarray:
    """Projected gradient ascent on sum_k mu_k log2(1 + Pbar_k bound_k(x))."""
    geom = scn.geometry
    p = scn.norm_powers

    def evaluate(x):
        s = surrogate_values(coeffs, x)
        arg = 1.0 + p * s
        if np.any(arg <= LOG_DOMAIN_FLOOR):
            return -np.inf, None
        obj = float(mu @ np.log2(arg))
        grad = ((mu * p) / (arg * LOG2)) @ surrogate_gradients(coeffs, x)
        return obj, grad

    x = x0.copy()
    obj, grad = evaluate(x)
    step = 0.1
    stall = 0
    for _ in range(max_iters):
        accepted = False
        for _ in range(40):
            x_new = project_pattern(x + step * grad, geom)
            obj_new, grad_new = evaluate(x_new)
            if obj_new > obj:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
        if obj_new - obj < 1e-12 * (1.0 + abs(obj)):
            stall += 1
        else:
            stall = 0
        move = np.max(np.abs(x_new - x))
        x, obj, grad = x_new, obj_new, grad_new
        step *= 1.5
        if move < 1e-10 or stall >= 3:
            break
    return x


def solve_subproblem(scn: Scenario, mu: np.ndarray, x_q: np.ndarray,
                     cfg: SolverConfig | None = None) -> np.ndarray:
    """One SCA step: maximize the surrogate weighted objective from anchor x_q."""
    coeffs = build_surrogate(scn, np.asarray(x_q, dtype=float))
    return _pga_maximize(coeffs, scn, np.asarray(mu, dtype=float),
                         coeffs.anchor)


def sca_iterate(scn: Scenario, mu: np.ndarray, x_init: np.ndarray,
                cfg: SolverConfig | None = None) -> tuple[np.ndarray, ScaTrace]:
    """Repeat surrogate maximization with re-anchoring until stationary.

    The true weighted objective is non-decreasing along the iterates because
    each surrogate is tight at its anchor and a global lower bound.
    """
    cfg = cfg or scn.solver
    mu = np.asarray(mu, dtype=float)
    x = project_pattern(np.asarray(x_init, dtype=float), scn.geometry)
    trace = ScaTrace()
    obj = weighted_rate(scn, mu, x)
    trace.iterates.append(x.copy())
    trace.objectives.append(obj)
    for _ in range(cfg.sca_max_iters):
        x_sub = solve_subproblem(scn, mu, x, cfg)
        step = x_sub - x
        if np.max(np.abs(step)) < 1e-9:
            trace.converged = True
            break
        # the global curvature bound makes the surrogate step very short;
        # extrapolate along it as long as the true objective keeps improving
        # (monotonicity is preserved because only improvements are accepted)
        x_new = x_sub
        obj_new = weighted_rate(scn, mu, x_new)
        scale = 2.0
        while scale <= 2.0 ** 22:
            x_try = project_pattern(x + scale * step, scn.geometry)
            obj_try = weighted_rate(scn, mu, x_try)
            if obj_try <= obj_new:
                break
            x_new, obj_new = x_try, obj_try
            scale *= 2.0
        if obj_new < obj - MONOTONE_SLACK:
            # numerically stalled step; keep the previous iterate
            trace.converged = True
            break
        trace.iterates.append(x_new.copy())
        trace.objectives.append(obj_new)
        converged = obj_new - obj < cfg.sca_rel_tol * (1.0 + abs(obj)) \
            and np.max(np.abs(x_new - x)) < 1e-4
        x, obj = x_new, obj_new
        if converged:
            trace.converged = True
            break
    return x, trace
