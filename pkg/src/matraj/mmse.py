"""MMSE receive SINR and achievable rates for a fixed deployment pattern.

gamma_k(x) = Pbar_k * h_k^H A_k^{-1} h_k with
A_k = sum_{j != k} Pbar_j h_j h_j^H + I.  A_k is solved, never inverted.
"""

from __future__ import annotations

import numpy as np

from .channel import channel_matrix
from .scenario import Scenario

SOLVE_RESIDUAL_TOL = 1e-10
IMAG_REL_TOL = 1e-10


class NumericalBreakdownError(RuntimeError):
    """Hermitian solve lost accuracy (should never happen since A_k >= I)."""


def interference_matrix(scn: Scenario, k: int, x: np.ndarray) -> np.ndarray:
    """A_k = sum_{j!=k} Pbar_j h_j h_j^H + I, Hermitian positive definite."""
    H = channel_matrix(scn, x)
    return _interference_from_H(scn, k, H)


def _interference_from_H(scn: Scenario, k: int, H: np.ndarray) -> np.ndarray:
    mn = H.shape[1]
    A = np.eye(mn, dtype=complex)
    for j in range(scn.num_users):
        if j != k:
            A += scn.norm_powers[j] * np.outer(H[j], H[j].conj())
    return A


def _sinr_from_H(scn: Scenario, k: int, H: np.ndarray) -> float:
    A = _interference_from_H(scn, k, H)
    h = H[k]
    g = np.linalg.solve(A, h)
    res = np.linalg.norm(A @ g - h) / np.linalg.norm(h)
    if res > SOLVE_RESIDUAL_TOL:
        raise NumericalBreakdownError(f"solve residual {res:g} for user {k}")
    quad = np.vdot(h, g)  # h^H A^{-1} h, real and >= 0 in exact arithmetic
    if abs(quad.imag) > IMAG_REL_TOL * max(1.0, abs(quad)):
        raise NumericalBreakdownError(f"imaginary residue {quad.imag:g} for user {k}")
    return float(scn.norm_powers[k] * quad.real)


def mmse_sinr(scn: Scenario, k: int, x: np.ndarray) -> float:
    """MMSE SINR of user k (0-based) at pattern x."""
    return _sinr_from_H(scn, k, channel_matrix(scn, x))


def sinr_vector(scn: Scenario, x: np.ndarray) -> np.ndarray:
    H = channel_matrix(scn, x)
    return np.array([_sinr_from_H(scn, k, H) for k in range(scn.num_users)])


def rate_vector(scn: Scenario, x: np.ndarray) -> np.ndarray:
    """Per-user achievable rates log2(1 + gamma_k(x)), bits/s/Hz."""
    return np.log2(1.0 + sinr_vector(scn, x))


def rate_matrix(scn: Scenario, patterns) -> np.ndarray:
    """Rates for a sequence of patterns, shape (len(patterns), K)."""
    return np.array([rate_vector(scn, x) for x in patterns])


def weighted_rate(scn: Scenario, mu: np.ndarray, x: np.ndarray) -> float:
    """sum_k mu_k log2(1 + gamma_k(x)) -- the objective of the dual inner problem."""
    return float(np.dot(mu, rate_vector(scn, x)))
