"""LoS steering/channel vectors for an arbitrary track deployment pattern.

A deployment pattern is a length-M float array x with
0 <= x[0] < ... < x[M-1] <= L and x[m] - x[m-1] >= d_min.  Channel elements
are ordered i = (m-1)*N + n, i.e. track-major, bottom antenna first, with
phase -2*pi*(x_m * vtheta_k + y_n * vphi_k)  (lambda = 1 internally).
"""

from __future__ import annotations

import numpy as np

from .scenario import ArrayGeometry, Scenario

TWO_PI = 2.0 * np.pi


def pattern_ok(x: np.ndarray, geom: ArrayGeometry, tol: float = 1e-9) -> bool:
    x = np.asarray(x, dtype=float)
    if x.shape != (geom.num_tracks,):
        return False
    if x[0] < -tol or x[-1] > geom.span + tol:
        return False
    if geom.num_tracks > 1 and np.min(np.diff(x)) < geom.min_separation - tol:
        return False
    return True


def check_pattern(x: np.ndarray, geom: ArrayGeometry) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if not pattern_ok(x, geom):
        raise ValueError(f"infeasible deployment pattern: {x}")
    return x


def element_positions(geom: ArrayGeometry, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(horizontal, vertical) coordinates of all M*N elements, track-major."""
    x = np.asarray(x, dtype=float)
    hor = np.repeat(x, geom.antennas_per_track)
    ver = np.tile(geom.vertical_grid, geom.num_tracks)
    return hor, ver


def channel_matrix(scn: Scenario, x: np.ndarray) -> np.ndarray:
    """Stacked channel vectors for all users, shape (K, M*N)."""
    hor, ver = element_positions(scn.geometry, x)
    phase = TWO_PI * (np.outer(scn.virtual_aoa_h, hor) + np.outer(scn.virtual_aoa_v, ver))
    return np.sqrt(scn.betas)[:, None] * np.exp(-1j * phase)


def channel_vector(scn: Scenario, k: int, x: np.ndarray) -> np.ndarray:
    """Channel vector of user k (0-based), shape (M*N,)."""
    hor, ver = element_positions(scn.geometry, x)
    phase = TWO_PI * (scn.virtual_aoa_h[k] * hor + scn.virtual_aoa_v[k] * ver)
    return np.sqrt(scn.betas[k]) * np.exp(-1j * phase)
