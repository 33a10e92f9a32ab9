import numpy as np
import pytest

from matraj import (channel_matrix, mmse_sinr, rate_vector, sinr_vector,
                    weighted_rate)
from matraj.mmse import interference_matrix
from matraj.sca import random_pattern

from conftest import make_reference, make_small


def reference_sinr(scn, x):
    """Independent computation with an explicit matrix inverse."""
    H = channel_matrix(scn, x)
    mn = H.shape[1]
    out = []
    for k in range(scn.num_users):
        A = np.eye(mn, dtype=complex)
        for j in range(scn.num_users):
            if j != k:
                A += scn.norm_powers[j] * np.outer(H[j], H[j].conj())
        out.append(scn.norm_powers[k]
                   * float((H[k].conj() @ np.linalg.inv(A) @ H[k]).real))
    return np.array(out)


def test_sinr_matches_explicit_inverse():
    scn = make_reference()
    rng = np.random.default_rng(2)
    for _ in range(20):
        x = random_pattern(scn.geometry, rng)
        assert np.allclose(sinr_vector(scn, x), reference_sinr(scn, x),
                           rtol=1e-10)


def test_single_user_sinr_is_interference_free():
    scn = make_small(num_users=1, num_tracks=2, antennas=3)
    x = np.array([1.0, 4.0])
    # P/sigma^2 = 10, beta = 1, M*N = 6 elements
    assert mmse_sinr(scn, 0, x) == pytest.approx(60.0, rel=1e-12)
    assert rate_vector(scn, x)[0] == pytest.approx(np.log2(61.0), rel=1e-12)


def test_rates_invariant_under_common_shift():
    scn = make_reference()
    rng = np.random.default_rng(3)
    for _ in range(10):
        x = random_pattern(scn.geometry, rng)
        shift = rng.uniform(0.0, scn.geometry.span - x[-1])
        assert np.allclose(rate_vector(scn, x), rate_vector(scn, x + shift),
                           rtol=1e-10)


def test_mmse_dominates_random_beamformers():
    scn = make_reference()
    rng = np.random.default_rng(4)
    for _ in range(5):
        x = random_pattern(scn.geometry, rng)
        H = channel_matrix(scn, x)
        mn = H.shape[1]
        for k in range(scn.num_users):
            A = interference_matrix(scn, k, x)
            best = mmse_sinr(scn, k, x)
            W = (rng.standard_normal((200, mn))
                 + 1j * rng.standard_normal((200, mn)))
            # SINR of beamformer w: P|w^H h|^2 / (w^H A_k w); A_k already
            # holds interference-plus-noise for user k
            num = scn.norm_powers[k] * np.abs(W.conj() @ H[k]) ** 2
            den = np.einsum("ij,jk,ik->i", W.conj(), A, W).real
            sinr_w = num / den
            assert np.all(sinr_w <= best * (1.0 + 1e-9))


def test_weighted_rate_is_dot_product():
    scn = make_reference()
    x = np.array([3.0, 17.0])
    mu = np.array([0.2, 0.3, 0.5])
    assert weighted_rate(scn, mu, x) == pytest.approx(
        float(mu @ rate_vector(scn, x)), rel=1e-12)


def test_interference_matrix_is_hermitian_positive_definite():
    scn = make_reference()
    A = interference_matrix(scn, 0, np.array([0.0, 20.0]))
    assert np.allclose(A, A.conj().T)
    assert np.linalg.eigvalsh(A).min() >= 1.0 - 1e-9  # identity floor
