import numpy as np
import pytest

from matraj import channel_matrix, channel_vector, element_positions
from matraj.channel import check_pattern, pattern_ok
from matraj.sca import random_pattern

from conftest import make_reference, make_small


def reference_channel(scn, k, x):
    """Element-by-element construction, independent of the library kernels."""
    u = scn.users[k]
    geom = scn.geometry
    out = np.empty(geom.num_elements, dtype=complex)
    i = 0
    for m in range(geom.num_tracks):
        for n in range(geom.antennas_per_track):
            phase = 2.0 * np.pi * (x[m] * u.virtual_aoa_h
                                   + 0.5 * n * u.virtual_aoa_v)
            out[i] = np.sqrt(u.beta) * np.exp(-1j * phase)
            i += 1
    return out


def test_element_ordering_is_track_major():
    scn = make_small(num_tracks=2, antennas=2)
    hor, ver = element_positions(scn.geometry, np.array([1.0, 3.0]))
    assert np.allclose(hor, [1.0, 1.0, 3.0, 3.0])
    assert np.allclose(ver, [0.0, 0.5, 0.0, 0.5])


def test_channel_matches_elementwise_construction():
    scn = make_reference()
    rng = np.random.default_rng(0)
    for _ in range(20):
        x = random_pattern(scn.geometry, rng)
        H = channel_matrix(scn, x)
        for k in range(scn.num_users):
            expected = reference_channel(scn, k, x)
            assert np.allclose(H[k], expected, atol=1e-14)
            assert np.allclose(channel_vector(scn, k, x), expected, atol=1e-14)


def test_channel_norm_equals_gain_times_elements():
    scn = make_reference()
    rng = np.random.default_rng(1)
    mn = scn.geometry.num_elements
    for _ in range(50):
        x = random_pattern(scn.geometry, rng)
        for k in range(scn.num_users):
            h = channel_vector(scn, k, x)
            assert np.vdot(h, h).real == pytest.approx(scn.betas[k] * mn,
                                                       rel=1e-12)


def test_pattern_feasibility_checks():
    geom = make_small().geometry  # 2 tracks, span 6, spacing 0.5
    assert pattern_ok(np.array([0.0, 6.0]), geom)
    assert pattern_ok(np.array([1.0, 1.5]), geom)
    assert not pattern_ok(np.array([1.0, 1.4]), geom)   # spacing violated
    assert not pattern_ok(np.array([-0.1, 6.0]), geom)  # below range
    assert not pattern_ok(np.array([0.0, 6.1]), geom)   # above range
    assert not pattern_ok(np.array([0.0]), geom)        # wrong length
    with pytest.raises(ValueError):
        check_pattern(np.array([3.0, 3.1]), geom)
