import numpy as np
import pytest

from matraj import grid_oracle, rate_vector, static_optimal
from matraj.channel import pattern_ok
from matraj.sca import random_pattern
from matraj.scenario import SolverConfig

from conftest import make_reference, make_small


def test_grid_oracle_requires_two_tracks():
    with pytest.raises(ValueError):
        grid_oracle(make_small(num_tracks=3))


def test_grid_oracle_value_is_achievable():
    scn = make_reference()
    x1, v = grid_oracle(scn, "max-min")
    rates = rate_vector(scn, np.array([x1, scn.geometry.span]))
    assert rates.min() == pytest.approx(v, rel=1e-12)


def test_grid_oracle_weighted_objective():
    scn = make_reference()
    mu = np.array([0.3, 0.3, 0.4])
    x1, v = grid_oracle(scn, "weighted", mu=mu)
    rates = rate_vector(scn, np.array([x1, scn.geometry.span]))
    assert float(mu @ rates) == pytest.approx(v, rel=1e-12)
    with pytest.raises(ValueError):
        grid_oracle(scn, "weighted")  # weights are mandatory here
    with pytest.raises(ValueError):
        grid_oracle(scn, "nonsense")


def test_grid_refinement_stable():
    import dataclasses
    scn = make_reference()
    x1, _ = grid_oracle(scn, "max-min")
    fine = dataclasses.replace(scn, solver=SolverConfig(grid_step=0.005))
    x1f, _ = grid_oracle(fine, "max-min")
    assert abs(x1 - x1f) <= 0.01


def test_static_two_tracks_matches_oracle():
    scn = make_reference()
    x, v = static_optimal(scn)
    x1, vg = grid_oracle(scn, "max-min")
    assert x[1] == pytest.approx(scn.geometry.span)
    assert x[0] == pytest.approx(x1)
    assert v == pytest.approx(vg)


def test_static_single_user_closed_form():
    scn = make_small(num_users=1, num_tracks=2, antennas=3)
    x, v = static_optimal(scn)
    assert v == pytest.approx(np.log2(1.0 + 10.0 * 6), rel=1e-12)


def test_static_single_track():
    scn = make_small(num_users=2, num_tracks=1, antennas=2)
    x, v = static_optimal(scn)
    assert pattern_ok(x, scn.geometry)
    # one track: rates do not depend on its position
    assert v == pytest.approx(rate_vector(scn, np.array([0.0])).min(), rel=1e-10)


def test_static_three_tracks_dominates_random_sampling():
    scn = make_small(num_users=3, num_tracks=3, antennas=1, span=6.0)
    x, v = static_optimal(scn)
    assert pattern_ok(x, scn.geometry)
    rng = np.random.default_rng(22)
    for _ in range(300):
        draw = random_pattern(scn.geometry, rng)
        assert v >= rate_vector(scn, draw).min() - 1e-6
