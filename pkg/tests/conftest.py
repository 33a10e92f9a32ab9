import time

import numpy as np
import pytest

from matraj import ArrayGeometry, Scenario, SolverConfig, UserSpec, run_algorithm1

# three-user reference setup used throughout: two tracks on a 20-wavelength
# span, unit gain, 10 dBm transmit power over 0 dBm noise
THETA = [np.pi / 7, np.pi / 6.7, np.pi / 6]
PHI = [np.pi / 7.2, np.pi / 6.5, np.pi / 5.8]


def make_reference(span=20.0, v_max=1.0, horizon=100.0, solver=None):
    users = tuple(UserSpec(theta=t, phi=p, power_dbm=10.0, beta=1.0)
                  for t, p in zip(THETA, PHI))
    geom = ArrayGeometry(num_tracks=2, antennas_per_track=3, span=span,
                         min_separation=0.5, max_speed=v_max)
    kwargs = {} if solver is None else {"solver": solver}
    return Scenario(geometry=geom, users=users, noise_dbm=0.0,
                    horizon=horizon, **kwargs)


def make_small(num_users=2, num_tracks=2, antennas=2, span=6.0, v_max=1.0,
               solver=None):
    """Small instance for fast unit tests."""
    users = tuple(UserSpec(theta=t, phi=p, power_dbm=10.0, beta=1.0)
                  for t, p in zip(THETA[:num_users], PHI[:num_users]))
    geom = ArrayGeometry(num_tracks=num_tracks, antennas_per_track=antennas,
                         span=span, min_separation=0.5, max_speed=v_max)
    kwargs = {} if solver is None else {"solver": solver}
    return Scenario(geometry=geom, users=users, noise_dbm=0.0, horizon=50.0,
                    **kwargs)


def random_scenario(rng, max_users=3, max_tracks=3, max_antennas=2,
                    solver=None):
    k = int(rng.integers(1, max_users + 1))
    m = int(rng.integers(1, max_tracks + 1))
    n = int(rng.integers(1, max_antennas + 1))
    span = float(rng.uniform(max(2.0, (m - 1) * 0.5 + 0.5), 8.0))
    users = tuple(UserSpec(theta=float(rng.uniform(0.0, np.pi / 2)),
                           phi=float(rng.uniform(0.0, np.pi / 2)),
                           power_dbm=float(rng.uniform(0.0, 13.0)),
                           beta=float(rng.uniform(0.3, 2.0)))
                  for _ in range(k))
    geom = ArrayGeometry(num_tracks=m, antennas_per_track=n, span=span,
                         min_separation=0.5,
                         max_speed=float(rng.uniform(0.05, 2.0)))
    kwargs = {} if solver is None else {"solver": solver}
    return Scenario(geometry=geom, users=users, noise_dbm=0.0,
                    horizon=float(rng.uniform(20.0, 200.0)), **kwargs)


@pytest.fixture(scope="session")
def reference_scenario():
    return make_reference()


@pytest.fixture(scope="session")
def reference_result(reference_scenario):
    """(PatternSet, wall seconds) for the reference scenario, computed once."""
    t0 = time.perf_counter()
    ps = run_algorithm1(reference_scenario)
    return ps, time.perf_counter() - t0
