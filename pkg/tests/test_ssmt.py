import itertools
import math

import numpy as np
import pytest

from matraj import (allocate_time, order_patterns, plan_ssmt, rate_vector,
                    static_optimal, switching_rate, switching_time,
                    transition_pattern, verify_no_coupling)
from matraj.dual import PatternSet, run_algorithm1
from matraj.sca import random_pattern
from matraj.ssmt import (_held_karp_path, _path_cost, make_segment,
                         switching_rates)

from conftest import make_reference, make_small


def pattern_set(scn, patterns):
    patterns = [np.asarray(x, dtype=float) for x in patterns]
    return PatternSet(patterns=patterns,
                      rates=np.array([rate_vector(scn, x) for x in patterns]),
                      mu=np.full(scn.num_users, 1.0 / scn.num_users),
                      dual_value=0.0)


def test_switching_time_basics():
    a = np.array([0.0, 20.0])
    b = np.array([6.63, 20.0])
    assert switching_time(a, a, 1.0) == 0.0
    assert switching_time(a, b, 1.0) == pytest.approx(6.63)
    assert switching_time(a, b, 0.5) == pytest.approx(13.26)
    assert switching_time(a, b, 1.0) == switching_time(b, a, 1.0)
    assert math.isinf(switching_time(a, b, 0.0))
    assert switching_time(a, a, 0.0) == 0.0


def test_collinear_sequence_total_time():
    scn = make_reference()
    ps = pattern_set(scn, [[0.0, 20.0], [6.63, 20.0], [15.56, 20.0]])
    order, t_swi = order_patterns(ps, 1.0)
    assert order in ([0, 1, 2], [2, 1, 0])
    assert t_swi == pytest.approx(15.56)
    _, t_half = order_patterns(ps, 2.0)
    assert t_half == pytest.approx(7.78)


def test_single_pattern_order_is_trivial():
    scn = make_small()
    ps = pattern_set(scn, [[1.0, 4.0]])
    order, t_swi = order_patterns(ps, 1.0)
    assert order == [0]
    assert t_swi == 0.0


def test_held_karp_matches_exhaustive_search():
    rng = np.random.default_rng(19)
    for n in (2, 3, 5, 7):
        pts = rng.uniform(0.0, 10.0, size=(n, 3))
        dist = np.max(np.abs(pts[:, None, :] - pts[None, :, :]), axis=2)
        path, cost = _held_karp_path(dist)
        assert sorted(path) == list(range(n))
        brute = min(_path_cost(dist, list(p))
                    for p in itertools.permutations(range(n)))
        assert cost == pytest.approx(brute, abs=1e-12)


def test_transition_kinematics():
    seg = make_segment(np.array([0.0, 20.0]), np.array([6.63, 20.0]),
                       v_max=1.0, min_separation=0.5)
    assert np.allclose(transition_pattern(seg, 0.0), [0.0, 20.0])
    assert np.allclose(transition_pattern(seg, seg.duration), [6.63, 20.0])
    # halfway through the moving track's travel
    assert np.allclose(transition_pattern(seg, 3.315), [3.315, 20.0])
    with pytest.raises(ValueError):
        transition_pattern(seg, -0.1)


def test_tracks_clamp_after_arrival():
    seg = make_segment(np.array([0.0, 10.0]), np.array([2.0, 16.0]),
                       v_max=1.0, min_separation=0.5)
    assert seg.duration == pytest.approx(6.0)
    # the short-travel track arrives at t=2 and then holds position
    assert np.allclose(transition_pattern(seg, 4.0), [2.0, 14.0])


def test_no_coupling_on_feasible_pairs():
    geom = make_small(num_tracks=4, span=8.0).geometry
    rng = np.random.default_rng(20)
    for _ in range(100):
        a = random_pattern(geom, rng)
        b = random_pattern(geom, rng)
        seg = make_segment(a, b, v_max=float(rng.uniform(0.1, 2.0)),
                           min_separation=geom.min_separation)
        ok, dmin = verify_no_coupling(seg, 200)
        assert ok, f"spacing dipped to {dmin}"


def test_coupling_detected_for_bad_endpoints():
    seg = make_segment(np.array([0.0, 0.3]), np.array([1.0, 1.3]),
                       v_max=1.0, min_separation=0.5)
    ok, dmin = verify_no_coupling(seg, 50)
    assert not ok
    assert dmin == pytest.approx(0.3)


def test_spacing_minimum_attained_at_breakpoints():
    geom = make_small(num_tracks=3, span=8.0).geometry
    rng = np.random.default_rng(21)
    for _ in range(50):
        a = random_pattern(geom, rng)
        b = random_pattern(geom, rng)
        seg = make_segment(a, b, 1.0, geom.min_separation)
        if seg.duration == 0.0:
            continue
        # sampled minimum must never undercut the breakpoint minimum
        br = np.unique(np.concatenate([[0.0, seg.duration], seg.arrivals]))
        br_min = min(float(np.diff(transition_pattern(seg, float(t))).min())
                     for t in br if 0.0 <= t <= seg.duration)
        _, dmin = verify_no_coupling(seg, 2000)
        assert dmin >= br_min - 1e-9


def test_switching_rate_zero_duration():
    scn = make_reference()
    seg = make_segment(np.array([0.0, 20.0]), np.array([0.0, 20.0]), 1.0, 0.5)
    assert switching_rate(scn, seg, 0) == 0.0


def test_switching_rate_constant_segment():
    # moving both tracks in lockstep keeps rates constant (common shift)
    scn = make_reference()
    a = np.array([0.0, 10.0])
    b = np.array([5.0, 15.0])
    seg = make_segment(a, b, v_max=1.0, min_separation=0.5)
    r = rate_vector(scn, a)
    vals = switching_rates(scn, seg)
    assert np.allclose(vals, seg.duration * r, rtol=1e-9)


def test_switching_rate_quadrature_converged():
    scn = make_reference()
    seg = make_segment(np.array([0.0, 20.0]), np.array([15.39, 20.0]),
                       v_max=1.0, min_separation=0.5)
    import dataclasses
    coarse = switching_rates(scn, seg, scn.solver)
    fine_cfg = dataclasses.replace(scn.solver, quadrature_samples_per_segment=400)
    fine = switching_rates(scn, seg, fine_cfg)
    assert np.all(np.abs(coarse - fine) / np.abs(fine) < 1e-4)


def test_plan_static_fallback_when_too_slow(reference_scenario, reference_result):
    import dataclasses
    ps, _ = reference_result
    slow = dataclasses.replace(
        reference_scenario,
        geometry=dataclasses.replace(reference_scenario.geometry, max_speed=0.01))
    plan = plan_ssmt(slow, ps)
    assert plan.mode == "static-fallback"
    assert plan.t_swi == 0.0
    x_st, r_st = static_optimal(slow)
    assert plan.min_rate == pytest.approx(r_st)


def test_plan_dynamic_budget_identity(reference_scenario, reference_result):
    ps, _ = reference_result
    plan = plan_ssmt(reference_scenario, ps)
    assert plan.mode == "dynamic"
    assert plan.stay_durations.sum() + plan.t_swi == pytest.approx(
        reference_scenario.horizon, abs=1e-8)
    assert len(plan.segments) == len(plan.patterns) - 1


def test_plan_sandwich(reference_scenario, reference_result):
    ps, _ = reference_result
    plan = plan_ssmt(reference_scenario, ps)
    _, r_st = static_optimal(reference_scenario)
    ideal = allocate_time(ps.rates, reference_scenario.horizon,
                          np.zeros(3), reference_scenario.horizon)
    assert r_st <= plan.min_rate + 1e-9
    assert plan.min_rate <= ideal.min_rate + 1e-6
