import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from fovloc.belief import GridBelief, uniform_belief
from fovloc.geometry import SourcePosition, UavState
from fovloc.planner import (
    ACTIONS,
    VELOCITY_ACTIONS,
    Action,
    action_scores,
    binary_entropy,
    greedy_select,
    mutual_information,
    propagate,
    random_select,
    rfb_candidates,
    rfb_select_waypoint,
)
from fovloc.sensors import BearingModel, FovModel

FOV = FovModel(120.0, 0.1)


def _random_belief(rng, n, cell=5.0, sparse=False):
    w = rng.dirichlet(np.full(n * n, 0.3))
    if sparse:
        w[rng.random(n * n) < 0.5] = 0.0
        if w.sum() == 0:
            w[0] = 1.0
        w /= w.sum()
    return GridBelief(n * cell, cell, w.reshape(n, n))


def test_action_set_order():
    assert len(ACTIONS) == 24
    assert [(u.velocity_dir_deg, u.heading_rate_dps) for u in ACTIONS[:4]] == [
        (0, -10), (0, 0), (0, 10), (45, -10)]
    assert ACTIONS[-1] == Action(315, 5, 10)
    assert all(u.speed_mps == 5 for u in ACTIONS)
    assert [u.velocity_dir_deg for u in VELOCITY_ACTIONS] == list(range(0, 360, 45))
    assert Action(90).velocity == (0.0, 5.0)


def test_propagate_examples():
    x = propagate(UavState(100, 100, 0), Action(0, 5, 0), 1.0)
    assert (x.north_m, x.east_m, x.heading_deg) == (105, 100, 0)
    x = propagate(UavState(100, 100, 350), Action(90, 5, 10), 1.0)
    assert (x.north_m, x.east_m, x.heading_deg) == (100, 105, 0)
    x = propagate(UavState(198, 1, 0), Action(315, 5, 0), 1.0, area_side_m=200)
    assert x.north_m == 200 and x.east_m == 0
    with pytest.raises(ValueError):
        propagate(UavState(0, 0), ACTIONS[0], 0.0)


@given(st.sampled_from(ACTIONS), st.floats(0.01, 5), st.floats(-100, 100), st.floats(-100, 100),
       st.floats(0, 360))
def test_propagate_linear_in_dt(u, dt, n, e, h):
    x = UavState(n, e, h)
    one = propagate(x, u, dt)
    two = propagate(propagate(x, u, dt / 2), u, dt / 2)
    assert one.north_m == pytest.approx(two.north_m, abs=1e-9)
    assert one.east_m == pytest.approx(two.east_m, abs=1e-9)
    assert math.remainder(one.heading_deg - two.heading_deg, 360) == pytest.approx(0, abs=1e-9)


def test_mi_point_mass_is_zero():
    w = np.zeros((8, 8))
    w[2, 6] = 1
    b = GridBelief(40, 5, w)
    assert mutual_information(b, FOV, UavState(13, 17, 70)) == 0
    assert mutual_information(b, BearingModel(5), UavState(13, 17, 70)) == pytest.approx(0, abs=1e-15)


def _split_front_rear():
    w = np.zeros((8, 8))
    w[7, 4] = w[0, 4] = 0.5
    return GridBelief(40, 5, w), UavState(20.0, 22.5, 0)


def test_mi_perfect_binary_query():
    b, x = _split_front_rear()
    assert mutual_information(b, FovModel(120, 0.0), x) == math.log(2)
    expected = math.log(2) - float(binary_entropy(0.1))
    assert mutual_information(b, FOV, x) == pytest.approx(expected, abs=1e-15)
    assert mutual_information(b, FOV, x) == pytest.approx(0.3680, abs=1e-4)
    assert float(binary_entropy(0.1)) == pytest.approx(0.3251, abs=1e-4)


def test_mi_matches_brute_force_fov():
    rng = np.random.default_rng(11)
    for k in range(200):
        n = int(rng.integers(1, 9))
        b = _random_belief(rng, n, sparse=k % 3 == 0)
        m = FovModel(float(rng.uniform(1, 180)), float(rng.choice([0.0, rng.uniform(0, 0.5)])))
        un, ue, h = rng.uniform(-10, n * 5 + 10, 2).tolist() + [float(rng.uniform(0, 360))]
        ref = oracles.fov_mi(b.flat.tolist(), oracles.cell_centers(n, 5.0), un, ue, h,
                             m.cone_width_deg, m.mistake_rate)
        got = mutual_information(b, m, UavState(un, ue, h))
        assert abs(got - max(ref, 0.0)) < 1e-12


def test_mi_matches_brute_force_bearing():
    rng = np.random.default_rng(12)
    for k in range(60):
        n = int(rng.integers(1, 7))
        b = _random_belief(rng, n)
        sigma = float(rng.choice([2.0, 5.0, 8.0, 20.0]))
        un, ue = rng.uniform(-10, n * 5 + 10, 2)
        ref = oracles.bearing_mi(b.flat.tolist(), oracles.cell_centers(n, 5.0), un, ue, sigma)
        got = mutual_information(b, BearingModel(sigma), UavState(un, ue, 0))
        assert abs(got - max(ref, 0.0)) < 1e-12


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=100)
def test_mi_bounds(seed):
    rng = np.random.default_rng(seed)
    b = _random_belief(rng, 6)
    m = FovModel(float(rng.uniform(1, 180)), float(rng.uniform(0, 0.49)))
    mi = mutual_information(b, m, UavState(*rng.uniform(0, 30, 2), rng.uniform(0, 360)))
    assert 0 <= mi <= math.log(2)


def _brute_action_scores(b, x, m, dt, actions):
    n = b.n_per_side
    centers = oracles.cell_centers(n, b.cell_side_m)
    out = []
    for u in actions:
        sn, se, sh = oracles.euler_step(x.north_m, x.east_m, x.heading_deg, u.velocity_dir_deg,
                                        u.speed_mps, u.heading_rate_dps, dt, b.area_side_m)
        out.append(max(oracles.fov_mi(b.flat.tolist(), centers, sn, se, sh,
                                      m.cone_width_deg, m.mistake_rate), 0.0))
    return np.array(out)


def test_greedy_scores_match_brute_force():
    rng = np.random.default_rng(13)
    for _ in range(40):
        b = _random_belief(rng, 8)
        x = UavState(*rng.uniform(0, 40, 2), rng.uniform(0, 360))
        dt = float(rng.choice([0.05, 0.5, 1.0, 3.0]))
        best, scores = greedy_select(b, x, FOV, dt, return_scores=True)
        ref = _brute_action_scores(b, x, FOV, dt, ACTIONS)
        np.testing.assert_allclose(scores, ref, atol=1e-12)
        assert ref[ACTIONS.index(best)] == pytest.approx(ref.max(), abs=1e-12)


def test_greedy_point_mass_takes_first_action():
    w = np.zeros((8, 8))
    w[5, 5] = 1
    assert greedy_select(GridBelief(40, 5, w), UavState(20, 20, 0), FOV, 1.0) == ACTIONS[0]


def test_greedy_mass_north_of_uav():
    # all mass in the northern rows, UAV in the south heading north; a narrow
    # cone makes the best move split the mass across the cone edge
    m = FovModel(40.0, 0.1)
    w = np.zeros((8, 8))
    w[6:, :] = 1.0
    b = GridBelief(40, 5, w / w.sum())
    x = UavState(5, 20, 0)
    best, scores = greedy_select(b, x, m, 1.0, return_scores=True)
    ref = _brute_action_scores(b, x, m, 1.0, ACTIONS)
    np.testing.assert_allclose(scores, ref, atol=1e-12)
    assert best == ACTIONS[int(np.argmax(ref))]
    nxt = propagate(x, best, 1.0, 40)
    p1 = [oracles.fov_p1(oracles.rel_bearing(nxt.north_m, nxt.east_m, nxt.heading_deg, cn, ce), 40, 0.1)
          for cn, ce in oracles.cell_centers(8, 5.0)]
    inside = sum(wi for wi, p in zip(b.flat, p1) if p == 0.9)
    assert 0.2 < inside < 0.8


def test_greedy_invariant_to_rescaling():
    rng = np.random.default_rng(14)
    b = _random_belief(rng, 8)
    x = UavState(11, 27, 123)
    w = b.weights * 7.3
    b2 = b.with_weights(w / w.sum())
    assert greedy_select(b, x, FOV, 1.0) == greedy_select(b2, x, FOV, 1.0)


def test_bearing_greedy_uses_velocity_actions():
    b = _random_belief(np.random.default_rng(15), 8)
    best, scores = greedy_select(b, UavState(20, 20), BearingModel(5), 1.0, return_scores=True)
    assert len(scores) == 8 and best in VELOCITY_ACTIONS


def test_action_scores_clamp_successors():
    b = _random_belief(np.random.default_rng(16), 8)
    x = UavState(0, 0, 0)
    inside = action_scores(b, x, FOV, 1.0)
    # south-west moves are clamped back to the corner, so they score the corner
    corner = mutual_information(b, FOV, UavState(0, 0, 350))
    assert inside[ACTIONS.index(Action(225, 5, -10))] == pytest.approx(corner, abs=1e-15)


def test_random_select_uniform_and_reproducible():
    rng = np.random.default_rng(0)
    counts = np.zeros(24)
    for _ in range(100_000):
        counts[ACTIONS.index(random_select(rng))] += 1
    np.testing.assert_allclose(counts / 1e5, 1 / 24, atol=0.005)
    a = [random_select(np.random.default_rng(9)) for _ in range(3)]
    b = [random_select(np.random.default_rng(9)) for _ in range(3)]
    assert a == b


def test_rfb_candidates():
    c = rfb_candidates(200)
    assert len(c) == 100
    assert c[0] == SourcePosition(10, 10) and c[-1] == SourcePosition(190, 190)


def test_rfb_point_mass_ties_to_first():
    w = np.zeros((40, 40))
    w[10, 10] = 1
    assert rfb_select_waypoint(GridBelief(200, 5, w), UavState(100, 100), BearingModel(5, 24)) \
        == rfb_candidates(200)[0]


def test_rfb_empty_candidates():
    with pytest.raises(ValueError):
        rfb_select_waypoint(uniform_belief(), UavState(100, 100), BearingModel(5, 24), candidates=[])


def test_rfb_two_cells_far_apart():
    w = np.zeros((40, 40))
    w[5, 5] = w[34, 30] = 0.5
    b = GridBelief(200, 5, w)
    cands = rfb_candidates(200)
    best = rfb_select_waypoint(b, UavState(100, 100), BearingModel(5, 24))
    a, c = b.cell_center(5, 5), b.cell_center(34, 30)

    def separation(p):
        ba = math.degrees(math.atan2(a.east_m - p.east_m, a.north_m - p.north_m))
        bc = math.degrees(math.atan2(c.east_m - p.east_m, c.north_m - p.north_m))
        return abs(math.remainder(ba - bc, 360))

    assert separation(best) > min(separation(p) for p in cands)
    assert separation(best) > 20


def test_rfb_scores_match_brute_force():
    rng = np.random.default_rng(17)
    b = _random_belief(rng, 40)
    m = BearingModel(5, 24)
    cands = rfb_candidates(200)
    _, scores = rfb_select_waypoint(b, UavState(100, 100), m, return_scores=True)
    centers = oracles.cell_centers(40, 5.0)
    for k in (0, 37, 99):
        ref = oracles.bearing_mi(b.flat.tolist(), centers, cands[k].north_m, cands[k].east_m, 5.0)
        assert abs(scores[k] - ref) < 1e-12
