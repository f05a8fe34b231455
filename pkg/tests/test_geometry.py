import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from dasrate import (DEFAULT_CELL_RADIUS, CellLayout, LinkBudget, Position, build_pathloss_matrix,
                     distance_matrix, make_stream, pathloss, place_ports, sample_uniform_users)
from dasrate.geometry import pathloss_db

from conftest import FIG2_USERS


def test_two_ports_on_default_ring():
    assert place_ports(2, DEFAULT_CELL_RADIUS) == [(4.0, 0.0), (-4.0, 0.0)]


def test_single_port_on_x_axis():
    (p,) = place_ports(1, 10.0)
    assert p.x == pytest.approx(math.sqrt(3 / 7) * 10.0)
    assert p.y == 0.0


def test_four_ports_counter_clockwise():
    ports = place_ports(4, DEFAULT_CELL_RADIUS)
    np.testing.assert_allclose(ports, [(4, 0), (0, 4), (-4, 0), (0, -4)], atol=1e-12)


@pytest.mark.parametrize("n, r", [(0, 1.0), (2, 0.0), (2, -1.0)])
def test_place_ports_rejects(n, r):
    with pytest.raises(ValueError):
        place_ports(n, r)


@given(st.integers(1, 32), st.floats(1e-3, 1e3))
def test_ports_on_ring(n, radius):
    for p in place_ports(n, radius):
        assert math.hypot(*p) == pytest.approx(math.sqrt(3 / 7) * radius, rel=1e-12)


@pytest.mark.parametrize("d, p, expected", [(1.0, 3.0, 1.0), (2.0, 3.0, 0.125)])
def test_pathloss_values(d, p, expected):
    assert pathloss(d, p) == expected


def test_cell_edge_loss():
    assert pathloss_db(DEFAULT_CELL_RADIUS, 3.0) == pytest.approx(23.5, abs=0.1)


def test_pathloss_rejects_zero_distance():
    with pytest.raises(ValueError):
        pathloss(0.0, 3.0)


def test_pathloss_monotone_and_flat_at_zero_exponent():
    d = np.linspace(0.1, 20, 200)
    assert np.all(np.diff(pathloss(d, 3.0)) < 0)
    np.testing.assert_array_equal(pathloss(d, 0.0), 1.0)


def test_offset_user():
    lay = CellLayout.canonical(2)
    np.testing.assert_allclose(build_pathloss_matrix([Position(5, 0)], lay), [[1.0, 9.0**-3]])


def test_fig2_distances(fig2_layout):
    np.testing.assert_allclose(distance_matrix(FIG2_USERS, fig2_layout),
                               [[6.8007, 2.5], [4.6098, 8.3217]], atol=1e-4)


def test_fig2_gains(fig2_layout, fig2_gains):
    d = np.array([[6.800735254367722, 2.5], [4.6097722286464435, 8.32165848854662]])
    np.testing.assert_allclose(fig2_gains, d**-3.0, rtol=1e-12)


def test_empty_user_list():
    assert build_pathloss_matrix([], CellLayout.canonical(3)).shape == (0, 3)


def test_coincident_user_rejected():
    with pytest.raises(ValueError):
        build_pathloss_matrix([Position(4.0, 0.0)], CellLayout.canonical(2))


@given(st.floats(0, 2 * math.pi))
def test_rotation_invariance(angle):
    c, s = math.cos(angle), math.sin(angle)
    rot = lambda p: Position(c * p.x - s * p.y, s * p.x + c * p.y)
    lay = CellLayout.canonical(3)
    users = [Position(1.0, 2.0), Position(-3.0, 0.5)]
    turned = CellLayout(lay.cell_radius, tuple(rot(p) for p in lay.ports), lay.pathloss_exponent)
    np.testing.assert_allclose(build_pathloss_matrix([rot(u) for u in users], turned),
                               build_pathloss_matrix(users, lay), rtol=1e-12)


def test_link_budget():
    b = LinkBudget.from_snr_db(20.0)
    assert b.power == pytest.approx(100.0)
    assert b.snr_db == pytest.approx(20.0)
    with pytest.raises(ValueError):
        LinkBudget(0.0, 1.0)


def _radii(n, seed=7):
    rng = make_stream(seed)
    users = np.array(sample_uniform_users(n, DEFAULT_CELL_RADIUS, rng))
    return np.hypot(users[:, 0], users[:, 1])


def test_uniform_disk_mean_radius():
    assert _radii(100_000).mean() == pytest.approx(2 / 3 * DEFAULT_CELL_RADIUS, rel=0.01)


def test_uniform_disk_cdf():
    r = _radii(100_000, seed=11)
    ks = stats.kstest(r, lambda x: np.clip(x / DEFAULT_CELL_RADIUS, 0, 1) ** 2).statistic
    assert ks < 0.01


def test_single_user_inside_cell():
    (p,) = sample_uniform_users(1, 3.0, make_stream(1))
    assert math.hypot(*p) <= 3.0


def test_sampling_deterministic():
    assert sample_uniform_users(5, 2.0, make_stream(3)) == sample_uniform_users(5, 2.0, make_stream(3))


def test_exclusion_radius():
    lay = CellLayout.canonical(4, exclusion_radius=1.5)
    users = sample_uniform_users(2000, lay.cell_radius, make_stream(5), lay)
    assert distance_matrix(users, lay).min() >= 1.5
