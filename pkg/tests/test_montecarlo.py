import numpy as np
import pytest

from dasrate import (CellLayout, DropExperimentConfig, LinkBudget, McConfig, TransmissionMode,
                     cell_average_experiment, derive_groups, distance_matrix, enumerate_ideal,
                     ergodic_sum_rate_closed, generate_min_distance_candidates, instantaneous_user_rate,
                     make_stream, mc_ergodic_sum_rate, sample_fading, select_best_mode)
from dasrate.geometry import build_pathloss_matrix, sample_uniform_users
from dasrate.modes import CandidateSet
from dasrate import montecarlo as mc


def test_fading_moments():
    x = sample_fading(1, 1, make_stream(1), 1_000_000)[:, 0, 0]
    assert x.mean() == pytest.approx(1.0, rel=0.005)
    assert x.var() == pytest.approx(1.0, rel=0.01)


def test_fading_deterministic_per_stream():
    a = sample_fading(3, 4, make_stream(9, 2))
    np.testing.assert_array_equal(a, sample_fading(3, 4, make_stream(9, 2)))
    assert not np.array_equal(a, sample_fading(3, 4, make_stream(9, 3)))
    assert a.shape == (3, 4)


def test_instantaneous_rate_cases():
    b = LinkBudget(1.0, 1.0)
    solo = derive_groups(TransmissionMode((1,)), 1)
    assert instantaneous_user_rate(1, solo, [1.0], [1.0], b) == pytest.approx(1.0)
    pair = derive_groups(TransmissionMode((1, 2)), 2)
    near_noiseless = LinkBudget(1.0, 1e-12)
    assert instantaneous_user_rate(1, pair, [1.0, 1.0], [1.0, 1.0], near_noiseless) == pytest.approx(1.0)
    assert instantaneous_user_rate(1, pair, [1.0, 1.0], [0.0, 0.0], b) == 0.0
    off = derive_groups(TransmissionMode((1, 1)), 2)
    assert instantaneous_user_rate(2, off, [1.0, 1.0], [1.0, 1.0], b) == 0.0


def test_zero_power_rate(fig2_gains):
    est = mc_ergodic_sum_rate((2, 1), fig2_gains, LinkBudget(1e-30), McConfig(1000, 1))
    assert est.mean < 1e-9


def test_fig2_mc_matches_closed_form(fig2_gains):
    b = LinkBudget.from_snr_db(10.0)
    est = mc_ergodic_sum_rate((2, 1), fig2_gains, b, McConfig(5000, 3))
    closed = ergodic_sum_rate_closed(TransmissionMode((2, 1)), fig2_gains, b).sum_rate
    assert abs(est.mean - closed) < 3 * est.std_error


def test_std_error_scaling(fig2_gains):
    b = LinkBudget.from_snr_db(20.0)
    small = mc_ergodic_sum_rate((1, 1), fig2_gains, b, McConfig(20_000, 4))
    large = mc_ergodic_sum_rate((1, 1), fig2_gains, b, McConfig(40_000, 4))
    assert large.std_error / small.std_error == pytest.approx(1 / np.sqrt(2), rel=0.2)
    assert large.realizations == 40_000


def test_mc_shape_mismatch(fig2_gains):
    with pytest.raises(ValueError):
        mc_ergodic_sum_rate((1, 2, 0), fig2_gains, LinkBudget(1.0))


def test_mc_calibration():
    rng = make_stream(77)
    inside = 0
    for trial in range(50):
        n, k = int(rng.integers(2, 5)), int(rng.integers(1, 5))
        lay = CellLayout.canonical(n)
        gains = build_pathloss_matrix(sample_uniform_users(k, lay.cell_radius, rng), lay)
        cands = enumerate_ideal(n, k)
        mode = cands.modes[int(rng.integers(len(cands)))]
        b = LinkBudget.from_snr_db(float(rng.uniform(-10, 40)))
        est = mc_ergodic_sum_rate(mode, gains, b, McConfig(5000, 78, trial))
        inside += abs(est.mean - ergodic_sum_rate_closed(mode, gains, b).sum_rate) < 3 * est.std_error
    assert inside >= 48


def test_select_singleton(fig2_gains):
    only = CandidateSet((TransmissionMode((1, 2)),), "ideal")
    assert select_best_mode(only, fig2_gains, LinkBudget(10.0))[0] == TransmissionMode((1, 2))


def test_select_empty(fig2_gains):
    with pytest.raises(ValueError):
        select_best_mode([], fig2_gains, LinkBudget(10.0))


@pytest.mark.parametrize("snr, expected", [(10.0, (2, 1)), (40.0, (1, 1))])
def test_select_fig2(fig2_gains, snr, expected):
    # with port 1 at (4, 0) the multi-user winner serves user 1 from port 2
    best, rate = select_best_mode(enumerate_ideal(2, 2), fig2_gains, LinkBudget.from_snr_db(snr))
    assert best == TransmissionMode(expected)


def test_select_fig2_mirrored_port_labels():
    lay = CellLayout(ports=((-4.0, 0.0), (4.0, 0.0)))
    gains = build_pathloss_matrix([(-2.5, -2.0), (3.0, 4.5)], lay)
    best10, _ = select_best_mode(enumerate_ideal(2, 2), gains, LinkBudget.from_snr_db(10.0))
    best40, _ = select_best_mode(enumerate_ideal(2, 2), gains, LinkBudget.from_snr_db(40.0))
    assert best10 == TransmissionMode((1, 2)) and best40 == TransmissionMode((1, 1))


def test_select_monte_carlo_agrees(fig2_gains):
    b = LinkBudget.from_snr_db(10.0)
    best, rate = select_best_mode(enumerate_ideal(2, 2), fig2_gains, b, "monte_carlo", McConfig(5000, 5))
    assert best == TransmissionMode((2, 1))


def test_select_order_invariant(fig2_gains):
    b = LinkBudget.from_snr_db(25.0)
    modes = list(enumerate_ideal(2, 2))
    assert select_best_mode(modes, fig2_gains, b) == select_best_mode(modes[::-1], fig2_gains, b)


def test_select_ties_keep_first():
    gains = np.array([[1.0, 1.0], [1.0, 1.0]])
    best, _ = select_best_mode([TransmissionMode((1, 2)), TransmissionMode((2, 1))], gains, LinkBudget(3.0))
    assert best == TransmissionMode((1, 2))


def test_unknown_method(fig2_gains):
    with pytest.raises(ValueError):
        select_best_mode(enumerate_ideal(2, 2), fig2_gains, LinkBudget(1.0), "oracle")


def test_selection_gain_and_subset_bound():
    rng = make_stream(31)
    lay = CellLayout.canonical(3)
    ideal = enumerate_ideal(3, 3)
    for _ in range(20):
        users = sample_uniform_users(3, lay.cell_radius, rng)
        gains = build_pathloss_matrix(users, lay)
        proposed = generate_min_distance_candidates(distance_matrix(users, lay))
        for snr in (0.0, 20.0, 40.0):
            b = LinkBudget.from_snr_db(snr)
            _, best = select_best_mode(proposed, gains, b)
            for m in proposed:
                assert best >= ergodic_sum_rate_closed(m, gains, b).sum_rate
            assert best <= select_best_mode(ideal, gains, b)[1]


def test_experiment_config_validation():
    with pytest.raises(ValueError):
        DropExperimentConfig(snr_grid_db=())
    with pytest.raises(ValueError):
        DropExperimentConfig(selectors=("best_guess",))
    with pytest.raises(ValueError):
        DropExperimentConfig(fixed_modes=((1, 2, 3),))


def test_cell_average_rows_and_single_drop():
    cfg = DropExperimentConfig(2, 2, (0.0, 10.0), drops=1, realizations=10, seed=1,
                               selectors=(mc.PROPOSED,), fixed_modes=((1, 2),))
    rows = cell_average_experiment(cfg)
    assert [(r.snr_db, r.selector) for r in rows] == [
        (0.0, mc.PROPOSED), (0.0, "fixed_mode[1,2]"), (10.0, mc.PROPOSED), (10.0, "fixed_mode[1,2]")]
    assert all(r.std_error == 0.0 and r.drops == 1 for r in rows)


def test_cell_average_symmetric_fixed_modes():
    cfg = DropExperimentConfig(2, 2, (0.0, 20.0, 40.0), drops=400, realizations=10, seed=2,
                               selectors=(), fixed_modes=((1, 2), (2, 1)))
    rows = cell_average_experiment(cfg)
    for a, b in zip(rows[::2], rows[1::2]):
        assert abs(a.mean_sum_rate - b.mean_sum_rate) < 2 * np.hypot(a.std_error, b.std_error)


def test_cell_average_independent_of_workers():
    cfg = DropExperimentConfig(2, 2, (0.0, 30.0), drops=12, realizations=200, seed=3,
                               selectors=(mc.PROPOSED, mc.IDEAL_MC, mc.IDEAL_CLOSED))
    assert cell_average_experiment(cfg, workers=1) == cell_average_experiment(cfg, workers=3)


def _crossover(gains, a, b):
    from scipy.optimize import brentq

    diff = lambda snr: (ergodic_sum_rate_closed(TransmissionMode(a), gains, LinkBudget.from_snr_db(snr)).sum_rate
                        - ergodic_sum_rate_closed(TransmissionMode(b), gains, LinkBudget.from_snr_db(snr)).sum_rate)
    return brentq(diff, 0.0, 60.0, xtol=1e-6)


def test_fig2_crossover_either_port_labeling(fig2_gains):
    mirrored = build_pathloss_matrix([(-2.5, -2.0), (3.0, 4.5)], CellLayout(ports=((-4.0, 0.0), (4.0, 0.0))))
    canonical = _crossover(fig2_gains, (1, 1), (2, 1))
    assert 28.0 <= canonical <= 38.0
    assert _crossover(mirrored, (1, 1), (1, 2)) == pytest.approx(canonical, abs=1e-4)
