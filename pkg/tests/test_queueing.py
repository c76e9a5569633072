import numpy as np
import pytest

from chargenet.errors import ConfigError
from chargenet.queueing import (QueueParams, calibrate_slope,
                                erlang_c_wait_prob, simulate_wait_prob)


def test_param_validation():
    with pytest.raises(ConfigError):
        QueueParams(theta=0.0)
    with pytest.raises(ConfigError):
        QueueParams(nu=-0.1)
    with pytest.raises(ConfigError):
        QueueParams(kappa=1.0)
    with pytest.raises(ConfigError):
        QueueParams(kappa=0.0)


def test_wait_prob_limits():
    qp = QueueParams()
    assert erlang_c_wait_prob(0.0, 3, qp) == 1.0
    # service level degrades as arrivals rise
    zs = [erlang_c_wait_prob(x, 3, qp) for x in (0.5, 1.5, 2.5, 2.9)]
    assert all(b < a for a, b in zip(zs, zs[1:]))
    assert all(0 < z < 1 for z in zs)


def test_wait_prob_instability():
    qp = QueueParams()
    with pytest.raises(ValueError, match="unstable"):
        erlang_c_wait_prob(3.0, 3, qp)
    with pytest.raises(ValueError, match="unstable"):
        simulate_wait_prob(3.0, 3, qp)


def test_wait_prob_large_station_no_overflow():
    qp = QueueParams()
    z = erlang_c_wait_prob(180.0, 200, qp)
    assert 0.0 < z <= 1.0


def test_formula_matches_simulation():
    # waits are serially correlated, so the error is well above the
    # binomial SE at high utilization; 1.5e-2 at 2e5 arrivals is loose
    # but catches any structural bug.  The fine-grained check with 1e6
    # arrivals lives in the acceptance suite.
    qp = QueueParams()
    rng = np.random.default_rng(7)
    for _ in range(4):
        eta = int(rng.integers(1, 7))
        rho = rng.uniform(0.3, 0.88)
        xi = rho * eta / qp.theta
        z = erlang_c_wait_prob(xi, eta, qp)
        zh = simulate_wait_prob(xi, eta, qp, n_arrivals=200_000,
                                seed=int(rng.integers(1 << 30)))
        assert abs(z - zh) < 1.5e-2


def test_calibrated_slope_values():
    qp = QueueParams(kappa=0.5)
    assert calibrate_slope(qp, 1).omega == pytest.approx(0.608, abs=5e-3)
    assert calibrate_slope(qp, 2).omega == pytest.approx(0.7511, abs=5e-3)


def test_slope_monotone_in_eta():
    qp = QueueParams(kappa=0.9)
    slopes = [calibrate_slope(qp, k).omega for k in range(1, 6)]
    assert all(0 < w < 1 for w in slopes)
    assert all(b >= a - 1e-9 for a, b in zip(slopes, slopes[1:]))


def test_slope_is_largest_grid_consistent():
    # the cap is calibrated on a finite arrival grid: the floor holds at
    # every grid rate under the cap, and the first grid rate above the
    # cap already breaks it (otherwise omega was not maximal)
    qp = QueueParams(kappa=0.7)
    for eta in (1, 3):
        omega = calibrate_slope(qp, eta).omega
        grid = np.linspace(0.0, 0.999 * eta / qp.theta, 400)[1:]
        below = grid[grid * qp.theta <= omega * eta]
        above = grid[grid * qp.theta > omega * eta]
        assert below.size and above.size
        assert erlang_c_wait_prob(below[-1], eta, qp) >= qp.kappa - 1e-9
        assert erlang_c_wait_prob(above[0], eta, qp) < qp.kappa


def test_calibration_guards():
    with pytest.raises(ConfigError):
        calibrate_slope(QueueParams(), 0)
    with pytest.raises(ConfigError):
        calibrate_slope(QueueParams(), 2, grid=np.array([]))
