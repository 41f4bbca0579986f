import numpy as np
import pytest

from medianscape.boyd import boyd_index, boyd_indices, candidates, default_grid, fit_slope, phi_table, phi_x
from medianscape.errors import ValidationError
from medianscape.qbfs import Lorentz, Lp
from medianscape.space import generate_space


@pytest.fixture(scope="module")
def line512():
    return generate_space("grid1d", n=512)


@pytest.fixture(scope="module")
def line2048():
    # two decades of gamma above 8/n need n >= 1600
    return generate_space("grid1d", n=2048)


def test_candidates_deterministic(line512):
    a = candidates(line512, ["union_indicators(3)", "seeded_random(4)"], seed=5)
    b = candidates(line512, ["union_indicators(3)", "seeded_random(4)"], seed=5)
    assert len(a) == len(b) > 0
    assert all(np.array_equal(x, y) for x, y in zip(a, b))
    with pytest.raises(ValidationError):
        candidates(line512, "gaussians")


def test_phi_at_least_one_and_monotone(line512):
    g = [0.5, 0.2, 0.05, 0.01]
    tab = phi_table([Lp(1), Lp(2)], line512, g, "ball_indicators")
    assert np.all(tab >= 1.0)
    # smaller gamma -> larger median maximal function
    assert np.all(np.diff(tab, axis=1) >= 0)
    assert phi_x(Lp(1), line512, 0.2, "ball_indicators") == tab[0, 1]


def test_slope_fit_recovers_power():
    g = np.geomspace(0.5, 0.001, 10)
    a, res = fit_slope(g, 3.0 * g ** -0.7)
    assert a == pytest.approx(0.7, abs=1e-12)
    assert res < 1e-12


def test_l1_index_near_one(line2048):
    est = boyd_index(Lp(1), line2048, default_grid(line2048, 8), "ball_indicators")
    assert est.ceiling == 1.0
    assert 0.5 <= est.alpha_hat <= 1.15
    assert len(est.rows()) == 8


def test_indices_share_maximal_functions(line2048):
    g = default_grid(line2048, 6)
    ests = boyd_indices([Lp(2), Lorentz(2, 1)], line2048, g, "ball_indicators")
    for e in ests:
        assert e.alpha_hat <= e.ceiling + 0.15


def test_grid_validation(line512):
    with pytest.raises(ValidationError):
        boyd_index(Lp(1), line512, [0.5, 0.1, 0.01], "ball_indicators")
    with pytest.raises(ValidationError):
        boyd_index(Lp(1), line512, [0.5, 0.2, 0.1, 0.05], "ball_indicators")
    with pytest.raises(ValidationError):
        boyd_index(Lp(1), line512, [0.5, 0.1, 0.01, 1e-4], "ball_indicators")
    with pytest.raises(ValidationError):
        boyd_index(Lp(1), line512, [0.01, 0.1, 0.3, 0.5], "ball_indicators")
