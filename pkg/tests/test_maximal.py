import numpy as np
import pytest

from medianscape.errors import ValidationError
from medianscape.maximal import count_thresholds, hl_maximal, median_maximal
from medianscape.medians import count_threshold
from medianscape.space import build_space, generate_space
from oracles import dyadic_masses, hl_maximal_oracle, median_maximal_oracle


def _random_space(rng, n, kind):
    m = dyadic_masses(rng, n)
    if kind == "line":
        return build_space(np.sort(rng.choice(200, n, replace=False)).astype(float), mass=m)
    if kind == "plane":
        return build_space(rng.integers(0, 12, (n, 2)).astype(float) + rng.random((n, 2)) * 1e-3, mass=m)
    X = rng.random((n, 3))
    D = np.sqrt(((X[:, None] - X[None]) ** 2).sum(-1))
    return build_space(list(range(n)), D, m)


def test_line_example(line3):
    np.testing.assert_array_equal(median_maximal(line3, [0.0, 0.0, 3.0], 0.5), [0.0, 0.0, 3.0])
    np.testing.assert_allclose(hl_maximal(line3, [0.0, 0.0, 3.0]), [1.0, 1.0, 3.0])


@pytest.mark.parametrize("kind", ["line", "plane", "table"])
@pytest.mark.parametrize("seed", range(6))
def test_against_oracles(kind, seed):
    rng = np.random.default_rng(100 + seed)
    n = int(rng.integers(2, 25))
    sp = _random_space(rng, n, kind)
    u = rng.integers(-4, 5, n).astype(float)
    for R in (np.inf, float(np.median(sp.dist_row(0)[1:])) + 1e-9):
        np.testing.assert_allclose(hl_maximal(sp, u, R), hl_maximal_oracle(sp, u, R), rtol=1e-12)
        for g in (0.1, 0.5, 0.9):
            np.testing.assert_array_equal(median_maximal(sp, u, g, R), median_maximal_oracle(sp, u, g, R))


def test_uniform_grid_against_oracle():
    sp = generate_space("grid1d", n=40)
    u = np.random.default_rng(1).integers(0, 9, 40).astype(float)
    for g in (0.05, 0.3, 0.5):
        np.testing.assert_array_equal(median_maximal(sp, u, g, 0.2), median_maximal_oracle(sp, u, g, 0.2))


def test_count_thresholds():
    ct = count_thresholds(0.3, 10)
    assert ct.tolist() == [count_threshold(0.3, m) for m in range(0, 11)]


def test_bounds():
    sp = generate_space("grid2d", n=8)
    u = np.random.default_rng(2).standard_normal(sp.n)
    M = median_maximal(sp, u, 0.5)
    assert np.all(M >= np.abs(u) * 0)
    assert np.all(M <= np.abs(u).max())
    assert np.all(hl_maximal(sp, u) >= np.abs(u) - 1e-15)


def test_validation(line3):
    with pytest.raises(ValidationError):
        hl_maximal(line3, [1.0, 2.0])
    with pytest.raises(ValidationError):
        median_maximal(line3, [1.0, 2.0, 3.0], 1.5)
    with pytest.raises(ValidationError):
        hl_maximal(line3, [1.0, np.nan, 3.0])
