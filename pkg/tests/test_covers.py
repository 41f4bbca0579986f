import numpy as np
import pytest

from medianscape.covers import (build_cover, discrete_convolution, discrete_maximal, discrete_median_convolution,
                                discrete_median_maximal, make_ladder, maximal_gradient_witness,
                                median_maximal_gradient_witness)
from medianscape.errors import ValidationError
from medianscape.hajlasz import canonical_gradient, gradient_defect
from medianscape.maximal import hl_maximal, median_maximal
from medianscape.space import build_space, generate_space


def check_cover(space, cover):
    n = space.n
    phi = cover.dense_phi(n)
    assert np.max(np.abs(phi.sum(0) - 1.0)) <= 1e-12
    near = np.zeros(n, dtype=bool)
    for x in cover.centers:
        near |= space.dist_row(int(x)) < cover.r / 2
    assert near.all()
    assert np.count_nonzero(phi > 0, axis=0).max() <= cover.overlap_bound
    for i, b in enumerate(cover.balls):
        assert phi[i, b].min() >= 1.0 / cover.overlap_bound
    assert cover.kappa <= cover.overlap_bound + 1
    for i, x in enumerate(cover.centers):
        d = space.dist_row(int(x))
        assert np.all(phi[i][d >= 2 * cover.r] == 0)


def test_line_cover_small():
    sp = generate_space("grid1d", n=10)
    cov = build_cover(sp, 0.4)
    assert len(cov.centers) == 5
    check_cover(sp, cov)


@pytest.mark.parametrize("kind, params", [("grid1d", {"n": 200}), ("grid2d", {"n": 16}),
                                          ("weighted_grid", {"n": 64, "weight": "power(2)"}),
                                          ("snowflake", {"a": 0.5, "n": 64})])
def test_cover_properties_across_scales(kind, params):
    sp = generate_space(kind, params)
    for r in make_ladder(sp, 1.0).scales:
        check_cover(sp, build_cover(sp, float(r)))


def test_single_point():
    sp = build_space([0.0])
    cov = build_cover(sp, 1.0)
    assert cov.dense_phi(1).tolist() == [[1.0]]


def test_convolutions_preserve_constants():
    sp = generate_space("grid2d", n=10)
    cov = build_cover(sp, 0.25)
    c = np.full(sp.n, 2.5)
    np.testing.assert_allclose(discrete_convolution(sp, c, cov), 2.5, rtol=1e-14)
    np.testing.assert_allclose(discrete_median_convolution(sp, c, 0.3, cov), 2.5, rtol=1e-14)


def test_discrete_maximal_bounds():
    sp = generate_space("grid1d", n=64)
    u = np.random.default_rng(0).standard_normal(64)
    lad = make_ladder(sp, 0.5)
    D = discrete_maximal(sp, u, lad)
    top = np.abs(u).max()
    assert np.all(D <= top * (1 + 1e-12)) and np.all(D >= 0)
    Dm = discrete_median_maximal(sp, u, 0.25, lad)
    assert np.all(Dm <= top * (1 + 1e-12)) and np.all(Dm >= 0)
    # each ball of the cover at scale r near x sits inside B(x, 3r)
    assert np.all(Dm <= 3 * median_maximal(sp, u, 0.25 / 3, 1.5) * (1 + 1e-12))
    assert np.all(D <= 3 * hl_maximal(sp, u, 1.5) * (1 + 1e-12))


def test_ladder_validation():
    sp = generate_space("grid1d", n=8)
    with pytest.raises(ValidationError):
        build_cover(sp, 0.0)
    lad = make_ladder(sp, 0.5)
    assert np.all(np.diff(lad.scales) < 0) and lad.scales[0] < 0.5


@pytest.mark.parametrize("n", [64, 128])
def test_witnesses_on_linear_function(n):
    sp = generate_space("grid1d", n=n)
    u = sp.positions[:, 0].copy()
    g = canonical_gradient(sp, u).g
    w1 = median_maximal_gradient_witness(sp, u, g, 0.25, 0.25)
    w2 = maximal_gradient_witness(sp, u, g, 0.25)
    for w in (w1, w2):
        assert w.defect == 0.0
        assert gradient_defect(sp, w.target, w.candidate) == 0.0
        assert w.k <= 2


def test_witness_rejects_non_gradient():
    sp = generate_space("grid1d", n=16)
    u = sp.positions[:, 0].copy()
    with pytest.raises(ValidationError):
        maximal_gradient_witness(sp, u, np.zeros(16), 0.25)
    with pytest.raises(ValidationError):
        median_maximal_gradient_witness(sp, u, np.ones(16), 0.75, 0.25)
