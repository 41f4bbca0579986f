import numpy as np
from hypothesis import assume, given, strategies as st

from medianscape.hajlasz import canonical_gradient, gradient_defect
from medianscape.maximal import hl_maximal, median_maximal
from medianscape.medians import gamma_median, pth_mean_via_medians
from medianscape.qbfs import Lorentz, Lp, quasinorm
from medianscape.space import build_space
from oracles import median_property_failures, median_oracle

gammas = st.floats(0.01, 0.99)
ints = st.lists(st.integers(-20, 20), min_size=1, max_size=30)
masses64 = st.integers(7, 640).map(lambda k: k / 64)


@st.composite
def line_instance(draw, max_n=30):
    n = draw(st.integers(1, max_n))
    xs = draw(st.lists(st.integers(0, 500), min_size=n, max_size=n, unique=True))
    m = draw(st.lists(masses64, min_size=n, max_size=n))
    u = draw(st.lists(st.integers(-20, 20), min_size=n, max_size=n))
    v = draw(st.lists(st.integers(-20, 20), min_size=n, max_size=n))
    sp = build_space(np.array(xs, dtype=float), mass=np.array(m))
    return sp, np.array(u, dtype=float), np.array(v, dtype=float)


@given(line_instance(), gammas, gammas, st.integers(-5, 5), st.integers(1, 6), st.data())
def test_median_properties(inst, g1, g2, shift, factor, data):
    sp, u, v = inst
    c = data.draw(st.integers(0, sp.n - 1))
    r1 = data.draw(st.floats(0.5, 300))
    r2 = r1 + data.draw(st.floats(0, 300))
    assert median_property_failures(sp, u, v, g1, g2, c, r1, r2, shift, factor) == []


@given(ints, gammas)
def test_median_is_a_sample_value(u, g):
    u = np.array(u, dtype=float)
    assert gamma_median(u, g) in u
    assert gamma_median(u, g) == median_oracle(u, np.ones(u.size), g)


@given(st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=40), st.sampled_from([0.5, 1.0, 2.0, 3.0]))
def test_pth_mean_identity(u, p):
    lhs, rhs = pth_mean_via_medians(np.array(u), p)
    assert abs(lhs - rhs) <= 1e-12 * max(lhs, 1e-300) or lhs == rhs


@given(line_instance(20), gammas)
def test_maximal_dominates_values(inst, g):
    sp, u, _ = inst
    assert np.all(hl_maximal(sp, u) >= np.abs(u) * (1 - 1e-15))
    M = median_maximal(sp, u, g)
    # the singleton ball gives |u(x)|
    assert np.all(M >= np.abs(u))
    assert np.all(M <= np.abs(u).max())


@given(line_instance(20), st.floats(0.2, 1.0))
def test_canonical_gradient_feasible(inst, s):
    sp, u, _ = inst
    g = canonical_gradient(sp, u, s).g
    assert gradient_defect(sp, u, g, s) == 0.0
    assume(sp.n > 1 and np.any(g > 0))
    assert gradient_defect(sp, u, 0.5 * g, s) > 0


@given(line_instance(20), st.sampled_from([Lp(0.5), Lp(1), Lp(2), Lorentz(2, 1), Lorentz(1, 2)]))
def test_quasinorm_lattice_and_homogeneity(inst, spec):
    sp, u, v = inst
    small, big = np.abs(u), np.abs(u) + np.abs(v)
    assert quasinorm(spec, small, sp.mass) <= quasinorm(spec, big, sp.mass) * (1 + 1e-12)
    assert np.isclose(quasinorm(spec, 4 * u, sp.mass), 4 * quasinorm(spec, u, sp.mass), rtol=1e-12)
