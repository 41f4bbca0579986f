import numpy as np
import pytest

from medianscape.errors import ValidationError
from medianscape.qbfs import (Lorentz, Lp, Orlicz, VarExp, aoki_exponent, boyd_ceiling, estimate_c_delta,
                              exponent_field, load_spec, orlicz_power, orlicz_table, parse_phi, quasinorm,
                              verify_axioms)
from medianscape.space import generate_space
from oracles import lorentz_quadrature


@pytest.mark.parametrize("p", [0.5, 1.0, 2.0, 3.0])
def test_lp_closed_form(p):
    rng = np.random.default_rng(1)
    u, m = rng.standard_normal(30), rng.uniform(0.1, 10, 30)
    assert quasinorm(Lp(p), u, m) == pytest.approx(np.sum(m * np.abs(u) ** p) ** (1 / p), rel=1e-13)
    assert quasinorm(Lp(np.inf), u, m) == np.abs(u).max()


@pytest.mark.parametrize("p, q", [(2, 1), (1, 2), (0.5, 1), (3, 3), (2, 0.5)])
def test_lorentz_against_quadrature(p, q):
    rng = np.random.default_rng(int(10 * p + q))
    for _ in range(5):
        u, m = rng.exponential(1.0, 20), rng.uniform(0.1, 10, 20)
        assert quasinorm(Lorentz(p, q), u, m) == pytest.approx(lorentz_quadrature(u, m, p, q), rel=1e-10)


def test_lorentz_pp_is_lp_up_to_constant():
    rng = np.random.default_rng(2)
    u, m = rng.standard_normal(40), rng.uniform(0.1, 10, 40)
    # layer cake: ||u||_{p,p}^p = ||u||_p^p / p
    assert quasinorm(Lorentz(2, 2), u, m) == pytest.approx(quasinorm(Lp(2), u, m) / np.sqrt(2), rel=1e-12)


def test_weak_lorentz():
    u, m = np.array([4.0, 1.0]), np.array([1.0, 3.0])
    assert quasinorm(Lorentz(2, np.inf), u, m) == pytest.approx(max(4.0 * 1.0, 1.0 * 2.0))


def test_orlicz_power_matches_lp():
    rng = np.random.default_rng(3)
    u, m = rng.standard_normal(25), rng.uniform(0.1, 10, 25)
    assert quasinorm(Orlicz(orlicz_power(3)), u, m) == pytest.approx(quasinorm(Lp(3), u, m), rel=1e-9)


def test_orlicz_table_linear_is_l1():
    phi = orlicz_table([0.0, 1.0, 2.0], [0.0, 1.0, 2.0])
    u, m = np.array([1.0, -3.0]), np.array([0.5, 2.0])
    assert quasinorm(Orlicz(phi), u, m) == pytest.approx(6.5, rel=1e-9)


def test_varexp_constant_field_matches_lp():
    sp = generate_space("grid1d", n=32)
    spec = VarExp(exponent_field(sp, np.full(32, 2.5)))
    u = np.sin(np.arange(32.0))
    assert quasinorm(spec, u, sp.mass) == pytest.approx(quasinorm(Lp(2.5), u, sp.mass), rel=1e-9)
    assert spec.exponent.C_p == 0.0


def test_ceilings():
    sp = generate_space("grid1d", n=16)
    assert boyd_ceiling(Lp(2)) == 0.5
    assert boyd_ceiling(Lorentz(2, 1)) == 0.5
    assert boyd_ceiling(Orlicz(orlicz_power(3))) == pytest.approx(1 / 3)
    assert boyd_ceiling(VarExp(exponent_field(sp, np.linspace(1.5, 2.5, 16)))) == pytest.approx(1 / 1.5)


@pytest.mark.parametrize("spec", [Lp(0.5), Lp(2), Lorentz(2, 1), Orlicz(orlicz_power(2))])
def test_audits(spec):
    res = aoki_exponent(spec, trials=60)
    assert res.worst_ratio <= 1.0 + 1e-12
    assert estimate_c_delta(spec, trials=60) >= 1.0
    assert verify_axioms(spec, generate_space("grid1d", n=24), trials=30).passed


def test_parse_phi():
    assert parse_phi("power(2)").beta == 2.0
    assert not np.isfinite(parse_phi("exp_minus_one").doubling)
    with pytest.raises(ValidationError):
        parse_phi("cosh")


def test_spec_validation():
    with pytest.raises(ValidationError):
        Lp(0)
    with pytest.raises(ValidationError):
        Lorentz(np.inf, 1)
    with pytest.raises(ValidationError):
        quasinorm(Lp(1), [1.0, np.inf])


def test_load_spec_files(tmp_path):
    sp = generate_space("grid1d", n=4)
    (tmp_path / "p.csv").write_text("id,p\n0,2\n1,2\n2,2\n3,2\n")
    (tmp_path / "v.cfg").write_text("variant=VarExp\np_file=p.csv\n")
    spec = load_spec(tmp_path / "v.cfg", sp)
    assert quasinorm(spec, np.ones(4), sp.mass) == pytest.approx(1.0, rel=1e-9)
    (tmp_path / "t.csv").write_text("t,phi\n0,0\n1,1\n2,4\n")
    (tmp_path / "o.cfg").write_text("variant=Orlicz\nphi_table=t.csv\n")
    assert load_spec(tmp_path / "o.cfg").variant == "Orlicz"
    (tmp_path / "bad.cfg").write_text("variant=Sobolev\n")
    with pytest.raises(ValidationError):
        load_spec(tmp_path / "bad.cfg")
