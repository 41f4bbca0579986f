"""Quasinorms for Lebesgue, Lorentz, Orlicz and variable-exponent spaces."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .errors import AuditError, ValidationError
from .space import MetricMeasureSpace, build_space

REL_TOL = 1e-10
_AUDIT_T = np.geomspace(1e-6, 1e6, 241)


# ---------------------------------------------------------------- Orlicz functions

@dataclass(frozen=True, eq=False)
class OrliczFunction:
    """Increasing Phi on [0, inf) with Phi(0) = 0 and its audited constants.

    C: Phi(t/C) <= Phi(t)/2;  (C0, beta): Phi(s) <= C0 (s/t)^beta Phi(t) for s <= t;
    doubling: Phi(2t) <= doubling * Phi(t) (inf when Phi is not doubling).
    """

    name: str
    func: Callable[[np.ndarray], np.ndarray]
    C: float
    C0: float
    beta: float
    doubling: float

    def __call__(self, t):
        with np.errstate(over="ignore"):
            return self.func(np.asarray(t, dtype=float))


def _audit_orlicz(phi: OrliczFunction) -> OrliczFunction:
    t = _AUDIT_T
    v = phi(t)
    ok = np.isfinite(v)
    t, v = t[ok], v[ok]
    if np.any(np.diff(v) < 0) or np.any(v < 0):
        raise ValidationError(f"Orlicz function {phi.name} is not nondecreasing and nonnegative")
    if not np.all(phi(t / phi.C) <= 0.5 * v * (1 + 1e-12)):
        raise AuditError(f"{phi.name}: Phi(t/C) <= Phi(t)/2 fails for C={phi.C}")
    s, tt = np.meshgrid(t, t, indexing="ij")
    lower = s <= tt
    vs, vt = phi(s), phi(tt)
    bound = phi.C0 * (s / tt) ** phi.beta * vt
    if not np.all((vs <= bound * (1 + 1e-12))[lower & np.isfinite(vt)]):
        raise AuditError(f"{phi.name}: Phi(s) <= C0 (s/t)^beta Phi(t) fails for C0={phi.C0}, beta={phi.beta}")
    if np.isfinite(phi.doubling):
        v2 = phi(2 * t)
        fin = np.isfinite(v2)
        if not np.all(v2[fin] <= phi.doubling * v[fin] * (1 + 1e-12)):
            raise AuditError(f"{phi.name}: doubling constant {phi.doubling} too small")
    return phi


def orlicz_power(p: float) -> OrliczFunction:
    p = float(p)
    if not p > 0:
        raise ValidationError("power(p) needs p > 0")
    return _audit_orlicz(OrliczFunction(f"power({p:g})", lambda t: t ** p, 2 ** (1 / p), 1.0, p, 2 ** p))


def orlicz_power_log(p: float = 1.0) -> OrliczFunction:
    """t^p log(e + t)."""
    p = float(p)
    f = lambda t: t ** p * np.log(np.e + t)
    # log(e + 2t) <= log 2 + log(e + t) <= (1 + log 2) log(e + t)
    dbl = 2 ** p * (1 + math.log(2))
    return _audit_orlicz(OrliczFunction(f"power_log({p:g})", f, 2 ** (1 / p), 1.0, p, dbl))


def orlicz_exp_minus_one() -> OrliczFunction:
    """e^t - 1: convex with Phi(0) = 0, so beta = 1; not doubling."""
    return _audit_orlicz(OrliczFunction("exp_minus_one", np.expm1, 2.0, 1.0, 1.0, np.inf))


def orlicz_table(t, values) -> OrliczFunction:
    """Piecewise-linear Phi through (t, values), extended linearly past the last node."""
    t = np.asarray(t, dtype=float)
    v = np.asarray(values, dtype=float)
    if t.ndim != 1 or t.shape != v.shape or t.size < 2:
        raise ValidationError("Orlicz table needs two equal-length columns with at least 2 rows")
    if t[0] != 0:
        t, v = np.concatenate(([0.0], t)), np.concatenate(([0.0], v))
    if v[0] != 0 or np.any(np.diff(t) <= 0) or np.any(np.diff(v) <= 0):
        raise ValidationError("Orlicz table must be strictly increasing with Phi(0)=0")
    slope = (v[-1] - v[-2]) / (t[-1] - t[-2])

    def f(x):
        x = np.asarray(x, dtype=float)
        return np.where(x <= t[-1], np.interp(x, t, v), v[-1] + slope * (x - t[-1]))

    grid = np.union1d(np.geomspace(t[1] * 1e-3, t[-1] * 1e3, 241), np.union1d(_AUDIT_T, t[1:]))
    fg = f(grid)
    s, tt = np.meshgrid(grid, grid, indexing="ij")
    low = s < tt
    beta = float(np.min(np.log(f(tt[low]) / f(s[low])) / np.log(tt[low] / s[low])))
    beta = max(beta * (1 - 1e-9), 1e-6)
    C = 2.0
    while not np.all(f(_AUDIT_T / C) <= 0.5 * f(_AUDIT_T) * (1 + 1e-12)):
        C *= 2.0
    both = np.union1d(grid, 0.5 * grid)
    dbl = float(np.max(f(2 * both) / f(both))) * (1 + 1e-9)
    return _audit_orlicz(OrliczFunction("table", f, C, 1.0, beta, dbl))


def parse_phi(text: str) -> OrliczFunction:
    m = re.fullmatch(r"\s*(\w+)\s*(?:\(([^)]*)\))?\s*", text)
    if not m:
        raise ValidationError(f"cannot parse Orlicz function {text!r}")
    name, arg = m.group(1), m.group(2)
    if name == "power":
        return orlicz_power(float(arg))
    if name == "power_log":
        return orlicz_power_log(float(arg) if arg else 1.0)
    if name == "exp_minus_one":
        return orlicz_exp_minus_one()
    raise ValidationError(f"unknown Orlicz function {name!r}; catalog is power, power_log, exp_minus_one")


# ---------------------------------------------------------------- exponent fields

@dataclass(frozen=True, eq=False)
class ExponentField:
    p: np.ndarray
    p_minus: float
    p_plus: float
    C_p: float
    audit_mode: str
    p_inf: float | None = None
    a: float | None = None
    decay_integral: float | None = None


def exponent_field(space: MetricMeasureSpace, p, p_inf: float | None = None, a: float | None = None,
                   seed: int = 0) -> ExponentField:
    """Per-point exponents with the smallest log-Holder constant over audited pairs."""
    p = np.asarray(p, dtype=float)
    if p.shape != (space.n,) or not np.all(np.isfinite(p)) or np.any(p <= 0):
        raise ValidationError("exponent field needs one finite positive value per point")
    n = space.n
    C_p = 0.0
    if n <= 2048:
        mode = "all pairs"
        for i in range(n - 1):
            d = space.dist_row(i)[i + 1:]
            C_p = max(C_p, float(np.max(np.abs(p[i + 1:] - p[i]) * np.log(np.e + 1.0 / d))))
    else:
        mode = "sampled pairs"
        rng = np.random.default_rng(seed)
        m = 4_000_000
        x = rng.integers(0, n, m)
        y = rng.integers(0, n, m)
        keep = x != y
        x, y = x[keep], y[keep]
        for lo in range(0, x.size, 200_000):
            xs, ys = x[lo:lo + 200_000], y[lo:lo + 200_000]
            if space.table is not None:
                d = space.table[xs, ys]
            else:
                diff = space.coords[xs] - space.coords[ys]
                d = (space.scale * np.sqrt((diff * diff).sum(1))) ** space.power
            C_p = max(C_p, float(np.max(np.abs(p[xs] - p[ys]) * np.log(np.e + 1.0 / d))))
    decay = None
    if p_inf is not None:
        if not (a is not None and 0 < a < 1):
            raise ValidationError("decay certificate needs 0 < a < 1")
        gap = np.abs(p - p_inf)
        with np.errstate(divide="ignore"):
            decay = float(np.sum(space.mass * np.where(gap > 0, a ** (1.0 / np.where(gap > 0, gap, 1.0)), 0.0)))
    return ExponentField(p, float(p.min()), float(p.max()), C_p, mode, p_inf, a, decay)


# ---------------------------------------------------------------- specs

VARIANTS = ("Lp", "Lorentz", "Orlicz", "VarExp")


@dataclass(frozen=True, eq=False)
class QuasinormSpec:
    variant: str
    p: float | None = None
    q: float | None = None
    phi: OrliczFunction | None = None
    exponent: ExponentField | None = None
    rho: float = 1.0
    rho_tag: str = "analytic"
    c_delta: float | None = None
    absolutely_continuous: bool = True
    justification: str = ""
    params: dict = field(default_factory=dict)

    def describe(self) -> str:
        if self.variant == "Lp":
            return f"L^{self.p:g}"
        if self.variant == "Lorentz":
            return f"L^({self.p:g},{self.q:g})"
        if self.variant == "Orlicz":
            return f"L^Phi[{self.phi.name}]"
        return f"L^p(.)[{self.exponent.p_minus:g},{self.exponent.p_plus:g}]"


def Lp(p: float) -> QuasinormSpec:
    p = float(p)
    if not p > 0:
        raise ValidationError("Lp needs p > 0")
    if math.isinf(p):
        return QuasinormSpec("Lp", p=p, rho=1.0, absolutely_continuous=False,
                             justification="max norm: not absolutely continuous")
    return QuasinormSpec("Lp", p=p, rho=min(1.0, p), justification="Lp with p finite")


def Lorentz(p: float, q: float) -> QuasinormSpec:
    p, q = float(p), float(q)
    if not (p > 0 and q > 0) or math.isinf(p):
        raise ValidationError("Lorentz needs 0 < p < inf and 0 < q <= inf")
    ac = not math.isinf(q)
    return QuasinormSpec("Lorentz", p=p, q=q, rho=min(1.0, p, q), absolutely_continuous=ac,
                         justification="Lorentz with p, q finite" if ac else "weak Lorentz (q = inf)")


def Orlicz(phi: OrliczFunction) -> QuasinormSpec:
    dbl = math.isfinite(phi.doubling)
    rho = min(1.0, phi.beta)
    return QuasinormSpec("Orlicz", phi=phi, rho=rho, absolutely_continuous=dbl,
                         justification="doubling Phi" if dbl else "non-doubling Phi")


def VarExp(field_: ExponentField) -> QuasinormSpec:
    return QuasinormSpec("VarExp", exponent=field_, rho=min(1.0, field_.p_minus),
                         justification="bounded exponent (p_plus finite)")


def boyd_ceiling(spec: QuasinormSpec) -> float | None:
    """Upper bound on the generalized upper Boyd index where one is known."""
    if spec.variant in ("Lp", "Lorentz"):
        return 0.0 if math.isinf(spec.p) else 1.0 / spec.p
    if spec.variant == "Orlicz":
        return 1.0 / spec.phi.beta
    return 1.0 / spec.exponent.p_minus


# ---------------------------------------------------------------- evaluation

def _lorentz(a: np.ndarray, w: np.ndarray, p: float, q: float) -> float:
    order = np.argsort(-a, kind="stable")
    a, w = a[order], w[order]
    cm = np.cumsum(w)
    ends = np.append(np.flatnonzero(a[1:] != a[:-1]), a.size - 1)
    lev = a[ends]
    W = cm[ends]
    pos = lev > 0
    lev, W = lev[pos], W[pos]
    if lev.size == 0:
        return 0.0
    if math.isinf(q):
        return float(np.max(lev * W ** (1.0 / p)))
    nxt = np.append(lev[1:], 0.0)
    total = np.sum(W ** (q / p) * (lev ** q - nxt ** q)) / q
    return float(total ** (1.0 / q))


def _modular(spec: QuasinormSpec, v: np.ndarray, w: np.ndarray, lam: float) -> float:
    with np.errstate(over="ignore"):
        if spec.variant == "Orlicz":
            return float(np.sum(w * spec.phi(v / lam)))
        return float(np.sum(w * (v / lam) ** spec.exponent.p))


def luxemburg(spec: QuasinormSpec, a: np.ndarray, w: np.ndarray) -> float:
    """inf{lam > 0 : modular(a / lam) <= 1} by doubling brackets and geometric bisection."""
    s = float(a.max()) if a.size else 0.0
    if s == 0.0:
        return 0.0
    v = a / s
    lo = hi = 1.0
    while _modular(spec, v, w, hi) > 1.0:
        hi *= 2.0
    while _modular(spec, v, w, lo) <= 1.0:
        lo *= 0.5
        if lo < 1e-300:
            raise ValidationError("modular does not reach 1")
    while hi / lo - 1.0 > REL_TOL * 0.5:
        mid = math.sqrt(lo * hi)
        if _modular(spec, v, w, mid) <= 1.0:
            hi = mid
        else:
            lo = mid
    return s * hi


def quasinorm(spec: QuasinormSpec, u, mass=None) -> float:
    a = np.abs(np.asarray(u, dtype=float)).ravel()
    w = np.ones_like(a) if mass is None else np.asarray(mass, dtype=float).ravel()
    if a.shape != w.shape:
        raise ValidationError("function and masses differ in length")
    if not np.all(np.isfinite(a)):
        raise ValidationError("non-finite function value")
    if spec.variant == "Lp":
        if math.isinf(spec.p):
            return float(a.max()) if a.size else 0.0
        s = float(a.max()) if a.size else 0.0
        if s == 0.0:
            return 0.0
        return s * float(np.sum(w * (a / s) ** spec.p) ** (1.0 / spec.p))
    if spec.variant == "Lorentz":
        return _lorentz(a, w, spec.p, spec.q)
    if spec.variant == "VarExp" and spec.exponent.p.shape != a.shape:
        raise ValidationError("exponent field does not match the function")
    return luxemburg(spec, a, w)


# ---------------------------------------------------------------- audits

def _audit_space(spec: QuasinormSpec, space: MetricMeasureSpace | None, seed: int) -> MetricMeasureSpace:
    if space is not None:
        return space
    if spec.variant == "VarExp":
        raise ValidationError("VarExp audits need the space carrying the exponent field")
    rng = np.random.default_rng(seed)
    return build_space(rng.random(24), None, rng.uniform(0.1, 10.0, 24))


def _random_functions(rng, n: int, k: int) -> np.ndarray:
    kind = rng.integers(0, 4)
    if kind == 0:
        return rng.standard_normal((k, n))
    if kind == 1:
        return (rng.random((k, n)) < rng.uniform(0.05, 0.6)).astype(float) * rng.uniform(0.1, 5.0, (k, 1))
    if kind == 2:
        f = rng.standard_normal((k, n)) ** 3
        f[rng.random((k, n)) < 0.7] = 0.0
        return f
    return rng.exponential(1.0, (k, n)) * rng.choice([-1.0, 1.0], (k, n))


@dataclass(frozen=True)
class AokiResult:
    rho: float
    tag: str
    worst_ratio: float   # max of lhs / rhs over trials at the returned rho


def aoki_exponent(spec: QuasinormSpec, space: MetricMeasureSpace | None = None, trials: int = 200,
                  seed: int = 0) -> AokiResult:
    """Analytic rho audited against ||sum f_k|| <= 4^(1/rho) (sum ||f_k||^rho)^(1/rho)."""
    space = _audit_space(spec, space, seed)
    rng = np.random.default_rng(seed)
    cases = []
    for _ in range(trials):
        k = int(rng.integers(2, 4))
        fs = _random_functions(rng, space.n, k)
        norms = np.array([quasinorm(spec, f, space.mass) for f in fs])
        cases.append((quasinorm(spec, fs.sum(axis=0), space.mass), norms))
    rho, tag = spec.rho, spec.rho_tag
    for _ in range(200):
        worst = 0.0
        for lhs, norms in cases:
            rhs = 4.0 ** (1.0 / rho) * np.sum(norms ** rho) ** (1.0 / rho)
            if rhs > 0:
                worst = max(worst, lhs / rhs)
        if worst <= 1.0 + 1e-12:
            return AokiResult(rho, tag, worst)
        rho *= 0.9
        tag = "empirical"
    raise AuditError("Aoki-Rolewicz audit failed for every tried exponent")


def with_aoki(spec: QuasinormSpec, space=None, trials: int = 200, seed: int = 0) -> QuasinormSpec:
    res = aoki_exponent(spec, space, trials, seed)
    return replace(spec, rho=res.rho, rho_tag=res.tag)


def estimate_c_delta(spec: QuasinormSpec, space: MetricMeasureSpace | None = None, trials: int = 200,
                     seed: int = 0) -> float:
    """max over random pairs of ||f+g|| / (||f|| + ||g||); a lower bound of the quasi-triangle constant."""
    space = _audit_space(spec, space, seed)
    rng = np.random.default_rng(seed + 1)
    best = 1.0
    for _ in range(trials):
        f, g = _random_functions(rng, space.n, 2)
        den = quasinorm(spec, f, space.mass) + quasinorm(spec, g, space.mass)
        if den > 0:
            best = max(best, quasinorm(spec, f + g, space.mass) / den)
    return best


@dataclass(frozen=True)
class AxiomReport:
    lattice_slack: float      # min over trials of ||g|| - ||f|| with |f| <= |g| (>= 0 expected)
    indicator_max: float      # largest ||chi_E|| seen (finite expected)
    fatou_slack: float        # min over trials of the monotone-sequence slack (>= 0 expected)
    passed: bool


def verify_axioms(spec: QuasinormSpec, space: MetricMeasureSpace, trials: int = 100, seed: int = 0) -> AxiomReport:
    rng = np.random.default_rng(seed)
    m = space.mass
    lat, ind, fat = np.inf, 0.0, np.inf
    for _ in range(trials):
        f = _random_functions(rng, space.n, 1)[0]
        g = f * (1.0 + rng.exponential(0.5, space.n)) * rng.choice([-1.0, 1.0], space.n)
        nf, ng = quasinorm(spec, f, m), quasinorm(spec, g, m)
        lat = min(lat, (ng - nf) / max(ng, 1e-300))
        E = rng.random(space.n) < rng.uniform(0.05, 0.95)
        ind = max(ind, quasinorm(spec, E.astype(float), m))
        # finite increasing sequence 0 <= f_k up to |f|
        steps = np.sort(rng.random(6))
        seq = [quasinorm(spec, np.abs(f) * np.minimum(1.0, t / steps[-1]), m) for t in steps]
        diffs = np.diff(seq) / max(seq[-1], 1e-300)
        tail = (seq[-1] - nf) / max(nf, 1e-300)
        fat = min(fat, float(diffs.min()) if diffs.size else 0.0, -abs(tail))
    tol = -1e-12
    return AxiomReport(float(lat), float(ind), float(fat), bool(lat >= tol and np.isfinite(ind) and fat >= tol))


# ---------------------------------------------------------------- spec files

def _num(cfg, key, default=None):
    v = cfg.get(key, default)
    if v is None:
        raise ValidationError(f"spec needs {key}")
    try:
        return float(v)
    except (TypeError, ValueError):
        raise ValidationError(f"spec value {key}={v!r} is not a number") from None


def spec_from_config(cfg: dict, space: MetricMeasureSpace | None = None, base_dir=".") -> QuasinormSpec:
    """Build a spec from key=value pairs.

    variant=Lp p=..; variant=Lorentz p=.. q=..; variant=Orlicz phi=power(3) or
    phi_table=file.csv (columns t,phi); variant=VarExp p_file=file.csv (id,p).
    """
    from pathlib import Path
    variant = str(cfg.get("variant", "")).strip()
    base = Path(base_dir)
    if variant.lower() == "lp":
        return Lp(_num(cfg, "p"))
    if variant.lower() == "lorentz":
        return Lorentz(_num(cfg, "p"), _num(cfg, "q"))
    if variant.lower() == "orlicz":
        if "phi" in cfg:
            return Orlicz(parse_phi(cfg["phi"]))
        if "phi_table" in cfg:
            data = np.loadtxt(base / cfg["phi_table"], delimiter=",", skiprows=1, ndmin=2)
            return Orlicz(orlicz_table(data[:, 0], data[:, 1]))
        raise ValidationError("Orlicz spec needs phi= or phi_table=")
    if variant.lower() == "varexp":
        if space is None:
            raise ValidationError("VarExp spec needs a space")
        from .io import read_function_csv
        p = read_function_csv(space, base / cfg["p_file"], "p") if "p_file" in cfg else None
        if p is None:
            raise ValidationError("VarExp spec needs p_file=")
        p_inf = _num(cfg, "p_inf") if "p_inf" in cfg else None
        a = _num(cfg, "a") if "a" in cfg else None
        return VarExp(exponent_field(space, p, p_inf, a))
    raise ValidationError(f"unknown variant {variant!r}; choose Lp, Lorentz, Orlicz, VarExp")


def load_spec(path, space: MetricMeasureSpace | None = None) -> QuasinormSpec:
    from pathlib import Path
    from .io import read_keyvalue
    return spec_from_config(read_keyvalue(path), space, Path(path).parent)
