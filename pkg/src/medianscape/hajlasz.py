"""Hajlasz s-gradients: feasibility, constructions, minimal norms and capacities."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit, prange
from scipy import optimize, sparse

from ._kernels import dist_row_into
from .errors import AuditError, ValidationError
from .qbfs import Lp, QuasinormSpec, quasinorm
from .space import MetricMeasureSpace

DENSE_MAX = 2048
SUBGRADIENT_ITERS = 500


@dataclass(frozen=True, eq=False)
class GradientCandidate:
    g: np.ndarray
    s: float
    defect: float
    tag: str = "feasible"
    certificate: dict = field(default_factory=dict)

    @property
    def feasible(self) -> bool:
        return self.defect == 0.0


@dataclass(frozen=True, eq=False)
class CapacityBound:
    E: np.ndarray
    value: float
    u: np.ndarray
    g: np.ndarray
    delta: float
    tag: str


def _geom(space: MetricMeasureSpace):
    coords = np.zeros((0, 1)) if space.coords is None else np.ascontiguousarray(space.coords)
    table = np.zeros((0, 1)) if space.table is None else np.ascontiguousarray(space.table)
    return coords, table, float(space.scale), float(space.power)


def _check_s(s):
    if not 0.0 < s <= 1.0:
        raise ValidationError(f"smoothness s must lie in (0, 1], got {s}")


def _vec(space, v, name):
    v = np.asarray(v, dtype=float)
    if v.shape != (space.n,) or not np.all(np.isfinite(v)):
        raise ValidationError(f"{name} must be a finite value per point")
    return v


# ---------------------------------------------------------------- pair kernels

@njit(parallel=True, cache=True)
def _row_max_quotient(u, s, coords, table, scale, power):
    n = u.shape[0]
    out = np.zeros(n)
    for x in prange(n):
        d = np.empty(n)
        dist_row_into(coords, table, scale, power, x, d)
        best = 0.0
        for y in range(n):
            if y != x:
                ds = d[y] if s == 1.0 else d[y] ** s
                q = abs(u[x] - u[y]) / ds
                if q > best:
                    best = q
        out[x] = best
    return out


@njit(parallel=True, cache=True)
def _row_defect(u, g, s, coords, table, scale, power):
    n = u.shape[0]
    out = np.zeros(n)
    for x in prange(n):
        d = np.empty(n)
        dist_row_into(coords, table, scale, power, x, d)
        worst = 0.0
        for y in range(x + 1, n):
            ds = d[y] if s == 1.0 else d[y] ** s
            q = abs(u[x] - u[y]) / ds
            gap = q - (g[x] + g[y])
            if gap > 0.0:
                v = ds * gap
                if v > worst:
                    worst = v
        out[x] = worst
    return out


@njit(cache=True)
def _quotient_matrix(u, s, coords, table, scale, power):
    n = u.shape[0]
    C = np.zeros((n, n))
    d = np.empty(n)
    for x in range(n):
        dist_row_into(coords, table, scale, power, x, d)
        for y in range(n):
            if y != x:
                ds = d[y] if s == 1.0 else d[y] ** s
                C[x, y] = abs(u[x] - u[y]) / ds
    return C


@njit(cache=True)
def _lift(g, C):
    """Raise g until g[x] + g[y] >= C[x, y] for every pair, splitting deficits evenly."""
    n = g.shape[0]
    for x in range(n):
        for y in range(x + 1, n):
            c = C[x, y]
            tot = g[x] + g[y]
            if tot < c:
                dlt = c - tot
                g[x] += 0.5 * dlt
                g[y] += dlt - 0.5 * dlt
                ulp = c * 2.220446049250313e-16
                while g[x] + g[y] < c:
                    g[y] += ulp


@njit(cache=True)
def _subgradient(g0, C, w, p, iters):
    n = g0.shape[0]
    g = g0.copy()
    best = g0.copy()

    def norm(v):
        t = 0.0
        for i in range(n):
            t += w[i] * v[i] ** p
        return t ** (1.0 / p)

    bnorm = norm(best)
    step0 = g0.max()
    if step0 == 0.0:
        return best, bnorm
    grad = np.empty(n)
    for k in range(1, iters + 1):
        gmax = 0.0
        for i in range(n):
            grad[i] = w[i] * g[i] ** (p - 1.0)
            if grad[i] > gmax:
                gmax = grad[i]
        if gmax == 0.0:
            break
        a = step0 / k
        for i in range(n):
            g[i] = max(0.0, g[i] - a * grad[i] / gmax)
        _lift(g, C)
        v = norm(g)
        if v < bnorm:
            bnorm = v
            best[:] = g
    return best, bnorm


# ---------------------------------------------------------------- basic operations

def gradient_defect(space: MetricMeasureSpace, u, g, s: float = 1.0) -> float:
    """max over pairs of (|u(x)-u(y)| - d^s (g(x)+g(y)))^+, evaluated via the difference quotient."""
    _check_s(s)
    u = _vec(space, u, "u")
    g = _vec(space, g, "g")
    if np.any(g < 0):
        raise ValidationError(f"negative gradient value at index {int(np.flatnonzero(g < 0)[0])}")
    if space.n < 2:
        return 0.0
    return float(_row_defect(u, g, float(s), *_geom(space)).max())


def canonical_gradient(space: MetricMeasureSpace, u, s: float = 1.0) -> GradientCandidate:
    """g(x) = max_y |u(x)-u(y)| / (2 d(x,y)^s); every pair sum dominates its quotient."""
    _check_s(s)
    u = _vec(space, u, "u")
    if space.n < 2:
        return GradientCandidate(np.zeros(space.n), s, 0.0, "exact")
    g = 0.5 * _row_max_quotient(u, float(s), *_geom(space))
    return GradientCandidate(g, s, gradient_defect(space, u, g, s), "upper bound")


def holder_seminorm(space: MetricMeasureSpace, u, s: float = 1.0) -> float:
    if space.n < 2:
        return 0.0
    return float(_row_max_quotient(_vec(space, u, "u"), float(s), *_geom(space)).max())


def _spec_norm(spec: QuasinormSpec, space, g) -> float:
    return quasinorm(spec, g, space.mass)


def _solve_l1(space, C):
    n = space.n
    iu, ju = np.nonzero(np.triu(C, 1) > 0)
    if iu.size == 0:
        return np.zeros(n), {"complementary_slackness": 0.0, "duality_gap": 0.0}
    rows = np.repeat(np.arange(iu.size), 2)
    cols = np.column_stack([iu, ju]).ravel()
    A = sparse.csr_matrix((-np.ones(rows.size), (rows, cols)), shape=(iu.size, n))
    b = -C[iu, ju]
    cost = np.asarray(space.mass, dtype=float)
    res = optimize.linprog(cost, A_ub=A, b_ub=b, bounds=(0, None), method="highs")
    if res.status != 0:
        raise AuditError(f"linear program failed: {res.message}")
    g = np.maximum(res.x, 0.0)
    y = -res.ineqlin.marginals           # multipliers of g_x + g_y >= c_xy, nonnegative
    slack = A @ g - b                    # -(g_x + g_y) + c_xy <= 0
    cs = max(float(np.max(np.abs(y * slack))), float(np.max(np.abs(res.lower.marginals * g))))
    dual = float(y @ C[iu, ju])
    gap = abs(float(cost @ g) - dual)
    return g, {"complementary_slackness": cs, "duality_gap": gap, "dual_value": dual}


def minimal_gradient(space: MetricMeasureSpace, u, s: float = 1.0, spec: QuasinormSpec | None = None) -> GradientCandidate:
    """Feasible gradient of small ||g||_X.

    L1: exact linear program with an optimality certificate.  Max norm: the
    constant half Holder seminorm (exact).  Lp, 1 < p < inf: projected
    subgradient from the canonical gradient (upper bound).  Anything else:
    the canonical gradient (upper bound).
    """
    _check_s(s)
    spec = spec or Lp(1.0)
    u = _vec(space, u, "u")
    n = space.n
    if n < 2 or np.all(u == u[0]):
        return GradientCandidate(np.zeros(n), s, 0.0, "exact")
    if spec.variant == "Lp" and math.isinf(spec.p):
        g = np.full(n, 0.5 * holder_seminorm(space, u, s))
        return GradientCandidate(g, s, gradient_defect(space, u, g, s), "exact")
    canon = canonical_gradient(space, u, s)
    if spec.variant != "Lp" or spec.p < 1.0 or n > DENSE_MAX:
        return GradientCandidate(canon.g, s, canon.defect, "upper bound")
    C = _quotient_matrix(u, float(s), *_geom(space))
    if spec.p == 1.0:
        g, cert = _solve_l1(space, C)
        _lift(g, C)
        return GradientCandidate(g, s, gradient_defect(space, u, g, s), "exact", cert)
    w = np.asarray(space.mass, dtype=float)
    g, _ = _subgradient(canon.g, C, w, float(spec.p), SUBGRADIENT_ITERS)
    if _spec_norm(spec, space, g) > _spec_norm(spec, space, canon.g):
        g = canon.g
    return GradientCandidate(g, s, gradient_defect(space, u, g, s), "upper bound")


def hajlasz_norm(space: MetricMeasureSpace, u, s: float = 1.0, spec: QuasinormSpec | None = None):
    """(homogeneous, full, tag) with homogeneous = ||minimal gradient||_X."""
    spec = spec or Lp(1.0)
    cand = minimal_gradient(space, u, s, spec)
    hom = _spec_norm(spec, space, cand.g)
    return hom, quasinorm(spec, u, space.mass) + hom, cand.tag


# ---------------------------------------------------------------- calculus lemmas

def _require_feasible(space, u, g, s, what):
    d = gradient_defect(space, u, g, s)
    if d > 0:
        raise ValidationError(f"{what} is not an s-gradient (defect {d:.3g})")


def max_min_gradient(space: MetricMeasureSpace, u, g_u, v, g_v, s: float = 1.0) -> GradientCandidate:
    """max(g_u, g_v) serves both max(u, v) and min(u, v)."""
    _require_feasible(space, u, g_u, s, "g_u")
    _require_feasible(space, v, g_v, s, "g_v")
    h = np.maximum(g_u, g_v)
    d = max(gradient_defect(space, np.maximum(u, v), h, s), gradient_defect(space, np.minimum(u, v), h, s))
    if d > 0:
        raise AuditError(f"max/min gradient infeasible (defect {d:.3g})")
    return GradientCandidate(h, s, d)


def sup_gradient(space: MetricMeasureSpace, pairs, s: float = 1.0) -> GradientCandidate:
    """Pointwise sup of gradients for the pointwise sup of functions."""
    pairs = list(pairs)
    if not pairs:
        raise ValidationError("empty list")
    for k, (u, g) in enumerate(pairs):
        _require_feasible(space, u, g, s, f"pair {k}")
    u = np.max([np.asarray(p[0], dtype=float) for p in pairs], axis=0)
    h = np.max([np.asarray(p[1], dtype=float) for p in pairs], axis=0)
    d = gradient_defect(space, u, h, s)
    if d > 0:
        raise AuditError(f"sup gradient infeasible (defect {d:.3g})")
    return GradientCandidate(h, s, d)


def product_gradient(space: MetricMeasureSpace, u, g, phi, L: float, s: float = 1.0, support=None) -> GradientCandidate:
    """(|phi|_inf g + (2|phi|_inf)^(1-s) L^s |u|) on the support of phi: a gradient of u*phi."""
    u = _vec(space, u, "u")
    phi = _vec(space, phi, "phi")
    _require_feasible(space, u, g, s, "g")
    S = np.zeros(space.n, dtype=bool)
    if support is None:
        S[phi != 0] = True
    else:
        S[np.asarray(support)] = True
    if np.any(phi[~S] != 0):
        raise ValidationError("phi does not vanish outside its declared support")
    lip = holder_seminorm(space, phi, 1.0)
    if lip > L:
        raise ValidationError(f"phi has Lipschitz quotient {lip:.6g} > L = {L:.6g}")
    sup = float(np.max(np.abs(phi)))
    h = (sup * np.asarray(g, dtype=float) + (2 * sup) ** (1 - s) * L ** s * np.abs(u)) * S
    d = gradient_defect(space, u * phi, h, s)
    if d > 0:
        raise AuditError(f"product gradient infeasible (defect {d:.3g})")
    return GradientCandidate(h, s, d)


def holder_approximate(space: MetricMeasureSpace, u, g, s: float, lam: float):
    """McShane extension from {g <= lam} and the residual gradient (g + 3 lam) off that set.

    Returns (u_lam, residual candidate); u_lam is checked to be 2*lam-Holder.
    """
    u = _vec(space, u, "u")
    g = _vec(space, g, "g")
    _require_feasible(space, u, g, s, "g")
    E = np.flatnonzero(g <= lam)
    if E.size == 0:
        raise ValidationError("lambda below min gradient")
    ulam = np.empty(space.n)
    for lo in range(0, space.n, 256):
        rows = np.arange(lo, min(space.n, lo + 256))
        D = space.dist_block(rows, E) ** s
        ulam[rows] = np.min(u[E][None, :] + 2 * lam * D, axis=1)
    ulam = np.clip(ulam, u.min(), u.max())
    ulam[E] = u[E]
    res = (g + 3 * lam) * (g > lam)
    d = gradient_defect(space, u - ulam, res, s)
    if d > 0:
        raise AuditError(f"Holder residual infeasible (defect {d:.3g})")
    hol = holder_seminorm(space, ulam, s)
    if hol > 2 * lam * (1 + 1e-12):
        raise AuditError(f"extension has Holder constant {hol:.6g} > 2*lambda")
    return ulam, GradientCandidate(res, s, d)


# ---------------------------------------------------------------- capacity

def dist_to_set(space: MetricMeasureSpace, E) -> np.ndarray:
    E = np.asarray(E, dtype=np.int64)
    out = np.full(space.n, np.inf)
    for lo in range(0, E.size, 64):
        D = space.dist_block(E[lo:lo + 64])
        np.minimum(out, D.min(axis=0), out=out)
    return out


def capacity_upper(space: MetricMeasureSpace, E, s: float, spec: QuasinormSpec, radii,
                   gradient: str = "auto") -> CapacityBound:
    """Best bump clamp(1 - dist(., E)^s / delta^s, 0, 1) over delta in ``radii``.

    The value quasinorm(u) + ||g||_X is an upper bound on the capacity of E.
    ``gradient`` picks the gradient: "minimal", "canonical", or "auto"
    (minimal up to 1024 points).
    """
    E = np.unique(np.asarray(E, dtype=np.int64))
    n = space.n
    if E.size == 0:
        return CapacityBound(E, 0.0, np.zeros(n), np.zeros(n), float("nan"), "exact")
    radii = np.asarray(radii, dtype=float)
    if radii.size == 0:
        raise ValidationError("empty radius grid")
    use_min = gradient == "minimal" or (gradient == "auto" and n <= 1024)
    dE = dist_to_set(space, E) ** s
    best = None
    for delta in radii:
        if not delta > 0:
            raise ValidationError("radii must be positive")
        u = np.clip(1.0 - dE / delta ** s, 0.0, 1.0)
        cand = minimal_gradient(space, u, s, spec) if use_min else canonical_gradient(space, u, s)
        val = quasinorm(spec, u, space.mass) + quasinorm(spec, cand.g, space.mass)
        if best is None or val < best.value:
            tag = cand.tag if use_min else "upper bound"
            best = CapacityBound(E, float(val), u, cand.g, float(delta), tag)
    return best


def subadditivity_audit(space: MetricMeasureSpace, sets, s: float, spec: QuasinormSpec, radii, rho=None):
    """(lhs, rhs) of cap(union)^rho <= 8 sum cap(E_i)^rho using the same bump family."""
    rho = spec.rho if rho is None else rho
    union = np.unique(np.concatenate([np.asarray(e) for e in sets]))
    lhs = capacity_upper(space, union, s, spec, radii).value ** rho
    rhs = 8.0 * sum(capacity_upper(space, e, s, spec, radii).value ** rho for e in sets)
    return lhs, rhs


def annulus_constant(space: MetricMeasureSpace, u, s: float, spec: QuasinormSpec, center: int, radius: float,
                     c_d: float, kmax: int = 12):
    """Ratio ||u||_{M^{s,X}} / min_g ||g chi_{4B}||_X for u supported in B = B(center, radius).

    Points outside 4B are unconstrained in the inner minimization, so it
    reduces to a minimal gradient on 4B.  Returns (ratio, smallest k with
    c_d^k >= ratio).
    """
    u = _vec(space, u, "u")
    d = space.dist_row(center)
    if np.any(u[d >= radius] != 0):
        raise ValidationError("u is not supported in the ball")
    inside = np.flatnonzero(d < 4 * radius)
    sub = _subspace(space, inside)
    inner = minimal_gradient(sub, u[inside], s, _restrict(spec, inside))
    den = quasinorm(_restrict(spec, inside), inner.g, sub.mass)
    _, full, _ = hajlasz_norm(space, u, s, spec)
    if den == 0:
        return (0.0 if full == 0 else math.inf), 0
    ratio = full / den
    for k in range(kmax + 1):
        if c_d ** k >= ratio:
            return ratio, k
    return ratio, None


def _subspace(space: MetricMeasureSpace, idx) -> MetricMeasureSpace:
    from .space import build_space
    if space.table is not None:
        return build_space(list(idx), space.table[np.ix_(idx, idx)], space.mass[idx])
    return build_space(space.coords[idx], None, space.mass[idx], scale=space.scale, power=space.power)


def _restrict(spec: QuasinormSpec, idx) -> QuasinormSpec:
    if spec.variant != "VarExp":
        return spec
    from dataclasses import replace
    from .qbfs import ExponentField
    f = spec.exponent
    p = f.p[idx]
    return replace(spec, exponent=ExponentField(p, float(p.min()), float(p.max()), f.C_p, f.audit_mode))

