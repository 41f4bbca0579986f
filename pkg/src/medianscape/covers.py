"""Partition-of-unity covers, discrete convolutions and discrete maximal functions."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from ._kernels import dist_row_into
from .errors import AuditError, ValidationError
from .medians import _check_gamma, gamma_median
from .space import MetricMeasureSpace

SUM_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class CoverAtScale:
    """Centers x_i, balls B_i = B(x_i, r) and weights phi_i supported in 2B_i.

    ``support[i]`` lists the points of 2B_i and ``phi[i]`` the weights there.
    """

    r: float
    centers: np.ndarray
    balls: list
    support: list
    phi: list
    overlap_bound: int
    kappa: float

    def dense_phi(self, n: int) -> np.ndarray:
        out = np.zeros((len(self.centers), n))
        for k, (s, v) in enumerate(zip(self.support, self.phi)):
            out[k, s] = v
        return out


@dataclass(frozen=True)
class ScaleLadder:
    R: float
    scales: np.ndarray

    def __post_init__(self):
        sc = np.asarray(self.scales, dtype=float)
        if sc.size == 0:
            raise ValidationError("empty scale ladder")
        if np.any(np.diff(sc) >= 0) or np.any(sc <= 0) or np.any(sc >= self.R):
            raise ValidationError("scales must decrease strictly inside (0, R)")
        object.__setattr__(self, "scales", sc)


def make_ladder(space: MetricMeasureSpace, R: float) -> ScaleLadder:
    """Geometric scales R*2^-k, k = 1..K, down to half the minimal positive distance.

    For R = inf the top scale is taken as 4*diam (one ball already covers
    everything from 2*diam on).
    """
    if not R > 0:
        raise ValidationError("R must be positive")
    r_min = 0.5 * space.min_positive_distance() if space.n > 1 else 1.0
    top = R if np.isfinite(R) else 4.0 * max(space.diameter(), r_min)
    K = max(1, math.ceil(math.log2(top / r_min)))
    return ScaleLadder(float(R), top * 2.0 ** -np.arange(1, K + 1))


@njit(cache=True)
def _phi_lipschitz(ptr, sidx, sval, n, coords, table, scale, power):
    """max over i, x in supp(phi_i), y != x of |phi_i(x) - phi_i(y)| / d(x, y)."""
    dense = np.zeros(n)
    drow = np.empty(n)
    best = 0.0
    for i in range(ptr.shape[0] - 1):
        for t in range(ptr[i], ptr[i + 1]):
            dense[sidx[t]] = sval[t]
        for t in range(ptr[i], ptr[i + 1]):
            x = sidx[t]
            dist_row_into(coords, table, scale, power, x, drow)
            fx = dense[x]
            for y in range(n):
                if y != x:
                    q = abs(fx - dense[y]) / drow[y]
                    if q > best:
                        best = q
        for t in range(ptr[i], ptr[i + 1]):
            dense[sidx[t]] = 0.0
    return best


def _greedy_net(space: MetricMeasureSpace, r: float):
    n = space.n
    covered = np.zeros(n, dtype=bool)
    centers, rows = [], []
    for x in range(n):
        if covered[x]:
            continue
        d = space.dist_row(x)
        covered |= d < 0.5 * r
        centers.append(x)
        rows.append(d)
    return np.array(centers, dtype=np.int64), rows


def build_cover(space: MetricMeasureSpace, r: float, audit: bool = True) -> CoverAtScale:
    """Greedy r/2-net in ascending index order with tent weights.

    psi_i = clamp(2 - d(., x_i)/r, 0, 1) equals 1 on B_i and vanishes off 2B_i;
    phi_i = psi_i / sum_j psi_j.
    """
    if not r > 0:
        raise ValidationError("scale must be positive")
    cache = space.__dict__.setdefault("_covers", {})
    key = (float(r), audit)
    if key in cache:
        return cache[key]
    n = space.n
    centers, rows = _greedy_net(space, r)
    balls, support, psi = [], [], []
    total = np.zeros(n)
    count = np.zeros(n, dtype=np.int64)
    for d in rows:
        balls.append(np.flatnonzero(d < r))
        s = np.flatnonzero(d < 2.0 * r)
        v = np.clip(2.0 - d[s] / r, 0.0, 1.0)
        support.append(s)
        psi.append(v)
        np.add.at(total, s, v)
        count[s] += 1
    phi = [v / total[s] for s, v in zip(support, psi)]
    N = int(count.max())
    kappa = float("nan")
    if audit:
        kappa = _audit_cover(space, r, centers, balls, support, phi, N)
    cover = CoverAtScale(float(r), centers, balls, support, phi, N, kappa)
    cache[key] = cover
    return cover


def _audit_cover(space, r, centers, balls, support, phi, N) -> float:
    n = space.n
    near = np.zeros(n, dtype=bool)
    for x in centers:
        near |= space.dist_row(int(x)) < 0.5 * r
    if not near.all():
        raise AuditError(f"half-balls miss point {int(np.flatnonzero(~near)[0])} at r={r}")
    s = np.zeros(n)
    for sup, v in zip(support, phi):
        s[sup] += v
    if np.max(np.abs(s - 1.0)) > SUM_TOL:
        raise AuditError(f"partition of unity off by {np.max(np.abs(s - 1.0)):.3g} at r={r}")
    for b, sup, v in zip(balls, support, phi):
        on_ball = v[np.isin(sup, b)]
        if on_ball.size and on_ball.min() < 1.0 / N:
            raise AuditError(f"phi below 1/N on a ball at r={r}")
    ptr = np.concatenate(([0], np.cumsum([len(t) for t in support]))).astype(np.int64)
    sidx = np.concatenate(support).astype(np.int64)
    sval = np.concatenate(phi)
    coords = np.zeros((0, 1)) if space.coords is None else np.ascontiguousarray(space.coords)
    table = np.zeros((0, 1)) if space.table is None else np.ascontiguousarray(space.table)
    lip = _phi_lipschitz(ptr, sidx, sval, n, coords, table, float(space.scale), float(space.power))
    kappa = lip * r
    if kappa > (N + 1) * (1 + 1e-12):
        raise AuditError(f"Lipschitz constant {kappa:.4g}/r exceeds (N+1)/r with N={N}")
    return float(kappa)


def _check_u(space, u):
    u = np.asarray(u, dtype=float)
    if u.shape != (space.n,):
        raise ValidationError("function does not match the space")
    return u


def _combine(space, cover, ball_values):
    out = np.zeros(space.n)
    for val, s, v in zip(ball_values, cover.support, cover.phi):
        out[s] += val * v
    return out


def discrete_convolution(space: MetricMeasureSpace, u, cover: CoverAtScale) -> np.ndarray:
    """sum_i (average of u over B_i) phi_i."""
    u = _check_u(space, u)
    m = space.mass
    avgs = [float(np.sum(m[b] * u[b]) / np.sum(m[b])) for b in cover.balls]
    return _combine(space, cover, avgs)


def discrete_median_convolution(space: MetricMeasureSpace, u, gamma: float, cover: CoverAtScale) -> np.ndarray:
    """sum_i (gamma-median of u over B_i) phi_i."""
    _check_gamma(gamma)
    u = _check_u(space, u)
    meds = [gamma_median(u[b], gamma, space.mass[b]) for b in cover.balls]
    return _combine(space, cover, meds)


def discrete_maximal(space: MetricMeasureSpace, u, ladder: ScaleLadder) -> np.ndarray:
    a = np.abs(_check_u(space, u))
    out = np.full(space.n, -np.inf)
    for r in ladder.scales:
        np.maximum(out, discrete_convolution(space, a, build_cover(space, r, audit=False)), out=out)
    return out


def discrete_median_maximal(space: MetricMeasureSpace, u, gamma: float, ladder: ScaleLadder) -> np.ndarray:
    a = np.abs(_check_u(space, u))
    out = np.full(space.n, -np.inf)
    for r in ladder.scales:
        cov = build_cover(space, r, audit=False)
        np.maximum(out, discrete_median_convolution(space, a, gamma, cov), out=out)
    return out


@dataclass(frozen=True, eq=False)
class GradientWitness:
    """candidate = C * (maximal function of g); k is the exponent in C = c_d**k."""

    candidate: np.ndarray
    constant: float
    k: int
    target: np.ndarray
    defect: float


def _structure_constants(space, c_d, Q):
    if c_d is None or Q is None:
        from .space import estimate_structure
        rep = estimate_structure(space)
        c_d = rep.c_d if c_d is None else c_d
        Q = rep.Q if Q is None else Q
    return float(c_d), float(Q)


def _search_constant(space, target, base, s, c_d, kmax, make):
    from .hajlasz import gradient_defect
    worst = math.inf
    for k in range(kmax + 1):
        C = c_d ** k
        h = make(C, base)
        d = gradient_defect(space, target, h, s)
        if d == 0.0:
            return GradientWitness(h, float(C), k, target, 0.0)
        worst = min(worst, d)
    raise AuditError(f"no constant c_d^k, k <= {kmax}, gives a feasible gradient (smallest defect {worst:.4g})")


def _require_gradient(space, u, g, s):
    from .hajlasz import gradient_defect
    d = gradient_defect(space, u, g, s)
    if d > 0:
        raise ValidationError(f"g is not an s-gradient of u (defect {d:.3g})")


def median_maximal_gradient_witness(space: MetricMeasureSpace, u, g, gamma: float, R: float, s: float = 1.0,
                                    c_d: float | None = None, kmax: int = 8) -> GradientWitness:
    """Smallest C = c_d^k with C * M^{gamma/C}_{3R} g a gradient of the discrete median maximal function."""
    from .maximal import median_maximal
    _check_gamma(gamma)
    if gamma > 0.5:
        raise ValidationError("gamma must be at most 1/2")
    u = _check_u(space, u)
    g = np.asarray(g, dtype=float)
    _require_gradient(space, u, g, s)
    c_d, _ = _structure_constants(space, c_d, 1.0)
    target = discrete_median_maximal(space, u, gamma, make_ladder(space, R))
    return _search_constant(space, target, g, s, c_d, kmax,
                            lambda C, g: C * median_maximal(space, g, gamma / C, 3 * R))


def maximal_gradient_witness(space: MetricMeasureSpace, u, g, R: float, s: float = 1.0,
                             Q: float | None = None, c_d: float | None = None, kmax: int = 8) -> GradientWitness:
    """Smallest C = c_d^k with C (M_{6R} g^q)^{1/q}, q = Q/(Q+s), a gradient of the discrete maximal function."""
    from .maximal import hl_maximal
    u = _check_u(space, u)
    g = np.asarray(g, dtype=float)
    _require_gradient(space, u, g, s)
    c_d, Q = _structure_constants(space, c_d, Q)
    q = Q / (Q + s)
    target = discrete_maximal(space, u, make_ladder(space, R))
    core = hl_maximal(space, g ** q, 6 * R) ** (1.0 / q)
    return _search_constant(space, target, core, s, c_d, kmax, lambda C, core: C * core)
