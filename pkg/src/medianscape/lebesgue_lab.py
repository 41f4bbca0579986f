"""Multiresolution median and average traces, Lebesgue-point classification, sweeps and probes."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np
from numba import njit, prange

from .covers import discrete_median_maximal, make_ladder
from .errors import ValidationError
from .hajlasz import capacity_upper, hajlasz_norm
from .maximal import _is_line, _line_kR, count_thresholds
from .medians import _check_gamma, gamma_median
from .qbfs import QuasinormSpec
from .space import MetricMeasureSpace, generate_space

TOP_SCALE = 0.5
SEPARATION = 4.0          # traces use r >= SEPARATION * grid step
MIN_ORDER = 0.25          # observed decay order accepted as convergence to 0
SWEEP_DECADES = 3.0
MAX_SWEEP = 2 ** 14


# ---------------------------------------------------------------- continuum catalog

def _fat_cantor(t, levels: int = 8):
    """Smith-Volterra-Cantor set: remove a centred interval of length 4^-k from each piece at step k."""
    inside = (t >= 0) & (t <= 1)
    lo = np.zeros_like(t)
    width = np.ones_like(t)
    for k in range(1, levels + 1):
        gap = 4.0 ** -k
        piece = (width - gap) / 2
        rel = t - lo
        in_gap = (rel > piece) & (rel < piece + gap)
        inside &= ~in_gap
        right = rel >= piece + gap
        lo = np.where(right, lo + piece + gap, lo)
        width = piece
    return inside.astype(float)


@dataclass(frozen=True)
class ContinuumFunction:
    """Closed-form function on [0, 1] sampled at node positions."""

    name: str
    params: tuple = ()

    def __call__(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        p = self.params
        if self.name == "indicator":
            a, b = p
            return ((t >= a) & (t <= b)).astype(float)
        if self.name == "power":
            x0, alpha, cap = p
            with np.errstate(divide="ignore"):
                v = np.abs(t - x0) ** -alpha
            return np.minimum(v, cap)
        if self.name == "fat_cantor":
            return _fat_cantor(t, int(p[0]) if p else 8)
        if self.name == "ramp":
            s = p[0] if p else 1.0
            a, b = (p[1], p[2]) if len(p) == 3 else (0.0, 1.0)
            return np.clip((t - a) / (b - a), 0.0, 1.0) ** s
        if self.name == "constant":
            return np.full(t.shape, p[0] if p else 1.0)
        raise ValidationError(f"unknown catalog function {self.name!r}")

    @property
    def continuous(self) -> bool:
        return self.name in ("ramp", "constant")

    def __str__(self):
        return f"{self.name}({','.join(f'{v:g}' for v in self.params)})"


_ARITY = {"indicator": (2,), "power": (3,), "fat_cantor": (0, 1), "ramp": (0, 1, 3), "constant": (0, 1)}


def parse_function(text: str) -> ContinuumFunction:
    """'indicator(0,0.5)', 'power(0.5,0.3,100)', 'fat_cantor(8)', 'ramp(0.5)', 'constant(2)'."""
    m = re.fullmatch(r"\s*(\w+)\s*(?:\((.*)\))?\s*", text)
    if not m or m.group(1) not in _ARITY:
        raise ValidationError(f"unknown catalog function {text!r}")
    args = tuple(float(v) for v in m.group(2).split(",")) if m.group(2) and m.group(2).strip() else ()
    if len(args) not in _ARITY[m.group(1)]:
        raise ValidationError(f"{m.group(1)} takes {_ARITY[m.group(1)]} arguments, got {len(args)}")
    return ContinuumFunction(m.group(1), args)


@dataclass(frozen=True)
class ResolutionFamily:
    u: ContinuumFunction
    resolutions: tuple
    kind: str = "grid1d"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        res = tuple(int(n) for n in self.resolutions)
        if not res or any(b <= a for a, b in zip(res, res[1:])) or res[0] < 2:
            raise ValidationError("resolutions must be strictly increasing and at least 2")
        object.__setattr__(self, "resolutions", res)

    def space(self, n: int) -> MetricMeasureSpace:
        cache = self.__dict__.setdefault("_spaces", {})
        if n not in cache:
            cache[n] = generate_space(self.kind, dict(self.params, n=n))
        return cache[n]

    def sample(self, n: int) -> np.ndarray:
        return self.u(self.space(n).positions[:, 0])


def dyadic_family(u, kmin: int = 8, kmax: int = 14, kind: str = "grid1d") -> ResolutionFamily:
    if isinstance(u, str):
        u = parse_function(u)
    return ResolutionFamily(u, tuple(2 ** k for k in range(kmin, kmax + 1)), kind)


# ---------------------------------------------------------------- trace kernels

@njit(parallel=True, cache=True)
def _line_traces(u, centers, ks, jts):
    """Exact averages and gamma-medians of |u - u(x)| and u over windows [x-k, x+k].

    ``jts[g, m]`` is the descending rank picked by the g-th gamma in a window of m points.
    """
    n = u.shape[0]
    C, S, G = centers.shape[0], ks.shape[0], jts.shape[0]
    avg_osc = np.zeros((C, S))
    avg_val = np.zeros((C, S))
    med_osc = np.zeros((C, S, G))
    med_val = np.zeros((C, S, G))
    K = 0
    for s in range(S):
        K = max(K, ks[s])
    for c in prange(C):
        i = centers[c]
        lo = max(0, i - K)
        hi = min(n - 1, i + K)
        w = hi - lo + 1
        osc = np.empty(w)
        val = np.empty(w)
        for t in range(w):
            val[t] = u[lo + t]
            osc[t] = abs(u[lo + t] - u[i])
        o_osc = np.argsort(osc)
        o_val = np.argsort(val)
        for s in range(S):
            k = ks[s]
            a = max(0, i - k)
            b = min(n - 1, i + k)
            m = b - a + 1
            so = 0.0
            sv = 0.0
            for p in range(a, b + 1):
                so += abs(u[p] - u[i])
                sv += u[p]
            avg_osc[c, s] = so / m
            avg_val[c, s] = sv / m
            for which in range(2):
                order = o_osc if which == 0 else o_val
                arr = osc if which == 0 else val
                cnt = 0
                done = 0
                for t in range(w - 1, -1, -1):
                    pos = lo + order[t]
                    if pos < a or pos > b:
                        continue
                    cnt += 1
                    for g in range(G):
                        if jts[g, m] == cnt:
                            if which == 0:
                                med_osc[c, s, g] = arr[order[t]]
                            else:
                                med_val[c, s, g] = arr[order[t]]
                            done += 1
                    if done == G:
                        break
    return avg_osc, avg_val, med_osc, med_val


def _generic_traces(space, u, centers, scales, gammas):
    C, S, G = len(centers), len(scales), len(gammas)
    avg_osc, avg_val = np.zeros((C, S)), np.zeros((C, S))
    med_osc, med_val = np.zeros((C, S, G)), np.zeros((C, S, G))
    m = space.mass
    for c, x in enumerate(centers):
        d = space.dist_row(int(x))
        for s, r in enumerate(scales):
            b = d < r
            osc = np.abs(u[b] - u[x])
            avg_osc[c, s] = float(m[b] @ osc / m[b].sum())
            avg_val[c, s] = float(m[b] @ u[b] / m[b].sum())
            for g, gam in enumerate(gammas):
                med_osc[c, s, g] = gamma_median(osc, gam, m[b])
                med_val[c, s, g] = gamma_median(u[b], gam, m[b])
    return avg_osc, avg_val, med_osc, med_val


def traces(space: MetricMeasureSpace, u, centers, scales, gammas):
    """(avg_osc, avg_val, med_osc, med_val) at every (center, scale[, gamma])."""
    u = np.asarray(u, dtype=float)
    centers = np.asarray(centers, dtype=np.int64)
    scales = np.asarray(scales, dtype=float)
    gammas = np.asarray(gammas, dtype=float)
    for g in gammas:
        _check_gamma(g)
    if _is_line(space):
        ks = np.array([_line_kR(space, r) for r in scales], dtype=np.int64)
        jts = np.stack([count_thresholds(g, space.n) for g in gammas]) if gammas.size else np.zeros((0, space.n + 1), np.int64)
        return _line_traces(u, centers, ks, jts)
    return _generic_traces(space, u, centers, scales, gammas)


# ---------------------------------------------------------------- point traces

@dataclass(frozen=True, eq=False)
class PointTrace:
    x: float
    gammas: np.ndarray
    resolutions: tuple
    nodes: list
    snap: list
    scales: list
    median_osc: list
    median_val: list
    avg_osc: list
    avg_val: list
    u_at: list

    def rows(self):
        """resolution, scale, gamma, median_osc, median_val, avg_osc, avg_val."""
        out = []
        for k, n in enumerate(self.resolutions):
            for s, r in enumerate(self.scales[k]):
                if self.gammas.size == 0:
                    out.append((n, r, float("nan"), float("nan"), float("nan"),
                                self.avg_osc[k][s], self.avg_val[k][s]))
                for g, gam in enumerate(self.gammas):
                    out.append((n, r, gam, self.median_osc[k][s, g], self.median_val[k][s, g],
                                self.avg_osc[k][s], self.avg_val[k][s]))
        return out


def grid_step(space: MetricMeasureSpace) -> float:
    return space.min_positive_distance()


def trace_scales(space: MetricMeasureSpace, top: float = TOP_SCALE, floor: float | None = None) -> np.ndarray:
    """r_j = top 2^-j down to ``floor`` (default: the separation limit SEPARATION * step)."""
    lim = SEPARATION * grid_step(space) if floor is None else floor
    if top < lim:
        raise ValidationError(f"top scale {top:g} below the separation limit {lim:g}")
    J = int(math.floor(math.log2(top / lim)))
    sc = top * 2.0 ** -np.arange(J + 1)
    return sc[sc >= lim]


def snap(space: MetricMeasureSpace, x: float) -> tuple[int, float]:
    """Nearest node; near-ties (within 1e-12 of the step) go to the lower index."""
    pos = space.positions[:, 0]
    dist = np.abs(pos - x)
    i = int(np.flatnonzero(dist <= dist.min() + 1e-12 * grid_step(space))[0])
    return i, float(dist[i])


def _point_trace(family: ResolutionFamily, x: float, gammas, scales=None) -> PointTrace:
    gammas = np.asarray(list(gammas), dtype=float)
    nodes, snaps, scs, mo, mv, ao, av, ux = [], [], [], [], [], [], [], []
    for n in family.resolutions:
        sp = family.space(n)
        u = family.sample(n)
        i, dx = snap(sp, x)
        h = grid_step(sp)
        if scales is None:
            sc = trace_scales(sp)
        else:
            sc = np.sort(np.asarray(scales, dtype=float))[::-1]
            sc = sc[sc >= SEPARATION * h * (1 - 1e-12)]
            if sc.size == 0:
                raise ValidationError(f"no scale satisfies r >= {SEPARATION:g} h at resolution {n}")
        a_o, a_v, m_o, m_v = traces(sp, u, [i], sc, gammas)
        nodes.append(i)
        snaps.append(dx)
        scs.append(sc)
        ao.append(a_o[0])
        av.append(a_v[0])
        mo.append(m_o[0])
        mv.append(m_v[0])
        ux.append(float(u[i]))
    return PointTrace(float(x), gammas, family.resolutions, nodes, snaps, scs, mo, mv, ao, av, ux)


def median_trace(family: ResolutionFamily, x: float, gamma_list, scales=None) -> PointTrace:
    """m^gamma of |u - u(x)| and of u over B(x, r) for every resolution and admissible scale."""
    if len(list(gamma_list)) == 0:
        raise ValidationError("empty gamma list")
    return _point_trace(family, x, gamma_list, scales)


def average_trace(family: ResolutionFamily, x: float, scales=None) -> PointTrace:
    return _point_trace(family, x, [], scales)


# ---------------------------------------------------------------- classification

def converged(scales, values, tol: float, min_order: float = MIN_ORDER) -> bool:
    """Whether a scale trace tends to 0 as r -> 0.

    Yes if the value at the smallest scale is within ``tol``, or if over the
    smallest decade the trace is non-increasing towards small r and decays like
    r^beta with fitted beta >= ``min_order``.
    """
    r = np.asarray(scales, dtype=float)
    v = np.asarray(values, dtype=float)
    o = np.argsort(r)
    r, v = r[o], v[o]
    if v[0] <= tol:
        return True
    sel = r <= 10 * r[0] * (1 + 1e-12)
    if sel.sum() < 3 or np.any(v[sel] <= 0) or np.any(np.diff(v[sel]) < 0):
        return False
    beta = np.polyfit(np.log(r[sel]), np.log(v[sel]), 1)[0]
    return bool(beta >= min_order)


@dataclass(frozen=True)
class Classification:
    label: str
    average_converged: bool
    median_converged: dict


def _span_ok(scales):
    allsc = np.concatenate([np.asarray(s) for s in scales])
    return allsc.max() / allsc.min() >= 10 ** 3 * (1 - 1e-9)


def classify_point(trace: PointTrace, tol: float = 1e-6, min_order: float = MIN_ORDER,
                   check_span: bool = True) -> Classification:
    """Empirical verdict at the finest resolution: lebesgue, generalized_lebesgue or neither."""
    if check_span and not _span_ok(trace.scales):
        raise ValidationError("trace spans fewer than 3 scale decades")
    sc = trace.scales[-1]
    avg = converged(sc, trace.avg_osc[-1], tol, min_order)
    med = {float(g): converged(sc, trace.median_osc[-1][:, j], tol, min_order)
           for j, g in enumerate(trace.gammas)}
    if avg:
        label = "lebesgue"
    elif med and all(med.values()):
        label = "generalized_lebesgue"
    else:
        label = "neither"
    return Classification(label, avg, med)


@dataclass(frozen=True, eq=False)
class SweepResult:
    n: int
    labels: np.ndarray
    failure_mass: float
    non_lebesgue_mass: float
    capacity: float | None
    failures: np.ndarray


def sweep_scales(space: MetricMeasureSpace, top: float = TOP_SCALE) -> np.ndarray:
    """Ladder top 2^-j down to the smallest scale whose balls are not singletons, at most 3 decades."""
    h = grid_step(space)
    sc = trace_scales(space, top, floor=h * (1 + 1e-9))
    return sc[sc <= sc[-1] * 10 ** SWEEP_DECADES * (1 + 1e-9)]


def sweep(space: MetricMeasureSpace, u, gamma_list, tol: float = 1e-6, min_order: float = MIN_ORDER):
    """Label every node; returns (labels, per-gamma median convergence matrix)."""
    gammas = np.asarray(list(gamma_list), dtype=float)
    sc = sweep_scales(space)
    ao, _, mo, _ = traces(space, u, np.arange(space.n), sc, gammas)
    labels = np.empty(space.n, dtype=object)
    for x in range(space.n):
        avg = converged(sc, ao[x], tol, min_order)
        med = all(converged(sc, mo[x, :, g], tol, min_order) for g in range(gammas.size))
        labels[x] = "lebesgue" if avg else ("generalized_lebesgue" if med else "neither")
    return labels


def exceptional_set_report(family: ResolutionFamily, gamma_list, tol: float = 1e-6, s: float = 1.0,
                           spec: QuasinormSpec | None = None, capacity_max_n: int = 4096) -> list[SweepResult]:
    """Sweep all nodes at every resolution; failure = neither lebesgue nor generalized lebesgue.

    The capacity bound of the failure set is computed up to ``capacity_max_n`` points.
    """
    from .qbfs import Lp
    spec = spec or Lp(1.0)
    out = []
    for n in family.resolutions:
        if n > MAX_SWEEP:
            raise ValidationError(f"resolution {n} exceeds the sweep limit {MAX_SWEEP}")
        sp = family.space(n)
        labels = sweep(sp, family.sample(n), gamma_list, tol)
        fail = np.flatnonzero(labels == "neither")
        nonleb = labels != "lebesgue"
        fm = float(sp.mass[fail].sum()) / sp.total_mass
        nm = float(sp.mass[nonleb].sum()) / sp.total_mass
        cap = None
        if n <= capacity_max_n:
            h = grid_step(sp)
            radii = np.geomspace(2 * h, 0.5, 6)
            cap = capacity_upper(sp, fail, s, spec, radii, gradient="canonical").value
        out.append(SweepResult(n, labels, fm, nm, cap, fail))
    return out


# ---------------------------------------------------------------- probes

def sobolev_poincare_probe(space: MetricMeasureSpace, u, g, s: float, Q: float, max_centers: int = 512) -> float:
    """max over (x, r) of inf_c |u - c|_B / (r^s ((g^q)_{2B})^(1/q)), q = Q / (Q + s)."""
    from .hajlasz import gradient_defect
    u = np.asarray(u, dtype=float)
    g = np.asarray(g, dtype=float)
    if gradient_defect(space, u, g, s) > 0:
        raise ValidationError("g is not an s-gradient of u")
    q = Q / (Q + s)
    m = space.mass
    centers = np.arange(space.n) if space.n <= max_centers else \
        np.unique(np.linspace(0, space.n - 1, max_centers).round().astype(np.int64))
    dmin = space.min_positive_distance()
    diam = space.diameter()
    K = max(1, int(math.ceil(math.log2(diam / dmin))) + 1)
    radii = diam * 2.0 ** -np.arange(K + 1)
    worst = 0.0
    for x in centers:
        d = space.dist_row(int(x))
        for r in radii:
            b = d < r
            mb = m[b]
            c = gamma_median(u[b], 0.5, mb)
            lhs = float(mb @ np.abs(u[b] - c) / mb.sum())
            if lhs == 0.0:
                continue
            b2 = d < 2 * r
            core = float(m[b2] @ g[b2] ** q / m[b2].sum()) ** (1.0 / q)
            ratio = math.inf if core == 0 else lhs / (r ** s * core)
            worst = max(worst, ratio)
    return worst


@dataclass(frozen=True, eq=False)
class WeakTypeProbe:
    ratio: float
    level_set: np.ndarray
    capacity: float
    norm: float


def capacitary_weak_type_probe(space: MetricMeasureSpace, u, s: float, spec: QuasinormSpec, gamma: float,
                               lam: float, ball=None, radii=None) -> WeakTypeProbe:
    """capacity_upper({x in B : M^{gamma,*}_{1/3} u > lam}) * lam / ||u||_{M^{s,X}}."""
    u = np.asarray(u, dtype=float)
    if not lam > 0:
        raise ValidationError("lambda must be positive")
    Mu = discrete_median_maximal(space, u, gamma, make_ladder(space, 1.0 / 3.0))
    inside = np.ones(space.n, dtype=bool)
    if ball is not None:
        c, r = ball
        inside = space.dist_row(int(c)) < r
    E = np.flatnonzero(inside & (Mu > lam))
    _, full, _ = hajlasz_norm(space, u, s, spec)
    if E.size == 0:
        return WeakTypeProbe(0.0, E, 0.0, full)
    if radii is None:
        radii = np.geomspace(2 * space.min_positive_distance(), 0.5, 6)
    cap = capacity_upper(space, E, s, spec, radii).value
    ratio = math.inf if full == 0 else cap * lam / full
    return WeakTypeProbe(ratio, E, cap, full)
