"""Finite metric measure spaces, exact ball enumeration and structural constants."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

from .errors import ValidationError

EXHAUSTIVE_AUDIT_MAX = 512
SAMPLED_TRIPLES_CAP = 4_000_000
STRUCTURE_SAMPLE = 512
_LAST_RADIUS_FACTOR = 1.0 + 2.0 ** -20


@dataclass(frozen=True)
class MetricAudit:
    mode: str               # "exhaustive", "sampled" or "analytic"
    triples_checked: int
    fraction: float         # checked / total ordered triples
    worst_slack: float      # min over checked of d(x,y)+d(y,z)-d(x,z), scaled


@dataclass(frozen=True, eq=False)
class MetricMeasureSpace:
    """Immutable finite metric measure space.

    Distances come either from ``coords`` (Euclidean norm times ``scale``, raised
    to ``power``) or from an explicit symmetric ``table``.  Grid spaces keep
    integer lattice coordinates so that equal distances are bit-identical.
    """

    mass: np.ndarray
    coords: np.ndarray | None = None
    table: np.ndarray | None = None
    scale: float = 1.0
    power: float = 1.0
    ids: tuple = ()
    lattice_shape: tuple[int, ...] | None = None
    audit: MetricAudit | None = None
    kind: str = "custom"

    @property
    def n(self) -> int:
        return int(self.mass.shape[0])

    @property
    def total_mass(self) -> float:
        return float(np.sum(self.mass))

    @property
    def uniform_mass(self) -> bool:
        return bool(np.all(self.mass == self.mass[0]))

    @property
    def positions(self) -> np.ndarray | None:
        """Physical coordinates (lattice coordinates times the scale)."""
        if self.coords is None:
            return None
        return self.coords * self.scale

    def dist_row(self, i: int) -> np.ndarray:
        if self.table is not None:
            return np.array(self.table[i], dtype=float)
        diff = self.coords - self.coords[i]
        d = self.scale * np.sqrt((diff * diff).sum(axis=1))
        if self.power != 1.0:
            d = d ** self.power
        return d

    def dist(self, i: int, j: int) -> float:
        if self.table is not None:
            return float(self.table[i, j])
        diff = self.coords[j] - self.coords[i]
        d = self.scale * np.sqrt(float((diff * diff).sum()))
        return float(d ** self.power) if self.power != 1.0 else float(d)

    def dist_block(self, rows, cols=None) -> np.ndarray:
        """Distance matrix between index arrays ``rows`` and ``cols``."""
        rows = np.asarray(rows)
        cols = np.arange(self.n) if cols is None else np.asarray(cols)
        if self.table is not None:
            return np.asarray(self.table[np.ix_(rows, cols)], dtype=float)
        diff = self.coords[rows][:, None, :] - self.coords[cols][None, :, :]
        d = self.scale * np.sqrt((diff * diff).sum(axis=2))
        if self.power != 1.0:
            d = d ** self.power
        return d

    def dist_matrix(self) -> np.ndarray:
        return self.dist_block(np.arange(self.n))

    def ball(self, x: int, r: float) -> np.ndarray:
        """Indices of the open ball B(x, r)."""
        return np.flatnonzero(self.dist_row(x) < r)

    def ball_mass(self, x: int, r: float) -> float:
        return float(self.mass[self.dist_row(x) < r].sum())

    def min_positive_distance(self) -> float:
        if self.n < 2:
            return float("inf")
        if self.lattice_shape is not None:
            d = self.scale
            return float(d ** self.power) if self.power != 1.0 else float(d)
        best = np.inf
        for i in range(self.n):
            row = self.dist_row(i)
            row[i] = np.inf
            best = min(best, float(row.min()))
        return best

    def diameter(self) -> float:
        if self.n < 2:
            return 0.0
        if self.lattice_shape is not None:
            ext = np.array(self.lattice_shape, dtype=float) - 1.0
            d = self.scale * np.sqrt(float((ext * ext).sum()))
            return float(d ** self.power) if self.power != 1.0 else float(d)
        if self.table is not None:
            return float(np.max(self.table))
        return max(float(self.dist_row(i).max()) for i in range(self.n))

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        for arr in (self.mass, self.coords, self.table):
            if arr is not None:
                h.update(np.ascontiguousarray(arr, dtype=float).tobytes())
            h.update(b"|")
        h.update(repr((self.scale, self.power, tuple(map(str, self.ids)))).encode())
        return h.hexdigest()[:16]

    def same_as(self, other: "MetricMeasureSpace") -> bool:
        return self.fingerprint() == other.fingerprint()


@dataclass(frozen=True)
class Ball:
    center: int
    radius: float
    members: np.ndarray


@dataclass(frozen=True)
class StructureReport:
    c_d: float
    Q: float
    c_Q: float
    audit: list = field(default_factory=list)
    audited_centers: int = 0


# ---------------------------------------------------------------- construction

def _check_mass(mass) -> np.ndarray:
    mass = np.asarray(mass, dtype=float).ravel()
    if mass.size == 0:
        raise ValidationError("empty space")
    bad = np.flatnonzero(~np.isfinite(mass) | (mass <= 0))
    if bad.size:
        raise ValidationError(f"non-positive mass at index {bad[0]}")
    return mass


def _triangle_audit_table(D: np.ndarray, seed: int = 0) -> MetricAudit:
    n = D.shape[0]
    total = float(n) ** 3
    if n <= EXHAUSTIVE_AUDIT_MAX:
        worst = np.inf
        for y in range(n):
            via = D[:, y][:, None] + D[y, :][None, :]
            slack = via - D
            tol = 1e-12 * np.maximum(D, 1e-300)
            bad = np.argwhere(slack < -tol)
            if bad.size:
                x, z = sorted(bad[0])
                raise ValidationError(
                    f"triangle inequality violated for triple ({x},{y},{z}): "
                    f"d({x},{z})={D[x, z]!r} > d({x},{y})+d({y},{z})={D[x, y] + D[y, z]!r}")
            worst = min(worst, float(slack.min()))
        return MetricAudit("exhaustive", n ** 3, 1.0, worst)
    m = int(min(16 * n * n, SAMPLED_TRIPLES_CAP))
    rng = np.random.default_rng(seed)
    x, y, z = (rng.integers(0, n, m) for _ in range(3))
    slack = D[x, y] + D[y, z] - D[x, z]
    bad = np.flatnonzero(slack < -1e-12 * np.maximum(D[x, z], 1e-300))
    if bad.size:
        k = bad[0]
        raise ValidationError(f"triangle inequality violated for triple ({x[k]},{y[k]},{z[k]})")
    return MetricAudit("sampled", m, m / total, float(slack.min()))


def _sampled_coord_audit(space: MetricMeasureSpace, seed: int = 0) -> MetricAudit:
    # Euclidean distance raised to a power in (0, 1] is a metric; the sample
    # only guards against non-finite coordinates and rounding surprises.
    n = space.n
    m = min(4096, n ** 3)
    rng = np.random.default_rng(seed)
    x, y, z = (rng.integers(0, n, m) for _ in range(3))
    worst = np.inf
    for a, b, c in zip(x, y, z):
        dxz, dxy, dyz = space.dist(a, c), space.dist(a, b), space.dist(b, c)
        s = dxy + dyz - dxz
        if s < -1e-12 * max(dxz, 1e-300):
            raise ValidationError(f"triangle inequality violated for triple ({a},{b},{c})")
        worst = min(worst, s)
    return MetricAudit("analytic", int(m), m / float(n) ** 3, float(worst))


def _detect_lattice(coords: np.ndarray) -> tuple[int, ...] | None:
    if not np.all(coords == np.round(coords)) or np.any(coords.min(axis=0) != 0):
        return None
    shape = tuple(int(v) + 1 for v in coords.max(axis=0))
    if int(np.prod(shape)) != coords.shape[0]:
        return None
    grid = np.stack(np.meshgrid(*[np.arange(s) for s in shape], indexing="ij"), axis=-1)
    if np.array_equal(grid.reshape(-1, len(shape)), coords):
        return shape
    return None


def build_space(points, dist=None, mass=None, *, scale: float = 1.0, power: float = 1.0,
                ids: Sequence | None = None, kind: str = "custom", seed: int = 0) -> MetricMeasureSpace:
    """Validate and build a space.

    With ``dist=None`` the ``points`` are coordinates (one row per point, or a
    flat list for points on a line) and distances are ``(scale*|x-y|)**power``.
    Otherwise ``dist`` is an explicit ``n x n`` table and ``points`` are ids.
    """
    if dist is None:
        coords = np.asarray(points, dtype=float)
        if coords.ndim == 1:
            coords = coords[:, None]
        n = coords.shape[0]
    else:
        coords = None
        n = len(points)
    if mass is None:
        mass = np.ones(n)
    mass = _check_mass(mass)
    if mass.shape[0] != n:
        raise ValidationError(f"{n} points but {mass.shape[0]} masses")
    if not (0.0 < power <= 1.0) or not (np.isfinite(scale) and scale > 0):
        raise ValidationError("need scale > 0 and 0 < power <= 1")
    if ids is None:
        ids = tuple(range(n)) if dist is None else tuple(points)
    ids = tuple(ids)
    if len(ids) != n:
        raise ValidationError("ids and masses differ in length")
    if coords is not None:
        if not np.all(np.isfinite(coords)):
            raise ValidationError("non-finite coordinate")
        shape = _detect_lattice(coords)
        space = MetricMeasureSpace(mass=mass, coords=coords, scale=float(scale), power=float(power),
                                   ids=ids, lattice_shape=shape, kind=kind)
        if shape is None and n <= EXHAUSTIVE_AUDIT_MAX:
            # exact duplicates would give zero distance between distinct points
            D = space.dist_matrix()
            np.fill_diagonal(D, np.inf)
            if np.any(D <= 0):
                i, j = np.argwhere(D <= 0)[0]
                raise ValidationError(f"points {i} and {j} coincide")
        elif shape is None and len(np.unique(coords, axis=0)) != n:
            raise ValidationError("coincident points")
        audit = _sampled_coord_audit(space, seed)
        return _with_audit(space, audit)
    D = np.asarray(dist, dtype=float)
    if D.shape != (n, n):
        raise ValidationError(f"distance table has shape {D.shape}, expected {(n, n)}")
    if not np.all(np.isfinite(D)):
        raise ValidationError("non-finite distance")
    if np.any(np.diag(D) != 0):
        raise ValidationError(f"nonzero self-distance at index {int(np.flatnonzero(np.diag(D))[0])}")
    asym = np.argwhere(D != D.T)
    if asym.size:
        i, j = asym[0]
        raise ValidationError(f"non-symmetric table at ({i},{j})")
    off = D + np.eye(n)
    if np.any(off <= 0):
        i, j = np.argwhere(off <= 0)[0]
        raise ValidationError(f"non-positive distance between {i} and {j}")
    if power != 1.0:
        D = D ** power
    audit = _triangle_audit_table(D, seed)
    space = MetricMeasureSpace(mass=mass, table=D, ids=ids, kind=kind)
    return _with_audit(space, audit)


def _with_audit(space: MetricMeasureSpace, audit: MetricAudit) -> MetricMeasureSpace:
    object.__setattr__(space, "audit", audit)
    space.mass.setflags(write=False)
    for arr in (space.coords, space.table):
        if arr is not None:
            arr.setflags(write=False)
    return space


def snowflake(space: MetricMeasureSpace, a: float) -> MetricMeasureSpace:
    """The same points with distance d**a."""
    if not 0.0 < a <= 1.0:
        raise ValidationError("snowflake exponent must lie in (0, 1]")
    if space.table is not None:
        return build_space(list(space.ids), space.table ** a, space.mass, kind=f"snowflake({a})")
    return build_space(space.coords, None, space.mass, scale=space.scale, power=space.power * a,
                       ids=space.ids, kind=f"snowflake({a})")


# ---------------------------------------------------------------- generators

def _weight_fn(weight) -> Callable[[float], float]:
    if callable(weight):
        return weight
    if weight is None:
        return lambda x: x
    text = str(weight).strip().replace(" ", "")
    if text.startswith("power(") and text.endswith(")"):
        k = float(text[6:-1])
        return lambda x: x ** k
    raise ValidationError(f"unknown weight {weight!r}; use power(k) or a callable")


def generate_space(kind: str, params: dict | None = None, **kw) -> MetricMeasureSpace:
    """Deterministic generator: grid1d, grid2d, weighted_grid, snowflake, pointcloud_file."""
    p = dict(params or {})
    p.update(kw)
    if kind == "grid1d":
        n = int(p.get("n", 256))
        if n < 1:
            raise ValidationError("grid1d needs n >= 1")
        coords = np.arange(n, dtype=float)[:, None]
        h = 1.0 / (n - 1) if n > 1 else 1.0
        return build_space(coords, None, np.full(n, 1.0 / n), scale=h, kind="grid1d")
    if kind == "grid2d":
        shape = p.get("shape")
        if shape is None:
            m = int(p.get("n", 32))
            shape = (m, m)
        n1, n2 = (int(v) for v in shape)
        if n1 < 1 or n2 < 1:
            raise ValidationError("grid2d needs positive side lengths")
        g = np.stack(np.meshgrid(np.arange(n1), np.arange(n2), indexing="ij"), -1).reshape(-1, 2)
        h = 1.0 / (max(n1, n2) - 1) if max(n1, n2) > 1 else 1.0
        return build_space(g.astype(float), None, np.full(n1 * n2, 1.0 / (n1 * n2)), scale=h, kind="grid2d")
    if kind == "weighted_grid":
        n = int(p.get("n", 256))
        w = _weight_fn(p.get("weight"))
        h = 1.0 / (n - 1) if n > 1 else 1.0
        edges = np.clip((np.arange(n + 1) - 0.5) * h, 0.0, 1.0)
        cells = np.array([integrate.quad(w, edges[i], edges[i + 1])[0] for i in range(n)])
        if np.any(~(cells > 0)):
            raise ValidationError("weight integrates to a non-positive cell mass")
        return build_space(np.arange(n, dtype=float)[:, None], None, cells / cells.sum(), scale=h,
                           kind="weighted_grid")
    if kind == "snowflake":
        a = float(p.pop("a"))
        base = p.pop("base", "grid1d")
        base_space = base if isinstance(base, MetricMeasureSpace) else generate_space(base, p)
        return snowflake(base_space, a)
    if kind == "pointcloud_file":
        from .io import read_space_csv
        return read_space_csv(p["path"], p.get("mass_path"))
    raise ValidationError(f"unknown space kind {kind!r}")


# ---------------------------------------------------------------- balls

def _prefix_groups(d_sorted: np.ndarray) -> np.ndarray:
    """End positions (exclusive) of the tie groups of a sorted distance list."""
    n = d_sorted.shape[0]
    brk = np.flatnonzero(d_sorted[1:] != d_sorted[:-1]) + 1
    return np.append(brk, n)


def radius_ladder(space: MetricMeasureSpace, x: int, R: float = np.inf) -> list[tuple[float, Ball]]:
    """All distinct open balls at ``x`` with radius below ``R``, smallest first."""
    if not R > 0:
        raise ValidationError("R must be positive")
    d = space.dist_row(x)
    order = np.argsort(d, kind="stable")
    ds = d[order]
    ends = _prefix_groups(ds)
    out = []
    for k, e in enumerate(ends):
        dj = ds[e - 1]
        if not dj < R:
            break
        if k + 1 < len(ends):
            rad = 0.5 * (dj + ds[e])
        else:
            rad = dj * _LAST_RADIUS_FACTOR if dj > 0 else 1.0
        if not rad < R:
            rad = 0.5 * (dj + R) if np.isfinite(R) else rad
        members = np.sort(order[:e])
        out.append((float(rad), Ball(int(x), float(rad), members)))
    return out


# ---------------------------------------------------------------- structure

def _structure_centers(n: int) -> np.ndarray:
    if n <= STRUCTURE_SAMPLE:
        return np.arange(n)
    return np.unique(np.round(np.linspace(0, n - 1, STRUCTURE_SAMPLE)).astype(np.int64))


def estimate_structure(space: MetricMeasureSpace, n_radii: int = 32) -> StructureReport:
    """Doubling constant (exact over audited centers) and a fitted lower-mass bound (c_Q, Q).

    Audited centers are all points for n <= 512, otherwise 512 evenly spaced indices.
    """
    n = space.n
    if n == 1:
        return StructureReport(1.0, 0.0, 1.0, [], 1)
    centers = _structure_centers(n)
    rows = []
    c_d, cd_wit = 1.0, None
    for x in centers:
        d = space.dist_row(int(x))
        order = np.argsort(d, kind="stable")
        ds = d[order]
        cm = np.cumsum(space.mass[order])
        ends = _prefix_groups(ds)
        inner = cm[ends - 1]
        nxt = np.append(ds[ends[:-1]], np.inf)
        outer_cnt = np.searchsorted(ds, 2.0 * nxt, side="left")
        outer = cm[np.maximum(outer_cnt, 1) - 1]
        ratio = outer / inner
        k = int(np.argmax(ratio))
        if ratio[k] > c_d:
            c_d = float(ratio[k])
            cd_wit = ("doubling", int(x), float(nxt[k]), c_d)
        rows.append((ds, cm))

    dmin = space.min_positive_distance()
    diam = space.diameter()
    lo, hi = 2.0 * dmin, 0.5 * diam
    if not hi > lo:
        lo, hi = dmin, diam
    radii = np.geomspace(lo, hi, n_radii) if hi > lo else np.array([lo])
    ball = np.empty((len(rows), len(radii)))
    for k, (ds, cm) in enumerate(rows):
        cnt = np.searchsorted(ds, radii, side="left")
        ball[k] = cm[cnt - 1]
    mins = ball.min(axis=0)
    maxs = ball.max(axis=0)
    ii, jj = np.triu_indices(len(radii))
    t = radii[ii] / radii[jj]
    rho = mins[ii] / maxs[jj]
    strict = t < 1
    if np.count_nonzero(strict) >= 2:
        Q = float(np.polyfit(np.log(t[strict]), np.log(rho[strict]), 1)[0])
        Q = max(Q, 0.0)
    else:
        Q = 0.0
    adj = rho / t ** Q
    k = int(np.argmin(adj))
    c_Q = float(adj[k])
    audit = [w for w in (cd_wit, ("lower_mass", float(radii[ii[k]]), float(radii[jj[k]]), float(rho[k])))
             if w is not None]
    return StructureReport(c_d=c_d, Q=Q, c_Q=c_Q, audit=audit, audited_centers=len(centers))
