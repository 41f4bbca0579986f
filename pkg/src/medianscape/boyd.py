"""Empirical Phi_X(gamma) and upper Boyd index estimates over finite candidate families."""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .maximal import median_maximal
from .medians import _check_gamma
from .qbfs import QuasinormSpec, boyd_ceiling, quasinorm
from .space import MetricMeasureSpace

FAMILIES = ("ball_indicators", "union_indicators", "rearranged_profiles", "seeded_random")


@dataclass(frozen=True, eq=False)
class BoydEstimate:
    gammas: np.ndarray
    phi_hat: np.ndarray
    alpha_hat: float
    residual: float
    family: str
    ceiling: float | None = None
    spec: str = ""

    def rows(self):
        return list(zip(self.gammas.tolist(), self.phi_hat.tolist()))


def _parse_family(family) -> list[tuple[str, int | None]]:
    if isinstance(family, (list, tuple)):
        out = []
        for f in family:
            out += _parse_family(f)
        if not out:
            raise ValidationError("empty family")
        return out
    m = re.fullmatch(r"\s*(\w+)\s*(?:\(\s*(\d+)\s*\))?\s*", str(family))
    if not m or m.group(1) not in FAMILIES:
        raise ValidationError(f"unknown family {family!r}; choose from {', '.join(FAMILIES)}")
    name, arg = m.group(1), m.group(2)
    if name in ("union_indicators", "seeded_random"):
        k = int(arg) if arg else (2 if name == "union_indicators" else 32)
        if k < 1:
            raise ValidationError("empty family")
        return [(name, k)]
    return [(name, None)]


def _radii(space: MetricMeasureSpace, count: int) -> np.ndarray:
    lo = 2.0 * space.min_positive_distance()
    hi = space.diameter()
    return np.geomspace(lo, hi, count) if hi > lo else np.array([hi])


def _centers(n: int, count: int) -> np.ndarray:
    return np.unique(np.linspace(0, n - 1, min(n, count)).round().astype(np.int64))


def candidates(space: MetricMeasureSpace, family, seed: int = 0) -> list[np.ndarray]:
    """Deterministic candidate functions for a family name or list of names."""
    n = space.n
    rng = np.random.default_rng(seed)
    out, seen = [], set()

    def add(f):
        f = np.asarray(f, dtype=float)
        if not np.any(f):
            return
        key = f.tobytes()
        if key not in seen:
            seen.add(key)
            out.append(f)

    for name, k in _parse_family(family):
        if name == "ball_indicators":
            radii = _radii(space, 12)
            for c in _centers(n, 16):
                d = space.dist_row(int(c))
                for r in radii:
                    add(d < r)
        elif name == "union_indicators":
            radii = _radii(space, 12)
            for _ in range(48):
                f = np.zeros(n, dtype=bool)
                for c, r in zip(rng.integers(0, n, k), rng.choice(radii, k)):
                    f |= space.dist_row(int(c)) < r
                add(f)
        elif name == "rearranged_profiles":
            h = space.min_positive_distance()
            for c in _centers(n, 4):
                d = space.dist_row(int(c))
                for a in (0.25, 0.5, 1.0, 2.0, 3.0):
                    add((d + h) ** -a)
        else:
            for _ in range(k):
                add(np.abs(rng.standard_normal(n)) ** 3)
    if not out:
        raise ValidationError("empty family")
    return out


def _family_label(family) -> str:
    return ",".join(f"{n}({k})" if k is not None else n for n, k in _parse_family(family))


def phi_table(specs, space: MetricMeasureSpace, gammas, family, seed: int = 0) -> np.ndarray:
    """ratios[s, j] = max over candidates of ||M^gamma_j f|| / ||f|| under specs[s].

    Each maximal function is computed once and shared by all specs.
    """
    specs = list(specs)
    gammas = np.asarray(gammas, dtype=float)
    for g in gammas:
        _check_gamma(g)
    cands = candidates(space, family, seed)
    out = np.ones((len(specs), gammas.size))
    base = np.array([[quasinorm(sp, f, space.mass) for f in cands] for sp in specs])
    for j, g in enumerate(gammas):
        for i, f in enumerate(cands):
            Mf = median_maximal(space, f, float(g))
            for s, sp in enumerate(specs):
                r = quasinorm(sp, Mf, space.mass) / base[s, i]
                if r > out[s, j]:
                    out[s, j] = r
    return out


def phi_x(spec: QuasinormSpec, space: MetricMeasureSpace, gamma: float, family, seed: int = 0) -> float:
    """Lower bound for Phi_X(gamma): largest ratio over the candidate family."""
    return float(phi_table([spec], space, [gamma], family, seed)[0, 0])


def _check_grid(space, gammas):
    g = np.asarray(gammas, dtype=float)
    if g.size < 4:
        raise ValidationError("gamma grid needs at least 4 points")
    if np.any(np.diff(g) >= 0):
        raise ValidationError("gamma grid must be strictly decreasing")
    if g[0] / g[-1] < 100.0 * (1 - 1e-12):
        raise ValidationError("gamma grid must span at least two decades")
    floor = float(space.mass.min() / space.total_mass)
    if g[-1] <= floor:
        raise ValidationError(f"gamma {g[-1]:.3g} is below the resolution limit {floor:.3g}")
    return g


def fit_slope(gammas, phi_hat) -> tuple[float, float]:
    """Least-squares slope of log phi against log(1/gamma) over the smallest-gamma half."""
    g = np.asarray(gammas, dtype=float)
    h = g.size // 2
    x = np.log(1.0 / g[h:])
    y = np.log(np.asarray(phi_hat, dtype=float)[h:])
    A = np.column_stack([x, np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    res = float(np.sqrt(np.mean((A @ coef - y) ** 2)))
    return float(coef[0]), res


def boyd_indices(specs, space: MetricMeasureSpace, gamma_grid, family, seed: int = 0) -> list[BoydEstimate]:
    specs = list(specs)
    g = _check_grid(space, gamma_grid)
    table = phi_table(specs, space, g, family, seed)
    label = _family_label(family)
    out = []
    for sp, row in zip(specs, table):
        a, res = fit_slope(g, row)
        out.append(BoydEstimate(g, row, a, res, label, boyd_ceiling(sp), sp.describe()))
    return out


def boyd_index(spec: QuasinormSpec, space: MetricMeasureSpace, gamma_grid, family, seed: int = 0) -> BoydEstimate:
    return boyd_indices([spec], space, gamma_grid, family, seed)[0]


def default_grid(space: MetricMeasureSpace, count: int = 12, top: float = 0.5) -> np.ndarray:
    """Geometric grid from ``top`` down to 8x the resolution limit."""
    floor = float(space.mass.min() / space.total_mass)
    return np.geomspace(top, max(8 * floor, top / 1000), count)
