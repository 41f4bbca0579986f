"""Exact gamma-medians, decreasing rearrangements and the p-th mean identity."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .space import MetricMeasureSpace

_SPLIT = 134217729.0  # 2**27 + 1


@dataclass(frozen=True, eq=False)
class SampledFunction:
    space: MetricMeasureSpace
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.space.n,):
            raise ValidationError(f"function has {v.size} values for a space of {self.space.n} points")
        if not np.all(np.isfinite(v)):
            raise ValidationError(f"non-finite value at index {int(np.flatnonzero(~np.isfinite(v))[0])}")
        object.__setattr__(self, "values", v)


def product_error(a: float, b: float) -> tuple[float, float]:
    """(p, e) with p = fl(a*b) and a*b = p + e exactly (Dekker)."""
    p = a * b
    c = _SPLIT * a
    ah = c - (c - a)
    al = a - ah
    c = _SPLIT * b
    bh = c - (c - b)
    bl = b - bh
    e = ((ah * bh - p) + ah * bl + al * bh) + al * bl
    return p, e


def count_threshold(gamma: float, m: int) -> int:
    """Smallest integer j >= 1 with j >= gamma*m, evaluated exactly."""
    p, e = product_error(float(gamma), float(m))
    j = math.ceil(p)
    if j == p and e > 0:
        j += 1
    return max(int(j), 1)


def _check_gamma(gamma):
    if not 0.0 < gamma < 1.0:
        raise ValidationError(f"gamma must lie in (0,1), got {gamma}")


def gamma_median(u, gamma: float, mass=None) -> float:
    """inf{a : mass{u > a} < gamma * total mass} over the given values.

    Equal masses (or ``mass=None``) are handled in integer counts so the
    threshold comparison is exact.
    """
    _check_gamma(gamma)
    u = np.asarray(u, dtype=float).ravel()
    if u.size == 0:
        raise ValidationError("gamma-median of an empty set")
    order = np.argsort(-u, kind="stable")
    a = u[order]
    if mass is None or np.all(np.asarray(mass) == np.asarray(mass).ravel()[0]):
        return float(a[count_threshold(gamma, u.size) - 1])
    w = np.asarray(mass, dtype=float).ravel()[order]
    cm = np.cumsum(w)
    thr, err = product_error(float(gamma), float(cm[-1]))
    k = int(np.searchsorted(cm, thr, side="left"))
    if cm[k] == thr and err > 0:
        k += 1
    return float(a[k])


@dataclass(frozen=True)
class StepFunction:
    """Right-continuous nonincreasing step function: value levels[k] on (breaks[k-1], breaks[k]]."""

    breaks: np.ndarray
    levels: np.ndarray

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if np.any((t <= 0) | (t > self.breaks[-1])):
            raise ValidationError("argument outside (0, total mass]")
        k = np.searchsorted(self.breaks, t, side="left")
        return self.levels[k]


def decreasing_rearrangement(u, mass=None) -> StepFunction:
    u = np.abs(np.asarray(u, dtype=float).ravel())
    if u.size == 0:
        raise ValidationError("rearrangement of an empty set")
    w = np.ones_like(u) if mass is None else np.asarray(mass, dtype=float).ravel()
    order = np.argsort(-u, kind="stable")
    a = u[order]
    cm = np.cumsum(w[order])
    ends = np.append(np.flatnonzero(a[1:] != a[:-1]), a.size - 1)
    return StepFunction(cm[ends], a[ends])


def pth_mean_via_medians(u, p: float, mass=None) -> tuple[float, float]:
    """(mean of |u|^p, integral over gamma in (0,1) of the gamma-median of |u| to the p)."""
    if not p > 0:
        raise ValidationError("p must be positive")
    u = np.asarray(u, dtype=float).ravel()
    w = np.ones_like(u) if mass is None else np.asarray(mass, dtype=float).ravel()
    if u.size == 0:
        raise ValidationError("empty ball")
    M = float(w.sum())
    lhs = float(np.sum(w * np.abs(u) ** p) / M)
    step = decreasing_rearrangement(u, w)
    widths = np.diff(np.concatenate(([0.0], step.breaks))) / step.breaks[-1]
    rhs = float(np.sum(step.levels ** p * widths))
    return lhs, rhs
