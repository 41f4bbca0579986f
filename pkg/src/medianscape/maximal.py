"""Restricted Hardy-Littlewood and median maximal functions over exact radius ladders."""

from __future__ import annotations

import numba
import numpy as np

from . import _kernels as K
from .errors import ValidationError
from .medians import _check_gamma, product_error
from .space import MetricMeasureSpace

_EMPTY_F2 = np.zeros((0, 1))
_EMPTY_I2 = np.zeros((0, 1), dtype=np.int64)
_EMPTY_I1 = np.zeros(0, dtype=np.int64)
_EMPTY_F1 = np.zeros(0)


def _nchunks(n: int) -> int:
    return max(1, min(n, 4 * numba.get_num_threads()))


def count_thresholds(gamma: float, n: int) -> np.ndarray:
    """jt[m] = smallest integer j >= 1 with j >= gamma*m, exactly, for m = 0..n."""
    m = np.arange(n + 1, dtype=float)
    p, e = product_error(float(gamma), m)
    j = np.ceil(p)
    j += (j == p) & (e > 0)
    return np.maximum(j, 1).astype(np.int64)


def _is_line(space: MetricMeasureSpace) -> bool:
    return space.lattice_shape is not None and len(space.lattice_shape) == 1 and space.uniform_mass


def _line_kR(space: MetricMeasureSpace, R: float) -> int:
    """Number of lattice steps k >= 1 whose distance is below R."""
    n = space.n
    if not np.isfinite(R):
        return n - 1
    k = np.arange(1, n, dtype=float)
    d = space.scale * np.sqrt(k * k)
    if space.power != 1.0:
        d = d ** space.power
    return int(np.searchsorted(d, R, side="left"))


def _walk_args(space: MetricMeasureSpace):
    cached = space.__dict__.get("_walk_args")
    if cached is not None:
        return cached
    if space.lattice_shape is not None:
        shape = np.array(space.lattice_shape, dtype=np.int64)
        dim = shape.size
        strides = np.ones(dim, dtype=np.int64)
        for c in range(dim - 2, -1, -1):
            strides[c] = strides[c + 1] * shape[c + 1]
        axes = [np.arange(-(s - 1), s, dtype=np.int64) for s in shape]
        offs = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, dim)
        sq = (offs * offs).sum(axis=1)
        o = np.argsort(sq, kind="stable")
        offs, sq = np.ascontiguousarray(offs[o]), sq[o]
        ends = np.append(np.flatnonzero(sq[1:] != sq[:-1]) + 1, sq.size).astype(np.int64)
        gd = space.scale * np.sqrt(sq[ends - 1].astype(float))
        if space.power != 1.0:
            gd = gd ** space.power
        args = (True, _EMPTY_F2, _EMPTY_F2, 1.0, 1.0,
                np.ascontiguousarray(space.coords.astype(np.int64)), shape, strides, offs, ends, gd)
    else:
        coords = _EMPTY_F2 if space.coords is None else np.ascontiguousarray(space.coords)
        table = _EMPTY_F2 if space.table is None else np.ascontiguousarray(space.table)
        args = (False, coords, table, float(space.scale), float(space.power),
                _EMPTY_I2, _EMPTY_I1, _EMPTY_I1, _EMPTY_I2, _EMPTY_I1, _EMPTY_F1)
    object.__setattr__(space, "_walk_args", args)
    return args


def _weights(space: MetricMeasureSpace) -> np.ndarray:
    # equal masses are handled as counts so thresholds and averages stay exact
    return np.ones(space.n) if space.uniform_mass else np.asarray(space.mass, dtype=float)


def _prep(space, u, R):
    a = np.abs(np.asarray(u, dtype=float))
    if a.shape != (space.n,):
        raise ValidationError("function does not match the space")
    if not np.all(np.isfinite(a)):
        raise ValidationError("non-finite function value")
    if not R > 0:
        raise ValidationError("R must be positive")
    return a


def hl_maximal(space: MetricMeasureSpace, u, R: float = np.inf) -> np.ndarray:
    """sup over r < R of the mass-weighted average of |u| over B(x, r)."""
    a = _prep(space, u, R)
    if _is_line(space):
        return K.hl_line(a, _line_kR(space, R), _nchunks(space.n))
    return K.hl_walk(a, _weights(space), float(R), *_walk_args(space), _nchunks(space.n))


def median_maximal(space: MetricMeasureSpace, u, gamma: float, R: float = np.inf) -> np.ndarray:
    """sup over r < R of the gamma-median of |u| over B(x, r)."""
    _check_gamma(gamma)
    a = _prep(space, u, R)
    if _is_line(space):
        jt = count_thresholds(gamma, space.n)
        return K.median_line(a, jt, _line_kR(space, R), _nchunks(space.n))
    return K.median_walk(a, _weights(space), float(gamma), float(R), *_walk_args(space),
                         _nchunks(space.n))
