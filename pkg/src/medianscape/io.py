"""CSV readers and writers for spaces, functions and spec files."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .space import MetricMeasureSpace, build_space


def fmt(x) -> str:
    """17 significant digits, enough to round-trip a double."""
    x = float(x)
    if np.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def _rows(path):
    """Yield (line_number, fields) skipping blanks; '#' lines are returned as metadata."""
    with open(path, newline="") as fh:
        for lineno, line in enumerate(fh, 1):
            s = line.strip()
            if not s:
                continue
            yield lineno, s


def _float(tok: str, lineno: int, path) -> float:
    try:
        v = float(tok)
    except ValueError:
        raise ValidationError(f"{path}:{lineno}: cannot parse number {tok!r}") from None
    if not np.isfinite(v):
        raise ValidationError(f"{path}:{lineno}: non-finite value {tok!r}")
    return v


def read_space_csv(path, mass_path=None) -> MetricMeasureSpace:
    """Coordinate form ``id,x1[,x2...],mass`` or table form ``id_a,id_b,dist`` (+ ``id,mass`` file)."""
    meta = {}
    header = None
    body = []
    for lineno, s in _rows(path):
        if s.startswith("#"):
            for part in s[1:].replace(",", " ").split():
                if "=" in part:
                    k, v = part.split("=", 1)
                    meta[k.strip()] = v.strip()
            continue
        fields = [f.strip() for f in next(csv.reader([s]))]
        if header is None:
            header = fields
            continue
        if len(fields) != len(header):
            raise ValidationError(f"{path}:{lineno}: expected {len(header)} fields, got {len(fields)}")
        body.append((lineno, fields))
    if header is None:
        raise ValidationError(f"{path}: empty file")
    if header[:3] == ["id_a", "id_b", "dist"]:
        if mass_path is None:
            raise ValidationError(f"{path}: table form needs a separate id,mass file")
        ids, mass = _read_id_values(mass_path, "mass")
        index = {k: i for i, k in enumerate(ids)}
        n = len(ids)
        D = np.full((n, n), np.nan)
        np.fill_diagonal(D, 0.0)
        for lineno, (a, b, v) in body:
            if a not in index or b not in index:
                raise ValidationError(f"{path}:{lineno}: unknown id")
            dv = _float(v, lineno, path)
            i, j = index[a], index[b]
            D[i, j] = D[j, i] = dv if i != j else D[i, j]
        if np.isnan(D).any():
            i, j = np.argwhere(np.isnan(D))[0]
            raise ValidationError(f"{path}: missing distance between {ids[i]} and {ids[j]}")
        return build_space(ids, D, mass)
    if header[0] != "id" or header[-1] != "mass" or len(header) < 3:
        raise ValidationError(f"{path}:1: header must be id,x1[,x2...],mass or id_a,id_b,dist")
    ids = tuple(f[0] for _, f in body)
    coords = np.array([[_float(t, ln, path) for t in f[1:-1]] for ln, f in body])
    mass = np.array([_float(f[-1], ln, path) for ln, f in body])
    scale = float(meta.get("scale", 1.0))
    power = float(meta.get("power", 1.0))
    return build_space(coords, None, mass, scale=scale, power=power, ids=ids, kind=meta.get("kind", "file"))


def write_space_csv(space: MetricMeasureSpace, path, mass_path=None) -> None:
    path = Path(path)
    if space.table is not None:
        mass_path = Path(mass_path) if mass_path else path.with_name(path.stem + "_mass.csv")
        with open(path, "w") as fh:
            fh.write("id_a,id_b,dist\n")
            for i in range(space.n):
                for j in range(i + 1, space.n):
                    fh.write(f"{space.ids[i]},{space.ids[j]},{fmt(space.table[i, j])}\n")
        write_function_csv(space, space.mass, mass_path, column="mass")
        return
    dim = space.coords.shape[1]
    with open(path, "w") as fh:
        fh.write(f"# kind={space.kind} scale={fmt(space.scale)} power={fmt(space.power)}\n")
        fh.write("id," + ",".join(f"x{k + 1}" for k in range(dim)) + ",mass\n")
        for i in range(space.n):
            xs = ",".join(fmt(v) for v in space.coords[i])
            fh.write(f"{space.ids[i]},{xs},{fmt(space.mass[i])}\n")


def _read_id_values(path, column: str):
    ids, vals = [], []
    header = None
    for lineno, s in _rows(path):
        if s.startswith("#"):
            continue
        fields = [f.strip() for f in s.split(",")]
        if header is None:
            header = fields
            if len(header) != 2 or header[0] != "id":
                raise ValidationError(f"{path}:{lineno}: header must be id,{column}")
            continue
        if len(fields) != 2:
            raise ValidationError(f"{path}:{lineno}: expected 2 fields, got {len(fields)}")
        ids.append(fields[0])
        vals.append(_float(fields[1], lineno, path))
    return tuple(ids), np.array(vals)


def read_function_csv(space: MetricMeasureSpace, path, column: str = "value") -> np.ndarray:
    """Values ordered like the space's points; ids must match exactly."""
    ids, vals = _read_id_values(path, column)
    want = [str(i) for i in space.ids]
    if sorted(ids) != sorted(want) or len(ids) != len(want):
        raise ValidationError(f"{path}: ids do not match the space")
    pos = {k: i for i, k in enumerate(ids)}
    return vals[[pos[k] for k in want]]


def write_function_csv(space: MetricMeasureSpace, values, path, column: str = "value") -> None:
    with open(path, "w") as fh:
        fh.write(f"id,{column}\n")
        for i, v in zip(space.ids, np.asarray(values, dtype=float)):
            fh.write(f"{i},{fmt(v)}\n")


def read_keyvalue(path) -> dict:
    """``key=value`` lines; '#' comments; repeated keys collect into lists."""
    out: dict = {}
    for lineno, s in _rows(path):
        if s.startswith("#"):
            continue
        if "=" not in s:
            raise ValidationError(f"{path}:{lineno}: expected key=value")
        k, v = (t.strip() for t in s.split("=", 1))
        if k in out:
            prev = out[k]
            out[k] = (prev if isinstance(prev, list) else [prev]) + [v]
        else:
            out[k] = v
    return out
