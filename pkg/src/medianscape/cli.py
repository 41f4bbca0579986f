"""Command-line front end: spaces, medians, maximal functions, norms, gradients, capacities, experiments.

Every subcommand writes a CSV named ``<command>-<hash>.csv`` into ``--out``,
where the hash covers the resolved configuration and the bytes of every input
file, so identical runs give identical paths and contents.  Exit status is 0 on
success, 2 on invalid input and 3 when an internal audit fails.

Lists repeat their flag (``--gamma 0.5 --gamma 0.25``).  ``--config FILE``
reads ``key=value`` lines using the flag names (dashes or underscores);
explicit flags win.  MEDIANSCAPE_WORKERS overrides ``--workers``.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import AuditError, ValidationError
from .io import fmt, read_function_csv, read_keyvalue, read_space_csv, write_space_csv

LISTS = {"gamma", "family", "radius", "resolution", "E", "scale"}
DEFAULTS = {
    "out": "medianscape_out", "seed": 0, "workers": None, "column": "value",
    "R": "inf", "s": 1.0, "tol": 1e-6, "op": None, "n": None,
}


@dataclass
class ExperimentConfig:
    command: str
    params: dict = field(default_factory=dict)
    inputs: list = field(default_factory=list)

    @property
    def out(self) -> Path:
        return Path(self.params.get("out") or DEFAULTS["out"])

    def digest(self) -> str:
        h = hashlib.sha256()
        keep = {k: v for k, v in sorted(self.params.items()) if k not in ("out", "workers", "config")}
        h.update(json.dumps([self.command, keep], sort_keys=True, default=str).encode())
        for p in self.inputs:
            h.update(Path(p).read_bytes())
        return h.hexdigest()[:12]

    def output_path(self, suffix: str = "csv") -> Path:
        self.out.mkdir(parents=True, exist_ok=True)
        return self.out / f"{self.command}-{self.digest()}.{suffix}"


# ---------------------------------------------------------------- parsing helpers

def _real(text) -> float:
    try:
        v = float(text)
    except (TypeError, ValueError):
        raise ValidationError(f"not a number: {text!r}") from None
    if np.isnan(v):
        raise ValidationError("NaN is not allowed")
    return v


def _p(cfg: ExperimentConfig, key, default=None):
    v = cfg.params.get(key)
    return default if v is None else v


def _require(cfg, key):
    v = cfg.params.get(key)
    if v is None or v == []:
        raise ValidationError(f"{cfg.command} needs --{key.replace('_', '-')}")
    return v


def _file(cfg, key):
    v = cfg.params.get(key)
    if v is None:
        return None
    if not Path(v).is_file():
        raise ValidationError(f"--{key.replace('_', '-')}: no such file {v}")
    cfg.inputs.append(v)
    return v


def _gammas(cfg, required=True):
    g = [_real(v) for v in (_p(cfg, "gamma") or [])]
    if required and not g:
        raise ValidationError(f"{cfg.command} needs at least one --gamma")
    for v in g:
        if not 0 < v < 1:
            raise ValidationError(f"gamma must lie in (0, 1), got {v}")
    return g


def _space(cfg):
    from .space import generate_space
    path = _file(cfg, "space")
    mass = _file(cfg, "mass")
    if path is not None:
        return read_space_csv(path, mass)
    kind = _p(cfg, "generate")
    if kind is None:
        raise ValidationError(f"{cfg.command} needs --space FILE or --generate KIND")
    params = {}
    if _p(cfg, "n") is not None:
        params["n"] = int(_real(cfg.params["n"]))
    if _p(cfg, "shape") is not None:
        params["shape"] = tuple(int(t) for t in str(cfg.params["shape"]).split("x"))
    if _p(cfg, "weight") is not None:
        params["weight"] = cfg.params["weight"]
    if kind == "snowflake":
        params["a"] = _real(_require(cfg, "a"))
        params["base"] = _p(cfg, "base", "grid1d")
    return generate_space(kind, params)


def _function(cfg, space, key="u"):
    path = _file(cfg, key)
    if path is not None:
        return read_function_csv(space, path, _p(cfg, "column", "value"))
    expr = _p(cfg, "function")
    if expr is not None and key == "u":
        from .lebesgue_lab import parse_function
        if space.coords is None:
            raise ValidationError("--function needs a coordinate space")
        return parse_function(expr)(space.positions[:, 0])
    raise ValidationError(f"{cfg.command} needs --{key} FILE" + (" or --function EXPR" if key == "u" else ""))


def _spec(cfg, space):
    from .qbfs import load_spec
    path = _file(cfg, "spec")
    if path is None:
        raise ValidationError(f"{cfg.command} needs --spec FILE")
    return load_spec(path, space)


def _write_rows(path: Path, header, rows):
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for r in rows:
            fh.write(",".join(v if isinstance(v, str) else fmt(v) for v in r) + "\n")


def _emit(cfg, header, rows, summary: dict | None = None) -> Path:
    path = cfg.output_path()
    _write_rows(path, header, rows)
    print(f"wrote {path}")
    for k, v in (summary or {}).items():
        print(f"{k}: {float(v)!r}" if isinstance(v, (float, np.floating)) else f"{k}: {v}")
    return path


# ---------------------------------------------------------------- commands

def cmd_space(cfg):
    from .space import estimate_structure
    space = _space(cfg)
    path = cfg.output_path()
    write_space_csv(space, path)
    print(f"wrote {path}")
    print(f"points: {space.n}")
    if space.audit is not None:
        print(f"metric audit: {space.audit.mode}, triples {space.audit.triples_checked}")
    if _p(cfg, "op") == "structure":
        rep = estimate_structure(space)
        spath = cfg.output_path("structure.csv")
        _write_rows(spath, ["key", "value"], [("c_d", rep.c_d), ("Q", rep.Q), ("c_Q", rep.c_Q)])
        print(f"wrote {spath}")
        print(f"c_d: {rep.c_d!r}\nQ: {rep.Q!r}\nc_Q: {rep.c_Q!r}")
    return 0


def cmd_median(cfg):
    from .medians import gamma_median
    space = _space(cfg)
    u = _function(cfg, space)
    gammas = _gammas(cfg)
    members = np.arange(space.n)
    if _p(cfg, "center") is not None:
        ids = [str(i) for i in space.ids]
        c = str(cfg.params["center"])
        if c not in ids:
            raise ValidationError(f"unknown center id {c}")
        members = space.ball(ids.index(c), _real(_require(cfg, "radius")[0]))
    rows = [(g, gamma_median(u[members], g, space.mass[members])) for g in gammas]
    _emit(cfg, ["gamma", "median"], rows)
    return 0


def cmd_maximal(cfg):
    from .covers import discrete_maximal, discrete_median_maximal, make_ladder
    from .maximal import hl_maximal, median_maximal
    space = _space(cfg)
    u = _function(cfg, space)
    R = _real(_p(cfg, "R", "inf"))
    op = _p(cfg, "op", "hl")
    if op == "hl":
        v = hl_maximal(space, u, R)
    elif op == "median":
        v = median_maximal(space, u, _gammas(cfg)[0], R)
    elif op == "discrete":
        ladder = make_ladder(space, R)
        g = _gammas(cfg, required=False)
        v = discrete_median_maximal(space, u, g[0], ladder) if g else discrete_maximal(space, u, ladder)
    else:
        raise ValidationError(f"unknown --op {op!r} for maximal (hl, median, discrete)")
    _emit(cfg, ["id", "value"], [(str(i), x) for i, x in zip(space.ids, v)])
    return 0


def cmd_norm(cfg):
    from .qbfs import quasinorm
    space = _space(cfg)
    u = _function(cfg, space)
    spec = _spec(cfg, space)
    val = quasinorm(spec, u, space.mass)
    _emit(cfg, ["spec", "value"], [(spec.describe(), val)])
    print(repr(float(val)))
    return 0


def cmd_boyd(cfg):
    from .boyd import boyd_index, default_grid
    space = _space(cfg)
    spec = _spec(cfg, space)
    g = _gammas(cfg, required=False)
    grid = np.array(sorted(g, reverse=True)) if g else default_grid(space)
    fam = _p(cfg, "family") or ["ball_indicators"]
    est = boyd_index(spec, space, grid, fam, int(_p(cfg, "seed", 0)))
    _emit(cfg, ["gamma", "phi_hat"], est.rows(),
          {"alpha_hat": est.alpha_hat, "residual": est.residual, "ceiling": est.ceiling, "family": est.family})
    return 0


def cmd_gradient(cfg):
    from . import hajlasz as H
    space = _space(cfg)
    u = _function(cfg, space)
    s = _real(_p(cfg, "s", 1.0))
    op = _p(cfg, "op", "canonical")
    if op == "defect":
        g = _function(cfg, space, "g")
        d = H.gradient_defect(space, u, g, s)
        _emit(cfg, ["defect"], [(d,)], {"defect": d})
        return 0
    if op == "canonical":
        c = H.canonical_gradient(space, u, s)
    elif op == "minimal":
        c = H.minimal_gradient(space, u, s, _spec(cfg, space))
    elif op == "holder":
        g = _function(cfg, space, "g")
        ulam, res = H.holder_approximate(space, u, g, s, _real(_require(cfg, "lam")))
        _emit(cfg, ["id", "u", "u_lambda", "residual"],
              [(str(i), a, b, c) for i, a, b, c in zip(space.ids, u, ulam, res.g)])
        return 0
    else:
        raise ValidationError(f"unknown --op {op!r} for gradient (defect, canonical, minimal, holder)")
    _emit(cfg, ["id", "u", "g"], [(str(i), a, b) for i, a, b in zip(space.ids, u, c.g)],
          {"tag": c.tag, "defect": c.defect})
    return 0


def cmd_capacity(cfg):
    from .hajlasz import capacity_upper
    space = _space(cfg)
    spec = _spec(cfg, space)
    ids = [str(i) for i in space.ids]
    want = [str(e) for e in (_p(cfg, "E") or [])]
    bad = [e for e in want if e not in ids]
    if bad:
        raise ValidationError(f"unknown ids in --E: {', '.join(bad)}")
    E = np.array([ids.index(e) for e in want], dtype=np.int64)
    radii = [_real(r) for r in (_p(cfg, "radius") or [])]
    if not radii:
        radii = list(np.geomspace(2 * space.min_positive_distance(), max(space.diameter(), 1e-300), 8))
    cb = capacity_upper(space, E, _real(_p(cfg, "s", 1.0)), spec, radii)
    _emit(cfg, ["id", "u", "g"], [(i, a, b) for i, a, b in zip(ids, cb.u, cb.g)],
          {"capacity_upper": cb.value, "delta": cb.delta, "tag": cb.tag})
    return 0


def cmd_lebesgue(cfg):
    from . import lebesgue_lab as L
    op = _p(cfg, "op", "trace")
    if op == "probe":
        return _lebesgue_probe(cfg)
    expr = _require(cfg, "function")
    res = [int(_real(r)) for r in (_p(cfg, "resolution") or [])] or [2 ** k for k in range(8, 13)]
    fam = L.ResolutionFamily(L.parse_function(expr), tuple(res))
    gammas = _gammas(cfg, required=False) or [0.25, 0.5, 0.75]
    tol = _real(_p(cfg, "tol", 1e-6))
    if op == "trace":
        x = _real(_require(cfg, "x"))
        tr = L.median_trace(fam, x, gammas)
        cls = L.classify_point(tr, tol, check_span=False)
        _emit(cfg, ["resolution", "scale", "gamma", "median_osc", "median_val", "avg_osc", "avg_val"],
              tr.rows(), {"node": tr.nodes[-1], "snap": tr.snap[-1], "label": cls.label})
    elif op == "sweep":
        rep = L.exceptional_set_report(fam, gammas, tol)
        _emit(cfg, ["resolution", "failure_mass", "non_lebesgue_mass", "failures", "capacity_upper"],
              [(r.n, r.failure_mass, r.non_lebesgue_mass, r.failures.size,
                float("nan") if r.capacity is None else r.capacity) for r in rep])
    else:
        raise ValidationError(f"unknown --op {op!r} for lebesgue (trace, sweep, probe)")
    return 0


def _lebesgue_probe(cfg):
    from . import lebesgue_lab as L
    from .hajlasz import canonical_gradient
    from .space import estimate_structure
    space = _space(cfg)
    u = _function(cfg, space)
    s = _real(_p(cfg, "s", 1.0))
    if _p(cfg, "lam") is not None:
        gamma = _gammas(cfg)[0]
        pr = L.capacitary_weak_type_probe(space, u, s, _spec(cfg, space), gamma, _real(cfg.params["lam"]))
        _emit(cfg, ["ratio", "capacity_upper", "norm", "level_set_size"],
              [(pr.ratio, pr.capacity, pr.norm, pr.level_set.size)], {"ratio": pr.ratio})
        return 0
    g = canonical_gradient(space, u, s).g
    Q = _real(cfg.params["Q"]) if _p(cfg, "Q") is not None else estimate_structure(space).Q
    worst = L.sobolev_poincare_probe(space, u, g, s, Q)
    _emit(cfg, ["Q", "s", "constant"], [(Q, s, worst)], {"constant": worst})
    return 0


COMMANDS = {
    "space": (cmd_space, "generate, validate or report on a space (--op structure adds c_d, Q)"),
    "median": (cmd_median, "gamma-medians of u over the whole space or a ball (--center, --radius)"),
    "maximal": (cmd_maximal, "maximal functions: --op hl | median | discrete"),
    "norm": (cmd_norm, "quasinorm of u under --spec"),
    "boyd": (cmd_boyd, "Phi_X(gamma) estimates and the upper Boyd index"),
    "gradient": (cmd_gradient, "s-gradients: --op defect | canonical | minimal | holder"),
    "capacity": (cmd_capacity, "capacity upper bound of the point set --E"),
    "lebesgue": (cmd_lebesgue, "traces and sweeps on dyadic grids: --op trace | sweep | probe"),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    a = common.add_argument
    a("--config", help="key=value file mirroring the flags")
    a("--out", help="output directory (default medianscape_out)")
    a("--seed", type=int, help="seed for randomized audits and families (default 0)")
    a("--workers", type=int, help="worker threads; MEDIANSCAPE_WORKERS overrides")
    a("--space", help="space CSV (id,x1..,mass or id_a,id_b,dist)")
    a("--mass", help="id,mass CSV for table-form spaces")
    a("--generate", help="grid1d | grid2d | weighted_grid | snowflake")
    a("--n", help="number of points (grid1d, weighted_grid) or side length (grid2d)")
    a("--shape", help="grid2d shape as AxB")
    a("--a", help="snowflake exponent in (0, 1]")
    a("--base", help="base space kind for snowflake")
    a("--weight", help="weighted_grid density, e.g. power(2)")
    a("--u", help="function CSV id,value")
    a("--g", help="gradient CSV id,value")
    a("--column", help="value column name in function files (default value)")
    a("--function", help="catalog function on [0,1], e.g. indicator(0,0.5), ramp(0.5)")
    a("--spec", help="quasinorm spec file (key=value)")
    a("--op", help="operation variant of the subcommand")
    a("--gamma", action="append", help="gamma in (0,1); repeat for lists")
    a("--R", help="maximal radius, 'inf' allowed (default inf)")
    a("--s", help="smoothness exponent in (0,1] (default 1)")
    a("--lam", help="level lambda (holder, weak-type probe)")
    a("--Q", help="dimension exponent for the Poincare probe (default: fitted)")
    a("--E", action="append", help="point id in the target set; repeat")
    a("--radius", action="append", help="radius; repeat for capacity bump radii")
    a("--center", help="ball center id (median)")
    a("--family", action="append", help="Boyd candidate family; repeat")
    a("--resolution", action="append", help="grid size for lebesgue; repeat")
    a("--x", help="trace location in [0,1]")
    a("--tol", help="classification tolerance (default 1e-6)")
    p = argparse.ArgumentParser(prog="medianscape", description=__doc__,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="command", required=True, metavar="command")
    for name, (_, help_) in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=help_, description=help_)
    return p


def _resolve(ns: argparse.Namespace) -> ExperimentConfig:
    params = {k: v for k, v in vars(ns).items() if k != "command"}
    if params.get("config"):
        if not Path(params["config"]).is_file():
            raise ValidationError(f"--config: no such file {params['config']}")
        for k, v in read_keyvalue(params["config"]).items():
            key = k.replace("-", "_")
            if key not in params:
                raise ValidationError(f"{params['config']}: unknown key {k}")
            if params[key] is None:
                params[key] = (v if isinstance(v, list) else [v]) if key in LISTS else v
    for k, v in DEFAULTS.items():
        if params.get(k) is None:
            params[k] = v
    return ExperimentConfig(ns.command, params)


def _set_workers(cfg):
    import numba
    w = os.environ.get("MEDIANSCAPE_WORKERS") or cfg.params.get("workers")
    if w is None:
        return
    try:
        w = int(w)
    except ValueError:
        raise ValidationError(f"worker count must be an integer, got {w!r}") from None
    if w < 1:
        raise ValidationError("worker count must be positive")
    numba.set_num_threads(min(w, numba.config.NUMBA_NUM_THREADS))


def run(cfg: ExperimentConfig) -> int:
    _set_workers(cfg)
    return COMMANDS[cfg.command][0](cfg)


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        return run(_resolve(ns))
    except ValidationError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except AuditError as e:
        print(f"audit failure: {e}", file=sys.stderr)
        return 3
