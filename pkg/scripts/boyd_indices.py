"""Estimate upper Boyd indices on a line grid and compare with the known ceilings.

    python scripts/boyd_indices.py --n 4096 --out results/boyd.csv
"""

import argparse
import csv
import time
from dataclasses import dataclass

import numpy as np

from medianscape.boyd import FAMILIES, fit_slope, phi_table
from medianscape.qbfs import Lorentz, Lp, Orlicz, VarExp, boyd_ceiling, exponent_field, orlicz_power
from medianscape.space import generate_space


@dataclass
class BoydConfig:
    n: int = 4096
    count: int = 12
    seed: int = 0
    out: str = "boyd.csv"


def specs_for(space):
    x = space.positions[:, 0]
    return [Lp(0.5), Lp(1), Lp(2), Lorentz(2, 1), Orlicz(orlicz_power(3)), VarExp(exponent_field(space, 1.5 + x))]


def run(cfg: BoydConfig):
    sp = generate_space("grid1d", n=cfg.n)
    specs = specs_for(sp)
    gammas = np.geomspace(0.5, 8 / sp.n, cfg.count)
    rows = []
    for fam in FAMILIES:
        t = time.perf_counter()
        tab = phi_table(specs, sp, gammas, fam, cfg.seed)
        for spec, phi in zip(specs, tab):
            a, res = fit_slope(gammas, phi)
            rows.append((fam, spec.describe(), boyd_ceiling(spec), a, res))
            print(f"{fam:20s} {spec.describe():22s} alpha_hat {a:.4f}  ceiling {boyd_ceiling(spec):.4f}")
        print(f"  {fam}: {time.perf_counter() - t:.1f}s")
    with open(cfg.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["family", "space", "ceiling", "alpha_hat", "residual"])
        w.writerows(rows)
    return rows


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--n", type=int, default=BoydConfig.n)
    ap.add_argument("--count", type=int, default=BoydConfig.count)
    ap.add_argument("--seed", type=int, default=BoydConfig.seed)
    ap.add_argument("--out", default=BoydConfig.out)
    run(BoydConfig(**vars(ap.parse_args())))
