"""Sweep every node of dyadic line grids and report the non-Lebesgue set per resolution.

    python scripts/lebesgue_sweep.py --function "indicator(0,0.5)" --kmin 8 --kmax 14
"""

import argparse
import csv
from dataclasses import dataclass, field

from medianscape.lebesgue_lab import dyadic_family, exceptional_set_report


@dataclass
class SweepConfig:
    function: str = "indicator(0,0.5)"
    kmin: int = 8
    kmax: int = 12
    gammas: list = field(default_factory=lambda: [0.25, 0.5, 0.75])
    tol: float = 1e-6
    out: str = "sweep.csv"


def run(cfg: SweepConfig):
    fam = dyadic_family(cfg.function, cfg.kmin, cfg.kmax)
    rep = exceptional_set_report(fam, cfg.gammas, cfg.tol)
    with open(cfg.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n", "failures", "failure_mass", "non_lebesgue_mass", "capacity_upper"])
        for r in rep:
            pos = fam.space(r.n).positions[r.failures, 0]
            print(f"n={r.n:6d}  failures {r.failures.size:3d} at {[round(float(p), 5) for p in pos][:6]}  "
                  f"mass {r.failure_mass:.3g}  capacity <= {r.capacity}")
            w.writerow([r.n, r.failures.size, r.failure_mass, r.non_lebesgue_mass, r.capacity])
    return rep


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--function", default=SweepConfig.function)
    ap.add_argument("--kmin", type=int, default=SweepConfig.kmin)
    ap.add_argument("--kmax", type=int, default=SweepConfig.kmax)
    ap.add_argument("--gamma", type=float, action="append", dest="gammas")
    ap.add_argument("--tol", type=float, default=SweepConfig.tol)
    ap.add_argument("--out", default=SweepConfig.out)
    args = {k: v for k, v in vars(ap.parse_args()).items() if v is not None}
    run(SweepConfig(**args))
