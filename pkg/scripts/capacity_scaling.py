"""Capacity upper bounds of a single point and of an interval as the grid is refined.

    python scripts/capacity_scaling.py --p 2 --s 1
"""

import argparse
from dataclasses import dataclass

import numpy as np

from medianscape.hajlasz import capacity_upper
from medianscape.qbfs import Lp
from medianscape.space import generate_space


@dataclass
class CapacityConfig:
    p: float = 2.0
    s: float = 1.0
    kmin: int = 6
    kmax: int = 9


def run(cfg: CapacityConfig):
    spec = Lp(cfg.p)
    for k in range(cfg.kmin, cfg.kmax + 1):
        n = 2 ** k
        sp = generate_space("grid1d", n=n)
        h = sp.min_positive_distance()
        radii = np.geomspace(2 * h, 0.8, 10)
        x = sp.positions[:, 0]
        point = capacity_upper(sp, [n // 2], cfg.s, spec, radii)
        seg = capacity_upper(sp, np.flatnonzero(np.abs(x - 0.5) < 0.1), cfg.s, spec, radii)
        print(f"n={n:5d}  point <= {point.value:.4f} (delta {point.delta:.3g}, {point.tag})  "
              f"interval <= {seg.value:.4f} (delta {seg.delta:.3g})")


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--p", type=float, default=CapacityConfig.p)
    ap.add_argument("--s", type=float, default=CapacityConfig.s)
    ap.add_argument("--kmin", type=int, default=CapacityConfig.kmin)
    ap.add_argument("--kmax", type=int, default=CapacityConfig.kmax)
    run(CapacityConfig(**vars(ap.parse_args())))
