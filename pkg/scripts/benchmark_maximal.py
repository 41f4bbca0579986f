"""Wall-clock timings of the maximal functions on a line grid.

    MEDIANSCAPE_WORKERS=4 python scripts/benchmark_maximal.py --n 100000
"""

import argparse
import os
import time
from dataclasses import dataclass, field

import numba
import numpy as np

from medianscape.maximal import hl_maximal, median_maximal
from medianscape.space import generate_space


@dataclass
class BenchConfig:
    n: int = 100_000
    gammas: list = field(default_factory=lambda: [0.5, 0.1])
    seed: int = 0


def run(cfg: BenchConfig):
    if os.environ.get("MEDIANSCAPE_WORKERS"):
        numba.set_num_threads(int(os.environ["MEDIANSCAPE_WORKERS"]))
    warm = generate_space("grid1d", n=512)
    hl_maximal(warm, np.ones(512))
    median_maximal(warm, np.ones(512), 0.5)
    sp = generate_space("grid1d", n=cfg.n)
    rng = np.random.default_rng(cfg.seed)
    inputs = {"random": rng.standard_normal(cfg.n), "linear": sp.positions[:, 0].copy()}
    print(f"n={cfg.n}, threads={numba.get_num_threads()} ({numba.threading_layer()})")
    for label, u in inputs.items():
        t = time.perf_counter()
        hl_maximal(sp, u)
        print(f"{label:8s} hl_maximal        {time.perf_counter() - t:7.2f}s")
        for g in cfg.gammas:
            t = time.perf_counter()
            median_maximal(sp, u, g)
            print(f"{label:8s} median_maximal {g:<4g} {time.perf_counter() - t:6.2f}s")


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--n", type=int, default=BenchConfig.n)
    ap.add_argument("--gamma", type=float, action="append", dest="gammas")
    ap.add_argument("--seed", type=int, default=BenchConfig.seed)
    args = {k: v for k, v in vars(ap.parse_args()).items() if v is not None}
    run(BenchConfig(**args))
