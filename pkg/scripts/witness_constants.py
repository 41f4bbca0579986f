"""Witness exponents k (C = c_d^k) for both maximal-function gradients across refinements.

    python scripts/witness_constants.py --sizes 64 128 256 512
"""

import argparse
from dataclasses import dataclass, field

import numpy as np

from medianscape.covers import maximal_gradient_witness, median_maximal_gradient_witness
from medianscape.hajlasz import canonical_gradient
from medianscape.space import estimate_structure, generate_space

FUNCTIONS = {
    "x": lambda x: x,
    "sin 2pi x": lambda x: np.sin(2 * np.pi * x),
    "|x-1/2|": lambda x: np.abs(x - 0.5),
    "sqrt": lambda x: np.sqrt(x + 0.05),
}


@dataclass
class WitnessConfig:
    sizes: list = field(default_factory=lambda: [64, 128, 256])
    gamma: float = 0.25
    R: float = 0.25


def run(cfg: WitnessConfig):
    print(f"{'function':12s} {'n':>5s} {'c_d':>5s} {'Q':>6s} {'k median':>9s} {'k maximal':>10s}")
    for name, f in FUNCTIONS.items():
        for n in cfg.sizes:
            sp = generate_space("grid1d", n=n)
            st = estimate_structure(sp)
            u = f(sp.positions[:, 0])
            g = canonical_gradient(sp, u).g
            km = median_maximal_gradient_witness(sp, u, g, cfg.gamma, cfg.R, c_d=st.c_d).k
            kx = maximal_gradient_witness(sp, u, g, cfg.R, Q=st.Q, c_d=st.c_d).k
            print(f"{name:12s} {n:5d} {st.c_d:5.2f} {st.Q:6.3f} {km:9d} {kx:10d}")


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--sizes", type=int, nargs="+", default=[64, 128, 256])
    ap.add_argument("--gamma", type=float, default=WitnessConfig.gamma)
    ap.add_argument("--R", type=float, default=WitnessConfig.R)
    run(WitnessConfig(**vars(ap.parse_args())))
