"""Compare SL0 step/initialization variants on exact sparse recovery.

For every combination of ascent scaling, initial sigma and column
normalization, count how many random k-sparse (k <= 5) coefficient
tensors are recovered to 1e-3 relative error from K snapshots.

    python3 scripts/select_sl0_variant.py --trials 50
"""

import argparse
import itertools
import time

import numpy as np

from mdcs.dictionaries import dct_separable
from mdcs.sensing import MaskSpec, build_operator, sense
from mdcs.sl0 import ASCENT_SCALINGS, INITIAL_SIGMAS, SL0Params, sl0_nd


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=50)
    ap.add_argument("--K", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--sigma-min-factor", type=float, default=1e-5)
    ap.add_argument("--sigma-decrease", type=float, default=0.8)
    args = ap.parse_args()

    patch = (5, 5, 4, 4, 13)
    D = dct_separable(patch)
    rng = np.random.default_rng(args.seed)
    problems = []
    for trial in range(args.trials):
        k = int(rng.integers(1, 6))
        S0 = np.zeros(patch)
        S0.flat[rng.choice(S0.size, k, replace=False)] = rng.choice([-1.0, 1.0], k) * rng.uniform(0.5, 1.5, k)
        op = build_operator(MaskSpec(patch, args.K, int(rng.integers(2**31))), trial)
        A = [P @ F for P, F in zip(op.phi, D.factors)]
        problems.append((S0, A, sense(D.synthesize(S0), op)))

    print(f"{'ascent':8} {'init':13} {'normalize':9} {'recovered':>9} {'time_s':>7}")
    for scaling, init, norm in itertools.product(ASCENT_SCALINGS, INITIAL_SIGMAS, (True, False)):
        params = SL0Params(
            sigma_min_factor=args.sigma_min_factor,
            sigma_decrease=args.sigma_decrease,
            ascent_scaling=scaling,
            initial_sigma=init,
            normalize_columns=norm,
        )
        t0 = time.perf_counter()
        hits = sum(
            np.linalg.norm(sl0_nd(I, A, params) - S0) <= 1e-3 * np.linalg.norm(S0) for S0, A, I in problems
        )
        print(f"{scaling:8} {init:13} {str(norm):9} {hits:>5}/{args.trials:<3} {time.perf_counter() - t0:7.2f}")


if __name__ == "__main__":
    main()
