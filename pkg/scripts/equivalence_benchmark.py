"""nD versus 1D reconstruction of one desk-scale field: PSNR agreement and wall time.

    python3 scripts/equivalence_benchmark.py --csv results/equivalence.csv
"""

import argparse

from mdcs.dictionaries import learn_separable_dictionary
from mdcs.lfio import SyntheticSceneSpec, synth_scene
from mdcs.metrics import BenchWorkload, bench, write_csv
from mdcs.pipeline import PatchGrid, extract_patches


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--dims", default="20,20,4,4,13")
    ap.add_argument("--K", type=int, default=1)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--repeats", type=int, default=1)
    ap.add_argument("--basis", choices=("dct", "learned"), default="learned")
    ap.add_argument("--csv", default=None)
    args = ap.parse_args()

    dims = tuple(int(x) for x in args.dims.split(","))
    patch = (5, 5, 4, 4, dims[4])
    D = None
    if args.basis == "learned":
        patches = []
        for s in range(1000, 1008):
            patches.extend(extract_patches(synth_scene(SyntheticSceneSpec(dims, seed=s)), PatchGrid(dims, patch)))
        D = learn_separable_dictionary(patches)
    field = synth_scene(SyntheticSceneSpec(dims, seed=args.seed))
    works = [
        BenchWorkload(f"synth{args.seed}", field, args.basis, mode, args.K, patch, 3, D, args.repeats)
        for mode in ("nd", "1d")
    ]
    rows = bench(works)
    for r in rows:
        print(f"{r['mode']}: psnr {r['psnr_db']:.6f} dB  time {r['time_s']:.3f} s  operator {r['operator_bytes']:,} B")
    nd, od = rows
    print(f"|psnr diff| = {abs(nd['psnr_db'] - od['psnr_db']):.3e} dB, speedup = {od['time_s'] / nd['time_s']:.1f}x")
    if args.csv:
        write_csv(args.csv, rows)


if __name__ == "__main__":
    main()
