"""Mean PSNR versus snapshot count, and learned versus DCT dictionaries.

Part 1 reconstructs fields that are patchwise sparse in the DCT basis for
K in --K-list. Part 2 draws fields sparse in a learned basis and compares
the learned and DCT dictionaries at each K.

    python3 scripts/snapshot_dictionary_sweep.py --seeds 20
"""

import argparse

import numpy as np

from mdcs.dictionaries import dct_separable, learn_separable_dictionary
from mdcs.lfio import SyntheticSceneSpec, synth_scene, synth_sparse_field
from mdcs.metrics import psnr
from mdcs.pipeline import PatchGrid, ReconstructionConfig, extract_patches, reconstruct_lightfield, sense_lightfield

PATCH = (5, 5, 4, 4, 13)
DIMS = (10, 10, 4, 4, 13)


def mean_psnr(D_truth, D_recon, K, seeds, nonzeros, offset=0):
    vals = []
    for seed in range(seeds):
        L = synth_sparse_field(DIMS, PATCH, D_truth, nonzeros, seed + offset)
        cfg = ReconstructionConfig(snapshots=K, master_seed=seed)
        vals.append(psnr(L, reconstruct_lightfield(sense_lightfield(L, cfg), cfg, D_recon).field))
    return float(np.mean(vals))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--K-list", default="1,3,5,7,13")
    args = ap.parse_args()
    Ks = [int(k) for k in args.K_list.split(",")]

    dct = dct_separable(PATCH)
    print("DCT-sparse fields (5 nonzeros per patch)")
    for K in Ks:
        print(f"  K={K:2d}  mean psnr {mean_psnr(dct, dct, K, args.seeds, 5):8.2f} dB")

    patches = []
    for s in range(1000, 1008):
        L = synth_scene(SyntheticSceneSpec((20, 20, 4, 4, 13), seed=s))
        patches.extend(extract_patches(L, PatchGrid(L.shape, PATCH)))
    learned = learn_separable_dictionary(patches)
    print("learned-sparse fields (3 nonzeros per patch): learned vs DCT reconstruction")
    for K in Ks:
        a = mean_psnr(learned, learned, K, args.seeds, 3, offset=500)
        b = mean_psnr(learned, dct, K, args.seeds, 3, offset=500)
        print(f"  K={K:2d}  learned {a:8.2f} dB  dct {b:8.2f} dB  gap {a - b:+7.2f} dB")


if __name__ == "__main__":
    main()
