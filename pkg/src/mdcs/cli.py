"""Command-line entry point: ``python -m mdcs <subcommand> ...``.

Exit codes: 0 success, 1 validation error, 2 I/O or file-format error.
Every subcommand accepts ``--config FILE`` holding ``key = value`` lines
whose keys are long option names (dashes or underscores); flags given on
the command line override the file.
"""

import argparse
import hashlib
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .dictionaries import (
    dct_separable,
    learn_separable_dictionary,
    load_dictionary,
    memory_ratio,
    save_dictionary,
)
from .exceptions import FormatError, MDCSError
from .lfio import SyntheticSceneSpec, read_tensor, save_png, spectral_to_rgb, synth_scene, synth_sparse_field, write_tensor
from .metrics import BenchWorkload, bench, evaluate, flattened_operator_elements, separable_operator_elements, write_csv
from .pipeline import (
    PatchGrid,
    ReconstructionConfig,
    extract_patches,
    parse_kv_text,
    read_bundle,
    reconstruct_lightfield,
    sense_lightfield,
    snapshot_sweep,
    write_bundle,
)
from .sensing import MaskSpec, build_operator, write_manifest
from .sl0 import SL0Params


def _dims(text):
    try:
        dims = tuple(int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    return dims


def _int_list(text):
    return [int(x) for x in text.split(",") if x]


def write_stanza(path, args, extra=""):
    """Reproducibility record: seed, hash of the effective options, version."""
    opts = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "threads", "config")}
    text = "".join(f"{k} = {v}\n" for k, v in opts.items())
    digest = hashlib.sha256((text + extra).encode()).hexdigest()[:16]
    Path(path).write_text(
        f"version = {__version__}\nseed = {getattr(args, 'seed', '')}\nconfig_hash = {digest}\n"
        f"command = {args.command}\n" + text
    )


def _stanza_path(out):
    out = Path(out)
    return out / "run.txt" if out.is_dir() else out.with_name(out.name + ".run.txt")


def _sl0_from_args(args):
    return SL0Params(
        sigma_min_factor=args.sigma_min_factor,
        sigma_decrease=args.sigma_decrease,
        inner_iterations=args.inner_iterations,
        step=args.step,
        ascent_scaling=args.ascent_scaling,
        initial_sigma=args.initial_sigma,
        normalize_columns=not args.no_normalize_columns,
    )


def _config_from_args(args, field_bands):
    patch = tuple(args.patch) if args.patch else (5, 5, 4, 4, field_bands)
    return ReconstructionConfig(
        patch_dims=patch,
        snapshots=args.K,
        master_seed=args.seed,
        basis=args.basis,
        dictionary_path=str(Path(args.dict).resolve()) if args.dict else "",
        sl0=_sl0_from_args(args),
        threads=args.threads,
        shuffle=not args.no_shuffle,
    )


# -- subcommands ---------------------------------------------------------------

def cmd_synth(args):
    dims = tuple(args.dims)
    if args.sparse:
        patch = tuple(args.patch) if args.patch else (5, 5, 4, 4, dims[4])
        D = load_dictionary(args.dict) if args.dict else dct_separable(patch)
        field_ = synth_sparse_field(dims, patch, D, args.nonzeros, args.seed)
    else:
        field_ = synth_scene(SyntheticSceneSpec(dims, args.primitives, args.disparity, args.seed))
    write_tensor(args.out, field_)
    write_stanza(_stanza_path(args.out), args)
    print(f"wrote {args.out} dims={field_.shape}")


def cmd_train_dict(args):
    patches = []
    for path in args.inputs:
        field_ = read_tensor(path)
        patch = tuple(args.patch) if args.patch else (5, 5, 4, 4, field_.shape[4])
        patches.extend(extract_patches(field_, PatchGrid(field_.shape, patch)))
    D = learn_separable_dictionary(patches)
    save_dictionary(D, args.out)
    write_stanza(_stanza_path(args.out), args)
    print(f"learned dictionary dims={D.dims} from {len(patches)} patches -> {args.out}")


def cmd_mask(args):
    grid = PatchGrid(tuple(args.field), tuple(args.patch))
    spec = MaskSpec(grid.patch_dims, args.K, args.seed, not args.no_shuffle)
    ops = [build_operator(spec, i) for i in range(grid.n_patches)]
    write_manifest(args.out, ops)
    write_stanza(_stanza_path(args.out), args)
    print(f"wrote mask manifest for {grid.n_patches} patches x {args.K} snapshots -> {args.out}")


def cmd_sense(args):
    field_ = read_tensor(args.input)
    config = _config_from_args(args, field_.shape[4])
    config.load_dictionary()
    mset = sense_lightfield(field_, config)
    write_bundle(args.out, mset, config)
    write_stanza(Path(args.out) / "run.txt", args, config.to_text())
    padded = int(np.prod(mset.grid.padded_dims))
    print(f"sensed {mset.grid.n_patches} patches: {mset.sample_count} of {padded} samples "
          f"({mset.sample_count / padded:.2%}) -> {args.out}")


def cmd_reconstruct(args):
    mset, config = read_bundle(args.bundle, threads=args.threads)
    rec = reconstruct_lightfield(mset, config, mode=args.mode)
    write_tensor(args.out, rec.field)
    write_stanza(_stanza_path(args.out), args, config.to_text())
    print(f"mode={args.mode} patches={len(rec.patch_times)} time_s={rec.total_time:.4f}")


def cmd_metrics(args):
    ref = read_tensor(args.ref)
    est = read_tensor(args.est)
    rep = evaluate(ref, est, peak=args.peak)
    print(f"psnr_db={rep.psnr_db:.6f}")
    print(f"ssim={rep.ssim:.6f}")
    print(f"sa_deg={rep.spectral_angle_deg:.6f}")
    if rep.ssim_window_truncated:
        print("note: SSIM window truncated to the spatial extent")
    if args.png:
        save_png(args.png, spectral_to_rgb(est, tuple(args.view)))


def cmd_sweep(args):
    field_ = read_tensor(args.input)
    config = _config_from_args(args, field_.shape[4])
    rows = snapshot_sweep(field_, config, args.K_list, peak=args.peak)
    for row in rows:
        row.update(scene=Path(args.input).stem, basis=config.basis, mode="nd")
        print(f"K={row['K']} psnr_db={row['psnr_db']:.4f} ssim={row['ssim']:.4f} sa_deg={row['sa_deg']:.4f}")
    if args.csv:
        write_csv(args.csv, rows)
        write_stanza(_stanza_path(args.csv), args, config.to_text())


def cmd_bench(args):
    patch = tuple(args.patch)
    ratio = memory_ratio(patch)
    print(f"dictionary elements: kronecker={int(np.prod(patch)) ** 2} separable={sum(d * d for d in patch)}")
    print(f"operator element-count ratio {float(ratio):,.2f} (reciprocal {1 / float(ratio):.4e})")
    sep = separable_operator_elements(patch, args.K)
    flat = flattened_operator_elements(patch, args.K)
    print(f"sensing+dictionary elements at K={args.K}: separable={sep} flattened={flat} ratio={flat / sep:,.2f}")
    if not args.field:
        if args.csv:
            write_csv(args.csv, [])
        return
    field_ = read_tensor(args.field)
    D = load_dictionary(args.dict) if args.dict else None
    basis = "dct" if D is None else "learned"
    works = [
        BenchWorkload(Path(args.field).stem, field_, basis, mode, args.K, patch, args.seed, D, args.repeats)
        for mode in args.modes
    ]
    rows = bench(works, _sl0_from_args(args))
    for row in rows:
        print(f"mode={row['mode']} time_s={row['time_s']:.4f} psnr_db={row['psnr_db']:.4f} bytes={row['operator_bytes']}")
    times = {r["mode"]: r["time_s"] for r in rows}
    if "nd" in times and "1d" in times:
        print(f"speedup 1d/nd = {times['1d'] / times['nd']:.1f}x")
    if args.csv:
        write_csv(args.csv, rows)
        write_stanza(_stanza_path(args.csv), args)


# -- parser ---------------------------------------------------------------------

def _add_sl0(p):
    d = SL0Params()
    g = p.add_argument_group("SL0 schedule")
    g.add_argument("--sigma-min-factor", type=float, default=d.sigma_min_factor)
    g.add_argument("--sigma-decrease", type=float, default=d.sigma_decrease)
    g.add_argument("--inner-iterations", type=int, default=d.inner_iterations)
    g.add_argument("--step", type=float, default=d.step)
    g.add_argument("--ascent-scaling", choices=("sigma2", "raw"), default=d.ascent_scaling)
    g.add_argument("--initial-sigma", choices=("estimate", "measurements"), default=d.initial_sigma)
    g.add_argument("--no-normalize-columns", action="store_true")


def _add_acq(p):
    p.add_argument("--patch", type=_dims, default=None, help="patch dims s,t,u,v,bands (default 5,5,4,4,<bands>)")
    p.add_argument("--K", type=int, default=1, help="snapshots per patch")
    p.add_argument("--basis", choices=("dct", "learned", "file"), default="dct")
    p.add_argument("--dict", default=None, help="dictionary file for --basis learned/file")
    p.add_argument("--no-shuffle", action="store_true", help="identity spatial/angular sensing matrices")
    p.add_argument("--threads", type=int, default=1)
    _add_sl0(p)


def build_parser():
    parser = argparse.ArgumentParser(prog="mdcs", description="Separable compressive sensing of 5D light fields")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", default=None, help="key = value defaults file")
        p.add_argument("--seed", type=int, default=0)
        p.set_defaults(func=func)
        return p

    p = add("synth", cmd_synth, "generate a synthetic light field")
    p.add_argument("--dims", type=_dims, default=(20, 20, 4, 4, 13))
    p.add_argument("--primitives", type=int, default=8)
    p.add_argument("--disparity", type=float, default=0.5)
    p.add_argument("--sparse", action="store_true", help="patchwise sparse in a dictionary instead of blobs")
    p.add_argument("--nonzeros", type=int, default=3)
    p.add_argument("--patch", type=_dims, default=None)
    p.add_argument("--dict", default=None)
    p.add_argument("--out", required=True)

    p = add("train-dict", cmd_train_dict, "learn a separable dictionary from fields")
    p.add_argument("--inputs", nargs="+", required=True)
    p.add_argument("--patch", type=_dims, default=None)
    p.add_argument("--out", required=True)

    p = add("mask", cmd_mask, "export the mask manifest for a field")
    p.add_argument("--field", type=_dims, required=True)
    p.add_argument("--patch", type=_dims, required=True)
    p.add_argument("--K", type=int, default=1)
    p.add_argument("--no-shuffle", action="store_true")
    p.add_argument("--out", required=True)

    p = add("sense", cmd_sense, "measure a light field into a bundle directory")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    _add_acq(p)

    p = add("reconstruct", cmd_reconstruct, "reconstruct a field from a bundle")
    p.add_argument("--bundle", required=True)
    p.add_argument("--mode", choices=("nd", "1d"), default="nd")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", required=True)

    p = add("metrics", cmd_metrics, "PSNR / SSIM / spectral angle between two fields")
    p.add_argument("--ref", required=True)
    p.add_argument("--est", required=True)
    p.add_argument("--peak", type=float, default=1.0)
    p.add_argument("--png", default=None, help="also write an sRGB rendering of --est")
    p.add_argument("--view", type=_dims, default=(0, 0))

    p = add("sweep", cmd_sweep, "reconstruction quality versus snapshot count")
    p.add_argument("--input", required=True)
    p.add_argument("--K-list", type=_int_list, default=[1, 3, 5, 7])
    p.add_argument("--peak", type=float, default=1.0)
    p.add_argument("--csv", default=None)
    _add_acq(p)

    p = add("bench", cmd_bench, "operator memory figures and nD vs 1D timing")
    p.add_argument("--patch", type=_dims, default=(5, 5, 4, 4, 13))
    p.add_argument("--K", type=int, default=1)
    p.add_argument("--field", default=None, help="field to time reconstruction on")
    p.add_argument("--dict", default=None)
    p.add_argument("--modes", nargs="+", choices=("nd", "1d"), default=["nd", "1d"])
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--csv", default=None)
    _add_sl0(p)
    return parser


def _expand_config(argv):
    """Splice ``--config FILE`` entries in as flags placed before the explicit ones."""
    argv = list(sys.argv[1:] if argv is None else argv)
    if "--config" not in argv:
        return argv
    i = argv.index("--config")
    if i + 1 >= len(argv):
        return argv
    path = argv[i + 1]
    rest = argv[:i] + argv[i + 2:]
    values = parse_kv_text(Path(path).read_text())
    injected = []
    for key, raw in values.items():
        flag = "--" + key.replace("_", "-")
        if raw.lower() in ("true", "yes"):
            injected.append(flag)
        elif raw.lower() in ("false", "no"):
            continue
        else:
            injected.extend([flag] + raw.split())
    cmd_pos = next((j for j, a in enumerate(rest) if not a.startswith("-")), None)
    if cmd_pos is None:
        return rest
    return rest[:cmd_pos + 1] + injected + rest[cmd_pos + 1:] + ["--config", path]


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(_expand_config(argv))
        args.func(args)
    except (OSError, FormatError) as exc:
        print(f"mdcs: error: {exc}", file=sys.stderr)
        return 2
    except (MDCSError, ValueError, argparse.ArgumentTypeError) as exc:
        print(f"mdcs: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
