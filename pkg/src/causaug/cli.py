"""Command-line surface.

Exit codes: 0 success, 1 runtime error, 2 usage error. Every command is a
pure function of its inputs and --seed; outputs are byte-identical across
reruns and across worker counts (CAUSAUG_THREADS overrides the pool size).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import toyeval
from .config import PipelineConfig, config_hash, load_config
from .errors import CausaugError
from .ingest import PreprocSpec, load_npy, preprocess, save_npy, save_png_tiled, VolumeFile
from .ipa import augment_sample
from .streams import SeedStream
from .tensor import ImageTensor

# pilot-frozen regression floor for `bench` (samples/second, default config
# at 192x192 on the reference build box; measured ~4x higher)
BENCH_FLOOR_DEFAULT = 8.0


def _worker_count() -> int:
    env = os.environ.get("CAUSAUG_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise CausaugError(f"CAUSAUG_THREADS must be an integer, got {env!r}")
    return min(8, os.cpu_count() or 1)


def _load_pipeline_config(path: str | None, seed: int | None) -> PipelineConfig:
    cfg = load_config(path) if path else PipelineConfig()
    if seed is not None:
        cfg = dataclasses.replace(cfg, seed=int(seed))
    return cfg


def _collect_slices(
    input_path: Path, preproc: PreprocSpec | None = None
) -> list[tuple[str, ImageTensor]]:
    """Expand a file or directory into named single-channel slices.

    Volumes contribute one slice per depth index, named ``stem_zDDD``. The
    (sorted-filename, depth) order defines the global slice index used for
    seeding, so it is part of the determinism contract. With ``preproc`` set,
    each scan runs through the full preprocessing pipeline first (a 2-D input
    is treated as a one-slice scan).
    """
    files = sorted(p for p in input_path.iterdir() if p.suffix == ".npy") \
        if input_path.is_dir() else [input_path]
    if not files:
        raise CausaugError(f"{input_path}: no .npy inputs found")
    slices: list[tuple[str, ImageTensor]] = []
    for f in files:
        loaded = load_npy(f)
        if isinstance(loaded, ImageTensor) and preproc is not None:
            loaded = VolumeFile(scan=loaded.data)
        if isinstance(loaded, VolumeFile):
            planes = (
                preprocess(loaded, preproc) if preproc is not None
                else [ImageTensor(loaded.scan[d][None]) for d in range(loaded.depth)]
            )
            for d, plane in enumerate(planes):
                slices.append((f"{f.stem}_z{d:03d}", plane))
        else:
            slices.append((f.stem, loaded))
    return slices


def cmd_augment(args: argparse.Namespace) -> int:
    cfg = _load_pipeline_config(args.config, args.seed)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    input_path = Path(args.input)
    if not input_path.exists():
        print(f"error: {input_path}: no such input", file=sys.stderr)
        return 1

    preproc = cfg.preprocessing if args.preprocess else None
    failures: list[str] = []
    slices: list[tuple[str, ImageTensor]] = []
    if input_path.is_dir():
        # collect per file so one bad file doesn't sink the batch
        files = sorted(p for p in input_path.iterdir() if p.suffix == ".npy")
        for f in files:
            try:
                slices.extend(_collect_slices(f, preproc))
            except CausaugError as exc:
                failures.append(f"{f}: {exc}")
        if not files:
            failures.append(f"{input_path}: no .npy inputs found")
    else:
        try:
            slices = _collect_slices(input_path, preproc)
        except CausaugError as exc:
            failures.append(str(exc))
    for msg in failures:
        print(f"error: {msg}", file=sys.stderr)

    digest = config_hash(cfg)
    root = SeedStream(cfg.seed)
    tasks = [
        (slice_idx, name, image, pair_idx)
        for slice_idx, (name, image) in enumerate(slices)
        for pair_idx in range(args.pair_start, args.pair_start + args.pairs)
    ]

    def run_one(task) -> None:
        slice_idx, name, image, pair_idx = task
        stream = root.child("iter", pair_idx).child("sample", slice_idx)
        pair = augment_sample(image, cfg, stream)
        base = out_dir / f"{name}_p{pair_idx:02d}"
        save_npy(pair.t1, base.with_name(base.name + "_t1.npy"))
        save_npy(pair.t2, base.with_name(base.name + "_t2.npy"))
        if args.emit_maps:
            save_npy(pair.map, base.with_name(base.name + "_map.npy"))
        sidecar = {
            "input": name,
            "config_hash": digest,
            "master_seed": cfg.seed,
            "seed_path": [["iter", pair_idx], ["sample", slice_idx]],
            "alpha1": pair.gin1.alpha,
            "alpha2": pair.gin2.alpha,
            "map_origin": pair.map.origin,
        }
        base.with_suffix(".json").write_text(
            json.dumps(sidecar, sort_keys=True, separators=(",", ":")) + "\n"
        )

    workers = _worker_count()
    if workers == 1:
        for t in tasks:
            run_one(t)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run_one, tasks))
    print(f"augmented {len(slices)} slice(s) x {args.pairs} pair(s) -> {out_dir}")
    return 1 if failures else 0


def cmd_preview(args: argparse.Namespace) -> int:
    cfg = _load_pipeline_config(args.config, args.seed)
    loaded = load_npy(Path(args.input))
    if isinstance(loaded, VolumeFile):
        image = ImageTensor(loaded.scan[loaded.depth // 2][None])
    else:
        image = loaded
    stream = SeedStream(cfg.seed).child("iter", 0).child("sample", 0)
    pair = augment_sample(image, cfg, stream)
    planes = [image.data[0], pair.t1.data[0], pair.t2.data[0], pair.map.values]
    save_png_tiled(planes, Path(args.out))
    print(f"wrote {args.out}")
    return 0


def cmd_gen_maps(args: argparse.Namespace) -> int:
    cfg = _load_pipeline_config(args.config, args.seed)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    map_cfg = cfg.map_config
    if args.kind:
        map_cfg = dataclasses.replace(map_cfg, kind=args.kind)
    if args.spacing:
        map_cfg = dataclasses.replace(
            map_cfg,
            bspline=dataclasses.replace(map_cfg.bspline, spacing=args.spacing),
        )
    image = None
    if map_cfg.kind == "superpixel":
        if not args.input:
            raise CausaugError("--input is required for superpixel maps")
        loaded = load_npy(Path(args.input))
        image = (
            ImageTensor(loaded.scan[loaded.depth // 2][None])
            if isinstance(loaded, VolumeFile) else loaded
        )
        h, w = image.height, image.width
    else:
        h, w = (int(v) for v in args.size.lower().split("x"))
    root = SeedStream(cfg.seed)
    from .pcmap import bspline_map, superpixel_map  # local to keep CLI import light

    for i in range(args.count):
        stream = root.child("map", i)
        if map_cfg.kind == "superpixel":
            m = superpixel_map(image, map_cfg.felz, stream)
        else:
            m = bspline_map(h, w, map_cfg.bspline, stream)
        save_npy(m, out_dir / f"map_{i:03d}.npy")
        if args.png:
            save_png_tiled([m.values], out_dir / f"map_{i:03d}.png")
    print(f"wrote {args.count} {map_cfg.kind} map(s) -> {out_dir}")
    return 0


def cmd_bench(args: argparse.Namespace) -> int:
    cfg = _load_pipeline_config(args.config, args.seed)
    h, w = (int(v) for v in args.size.lower().split("x"))
    root = SeedStream(cfg.seed)
    batch = []
    for i in range(args.batch):
        data = root.child("bench-input", i).normal(h * w).reshape(1, h, w)
        batch.append(ImageTensor(data.astype(np.float32)))

    def run_one(i: int):
        return augment_sample(batch[i], cfg, root.child("iter", 0).child("sample", i))

    workers = _worker_count()
    start = time.perf_counter()
    if workers == 1:
        for i in range(len(batch)):
            run_one(i)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run_one, range(len(batch))))
    elapsed = time.perf_counter() - start
    samples_per_s = args.batch / elapsed
    print(
        f"bench: {args.batch} samples ({2 * args.batch} augmented images) "
        f"at {h}x{w} in {elapsed:.3f}s -> {samples_per_s:.1f} samples/s "
        f"({2 * samples_per_s:.1f} images/s), {workers} worker(s)"
    )
    floor = args.floor if args.floor is not None else BENCH_FLOOR_DEFAULT
    if samples_per_s < floor:
        print(f"error: throughput {samples_per_s:.1f} below floor {floor}", file=sys.stderr)
        return 1
    return 0


def cmd_toy_demo(args: argparse.Namespace) -> int:
    modes = toyeval.MODES if args.mode == "all" else (args.mode,)
    config = toyeval.TrainConfig(
        iterations=args.iters,
        master_seed=args.seed,
        mode=modes[0],
    )
    report = toyeval.evaluate_generalization(config, modes=modes)
    if args.trace:
        cfg0 = dataclasses.replace(config, mode=modes[0])
        _, trace = toyeval.train(toyeval.SyntheticTask(), cfg0)
        with open(args.trace, "w") as fh:
            for rep in trace:
                fh.write(json.dumps(rep.to_dict(), sort_keys=True) + "\n")
    text = json.dumps(report, indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n")
    print(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="causaug",
        description="Deterministic acquisition-shift augmentation engine",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("augment", help="write augmented view pairs for NPY slices")
    p.add_argument("--input", required=True, help="NPY file or directory of NPY slices/volumes")
    p.add_argument("--config", help="pipeline config JSON")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--pairs", type=int, default=1, help="augmented pairs per slice")
    p.add_argument("--pair-start", type=int, default=0,
                   help="index of the first pair (advanced: per-iteration substreams)")
    p.add_argument("--seed", type=int, help="override the config master seed")
    p.add_argument("--emit-maps", action="store_true", help="also write the blending maps")
    p.add_argument("--preprocess", action="store_true",
                   help="run inputs through the config's preprocessing pipeline first")
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("preview", help="tile original/view1/view2/map into one PNG")
    p.add_argument("--input", required=True)
    p.add_argument("--config")
    p.add_argument("--out", required=True, help="output PNG path")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_preview)

    p = sub.add_parser("gen-maps", help="write pseudo-correlation maps as NPY")
    p.add_argument("--kind", choices=["bspline", "superpixel"])
    p.add_argument("--size", default="192x192", help="HxW for lattice maps")
    p.add_argument("--input", help="source image (required for superpixel maps)")
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--spacing", type=int, help="lattice spacing override")
    p.add_argument("--config")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--png", action="store_true", help="also write PNG previews")
    p.set_defaults(func=cmd_gen_maps)

    p = sub.add_parser("bench", help="measure augmentation throughput")
    p.add_argument("--size", default="192x192")
    p.add_argument("--batch", type=int, default=32)
    p.add_argument("--config")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--floor", type=float, help="override the frozen regression floor")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("toy-demo", help="train the synthetic two-domain demo")
    p.add_argument("--mode", choices=["all", *toyeval.MODES], default="all")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--iters", type=int, default=1200)
    p.add_argument("--out", help="write the report JSON here")
    p.add_argument("--trace", help="write per-iteration loss JSON lines here")
    p.set_defaults(func=cmd_toy_demo)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CausaugError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
