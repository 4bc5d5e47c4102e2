#!/usr/bin/env python3
"""Pilot run that freezes the desk-scale acceptance thresholds.

Trains the toy task in all three modes at the frozen settings, measures
augmentation throughput, and writes benchmarks/pilot.json. The thresholds
asserted by the acceptance suite were chosen from this record (with margin)
and must only change together with it.
"""

import json
import platform
import sys
import time
from pathlib import Path

import numpy as np

from causaug import GinConfig, ImageTensor, PipelineConfig, SeedStream, augment_sample
from causaug.toyeval import SyntheticTask, TrainConfig, evaluate_generalization

ROOT = Path(__file__).resolve().parent.parent

FROZEN = {
    "master_seed": 0,
    "iterations": 1200,
    "learning_rate": 0.1,
    "div_weight": 1.0,
    "eval_images": 100,
}

THRESHOLDS = {
    "source_dice_min": 85.0,
    "gin_minus_erm_min": 15.0,
    "ipa_minus_gin_min": 0.0,
}


def bench_throughput(size: int = 192, batch: int = 32) -> float:
    cfg = PipelineConfig(gin=GinConfig())
    root = SeedStream(0)
    images = [
        ImageTensor(root.child("bench-input", i).normal(size * size)
                    .reshape(1, size, size).astype(np.float32))
        for i in range(batch)
    ]
    start = time.perf_counter()
    for i, img in enumerate(images):
        augment_sample(img, cfg, root.child("iter", 0).child("sample", i))
    return batch / (time.perf_counter() - start)


def main() -> int:
    cfg = TrainConfig(
        iterations=FROZEN["iterations"],
        learning_rate=FROZEN["learning_rate"],
        div_weight=FROZEN["div_weight"],
        master_seed=FROZEN["master_seed"],
    )
    start = time.perf_counter()
    report = evaluate_generalization(cfg, task=SyntheticTask(),
                                     eval_images=FROZEN["eval_images"])
    toy_seconds = time.perf_counter() - start
    throughput = bench_throughput()
    record = {
        "frozen_settings": FROZEN,
        "thresholds": THRESHOLDS,
        "toy_eval": report["modes"],
        "toy_eval_seconds": round(toy_seconds, 1),
        "bench_samples_per_second_192": round(throughput, 1),
        "bench_floor_frozen": 8.0,
        "platform": platform.platform(),
        "python": platform.python_version(),
        "numpy": np.__version__,
    }
    out = ROOT / "benchmarks" / "pilot.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(record, indent=2, sort_keys=True) + "\n")
    print(json.dumps(record, indent=2, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
