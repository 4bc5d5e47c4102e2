#!/usr/bin/env python3
"""Regenerate the committed preprocessing golden files.

Run from the repo root. The acceptance suite compares pipeline output against
these bytes, so regenerate only on an intentional, reviewed pipeline change.
"""

import sys
from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "tests"))

from causaug import preprocess, save_npy  # noqa: E402
from golden_corpus import GOLDEN_NAMES, GOLDEN_SPEC, build_volume  # noqa: E402


def main() -> int:
    out_dir = ROOT / "tests" / "golden"
    out_dir.mkdir(parents=True, exist_ok=True)
    for name in GOLDEN_NAMES:
        vol = build_volume(name)
        slices = preprocess(vol, GOLDEN_SPEC)
        stacked = np.stack([s.data[0] for s in slices])
        path = out_dir / f"preproc_{name}.npy"
        save_npy(stacked, path)
        print(f"wrote {path} shape={stacked.shape}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
