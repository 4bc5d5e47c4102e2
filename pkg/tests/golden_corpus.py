"""Deterministic synthetic volumes backing the preprocessing golden files.

The three volumes exercise the full pipeline: CT-range intensities far outside
the window, heavy upper-tail outliers for the quantile clip, and anisotropic
shapes for the resize. Everything is derived from fixed seed streams, so the
corpus is reproducible from source.
"""

from __future__ import annotations

import numpy as np

from causaug import PreprocSpec, SeedStream, VolumeFile

GOLDEN_SPEC = PreprocSpec(
    window=(-275.0, 125.0),
    clip_top_percent=0.005,
    normalize=True,
    target_size=(192, 192),
)

GOLDEN_NAMES = ("ct_like", "outlier_heavy", "anisotropic")


def build_volume(name: str) -> VolumeFile:
    if name == "ct_like":
        s = SeedStream(101).child("ct")
        base = s.normal(3 * 64 * 64).reshape(3, 64, 64) * 300.0
        yy, xx = np.indices((64, 64))
        disc = ((yy - 32) ** 2 + (xx - 28) ** 2 <= 180).astype(np.float64) * 900.0
        scan = base + disc[None] - 200.0
    elif name == "outlier_heavy":
        s = SeedStream(202).child("mr")
        scan = np.abs(s.normal(4 * 48 * 56)).reshape(4, 48, 56) * 40.0
        spikes = s.uniform(4 * 48 * 56).reshape(4, 48, 56) > 0.997
        scan = scan + spikes * 5000.0
    elif name == "anisotropic":
        s = SeedStream(303).child("aniso")
        d, h, w = 2, 100, 40
        ramp = np.linspace(-120.0, 180.0, h)[None, :, None]
        wave = 60.0 * np.sin(np.linspace(0, 6 * np.pi, w))[None, None, :]
        noise = s.normal(d * h * w).reshape(d, h, w) * 25.0
        scan = np.broadcast_to(ramp + wave, (d, h, w)) + noise
    else:
        raise ValueError(f"unknown golden volume {name!r}")
    return VolumeFile(scan=scan.astype(np.float32))
