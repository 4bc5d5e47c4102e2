"""Interventional pseudo-correlation augmentation (IPA).

Two appearance transforms are sampled and applied to the same image, and the
two results are blended pixelwise with a pseudo-correlation map b and its
complement:

    t1 = g1(x) ⊙ b + g2(x) ⊙ (1−b)
    t2 = g1(x) ⊙ (1−b) + g2(x) ⊙ b

so different regions of the image effectively receive different appearance
transforms, while t1 + t2 = g1(x) + g2(x) pixelwise. Each appearance branch
is norm-restored before blending (the blend itself is not re-normalized, so
the blended norm is close to, but not exactly, the input norm).

IPA is purely photometric: label masks are never touched.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgument
from .gin import GinTransform, apply_gin, gin_pair
from .pcmap import PseudoCorrMap, bspline_map, constant_map, superpixel_map
from .streams import SeedStream
from .tensor import ImageTensor


@dataclass(frozen=True)
class AugPair:
    """The two augmented views plus everything needed to reproduce them."""

    t1: ImageTensor
    t2: ImageTensor
    map: PseudoCorrMap
    gin1: GinTransform
    gin2: GinTransform
    seed_path: tuple = field(default=(), compare=False)


def ipa_blend(
    x: ImageTensor,
    g1: GinTransform,
    g2: GinTransform,
    b: PseudoCorrMap,
    seed_path: tuple = (),
) -> AugPair:
    """Blend the two norm-restored appearance branches with map b."""
    if (b.height, b.width) != (x.height, x.width):
        raise InvalidArgument(
            f"map shape {(b.height, b.width)} does not match image "
            f"{(x.height, x.width)}"
        )
    a1 = apply_gin(g1, x).data
    a2 = apply_gin(g2, x).data
    m = b.values[None, :, :]  # broadcast one 2-D map across channels
    inv = np.float32(1.0) - m
    t1 = a1 * m + a2 * inv
    t2 = a1 * inv + a2 * m
    return AugPair(
        t1=ImageTensor(t1),
        t2=ImageTensor(t2),
        map=b,
        gin1=g1,
        gin2=g2,
        seed_path=seed_path,
    )


def augment_sample(x: ImageTensor, config, stream: SeedStream) -> AugPair:
    """One full augmentation draw: sample transforms, sample a map, blend.

    ``config`` carries ``gin`` (GinConfig), ``map_config`` (MapConfig) and
    ``ipa_enabled``. With IPA disabled the views are the two plain appearance
    branches, recorded with a constant-1 map so provenance stays uniform.
    """
    g1, g2 = gin_pair(config.gin, x.channels, stream)
    if config.ipa_enabled:
        map_stream = stream.child("map", 0)
        if config.map_config.kind == "superpixel":
            b = superpixel_map(x, config.map_config.felz, map_stream)
        else:
            b = bspline_map(x.height, x.width, config.map_config.bspline, map_stream)
    else:
        b = constant_map(x.height, x.width, 1.0)
    return ipa_blend(x, g1, g2, b, seed_path=(stream.master_seed, stream.path))
