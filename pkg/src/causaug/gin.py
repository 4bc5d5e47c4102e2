"""Global intensity non-linear augmentation (GIN).

A GIN transform is a shallow convolutional network with freshly sampled
Gaussian weights, LeakyReLU between neighboring layers (none after the last),
no biases and no downsampling. Its output is blended with the original image
by a random coefficient in [0,1] and the blend is rescaled to the input's
Frobenius norm, so augmentation changes appearance but not image energy.

With ``n_layers=1`` the network is a single random linear filter, which is
the classic random-convolution augmentation as a degenerate config.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateTransform, InvalidArgument
from .streams import SeedStream
from .tensor import ImageTensor, conv2d_raw, frobenius_norm_raw, leaky_relu

# blends with Frobenius norm below this are considered collapsed
NORM_GUARD = 1e-8


@dataclass(frozen=True)
class GinConfig:
    """Shape of the random networks. Defaults follow the reported setup."""

    n_layers: int = 4
    hidden_channels: int = 2
    kernel_size: int = 3
    leaky_slope: float = 0.2

    def __post_init__(self):
        if self.n_layers < 1:
            raise InvalidArgument("n_layers must be >= 1")
        if self.hidden_channels < 1:
            raise InvalidArgument("hidden_channels must be >= 1")
        if self.kernel_size < 1 or self.kernel_size % 2 == 0:
            raise InvalidArgument("kernel_size must be odd and >= 1")
        if not 0.0 <= self.leaky_slope < 1.0:
            raise InvalidArgument("leaky_slope must lie in [0, 1)")

    @classmethod
    def randconv(cls, kernel_size: int = 3) -> "GinConfig":
        """Single random linear filter (the RandConv-style baseline)."""
        return cls(n_layers=1, hidden_channels=1, kernel_size=kernel_size)

    def layer_shapes(self, channels: int) -> list[tuple[int, int, int, int]]:
        """Kernel shapes [out,in,k,k] per layer for a given image channel count."""
        if channels < 1:
            raise InvalidArgument("channels must be >= 1")
        k = self.kernel_size
        shapes = []
        for i in range(self.n_layers):
            c_in = channels if i == 0 else self.hidden_channels
            c_out = channels if i == self.n_layers - 1 else self.hidden_channels
            shapes.append((c_out, c_in, k, k))
        return shapes

    @property
    def receptive_field(self) -> int:
        return self.n_layers * (self.kernel_size - 1) + 1


@dataclass(frozen=True)
class GinTransform:
    """One sampled network: per-layer kernels, blend coefficient, provenance."""

    weights: tuple[np.ndarray, ...]
    alpha: float
    config: GinConfig
    seed_path: tuple = field(default=(), compare=False)

    @property
    def channels(self) -> int:
        return self.weights[0].shape[1]


def sample_gin(config: GinConfig, channels: int, stream: SeedStream) -> GinTransform:
    """Sample kernels ~ N(0,1) layer by layer, then the blend coefficient ~ U(0,1).

    The draw order (kernels in layer order, C-order entries, then alpha) is
    part of the reproducibility contract.
    """
    weights = []
    for shape in config.layer_shapes(channels):
        n = int(np.prod(shape))
        w = stream.normal(n).astype(np.float32).reshape(shape)
        w.setflags(write=False)
        weights.append(w)
    alpha = float(stream.uniform(1)[0])
    return GinTransform(
        weights=tuple(weights),
        alpha=alpha,
        config=config,
        seed_path=(stream.master_seed, stream.path),
    )


def apply_net(t: GinTransform, x: ImageTensor) -> ImageTensor:
    """Run the pure network part: conv → LeakyReLU → … → conv (no final activation)."""
    if x.channels != t.channels:
        raise InvalidArgument(
            f"channel mismatch: image has {x.channels}, transform expects {t.channels}"
        )
    h = x.data
    last = len(t.weights) - 1
    for i, w in enumerate(t.weights):
        h = conv2d_raw(h, w)
        if i != last:
            h = leaky_relu(h, t.config.leaky_slope)
    return ImageTensor(h)


def apply_gin(t: GinTransform, x: ImageTensor) -> ImageTensor:
    """Blend the network output with the input and restore the input's norm.

    output = (alpha·net(x) + (1−alpha)·x) · ‖x‖_F / ‖blend‖_F
    """
    norm_x = frobenius_norm_raw(x.data)
    if norm_x == 0.0:
        raise InvalidArgument("apply_gin needs a nonzero input (Frobenius norm is 0)")
    net_out = apply_net(t, x).data
    a = np.float32(t.alpha)
    blend = a * net_out + (np.float32(1.0) - a) * x.data
    norm_blend = frobenius_norm_raw(blend)
    if norm_blend < NORM_GUARD:
        raise DegenerateTransform(
            f"blended image norm {norm_blend:.3e} below guard {NORM_GUARD:.0e}; "
            "resample the transform"
        )
    return ImageTensor(blend * np.float32(norm_x / norm_blend))


def gin_pair(
    config: GinConfig, channels: int, stream: SeedStream
) -> tuple[GinTransform, GinTransform]:
    """Two independent transforms from disjoint substreams of ``stream``."""
    return (
        sample_gin(config, channels, stream.child("gin", 0)),
        sample_gin(config, channels, stream.child("gin", 1)),
    )
