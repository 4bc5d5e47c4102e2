"""Dense image containers and the shared low-level kernels.

Conventions fixed here and relied on everywhere else:

* images are C×H×W float32, row-major per channel, finite on every public
  boundary;
* convolutions are "same" size with reflect padding and a fixed per-pixel
  summation order (so equal neighborhoods produce bit-equal outputs);
* bilinear resize is corner-aligned;
* reductions (norms) accumulate in float64.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import InvalidArgument


@dataclass(frozen=True)
class ImageTensor:
    """C×H×W float32 image. Immutable once constructed."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data)
        if arr.ndim != 3:
            raise InvalidArgument(f"ImageTensor needs a 3-D C×H×W array, got ndim={arr.ndim}")
        if arr.dtype != np.float32:
            arr = arr.astype(np.float32)
        if arr.size == 0:
            raise InvalidArgument("ImageTensor must be non-empty")
        if not np.isfinite(arr).all():
            raise InvalidArgument("ImageTensor contains non-finite values")
        arr = np.ascontiguousarray(arr)
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "ImageTensor":
        """Build from a 2-D (H×W, becomes 1×H×W) or 3-D array."""
        arr = np.asarray(arr)
        if arr.ndim == 2:
            arr = arr[None, :, :]
        return cls(arr)

    @property
    def channels(self) -> int:
        return self.data.shape[0]

    @property
    def height(self) -> int:
        return self.data.shape[1]

    @property
    def width(self) -> int:
        return self.data.shape[2]

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.data.shape


@dataclass(frozen=True)
class LabelMask:
    """H×W per-pixel class indices in [0, classes)."""

    classes: int
    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data)
        if arr.ndim != 2:
            raise InvalidArgument(f"LabelMask needs a 2-D H×W array, got ndim={arr.ndim}")
        arr = np.ascontiguousarray(arr.astype(np.int32))
        if self.classes < 1:
            raise InvalidArgument("LabelMask needs classes >= 1")
        if arr.size and (arr.min() < 0 or arr.max() >= self.classes):
            raise InvalidArgument(
                f"LabelMask values must lie in [0, {self.classes}), "
                f"got range [{arr.min()}, {arr.max()}]"
            )
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]


def conv2d_raw(x: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Same-size 2-D convolution of a C×H×W array with reflect padding.

    ``weights`` is [out_ch, in_ch, k, k] with odd k. Each output pixel is an
    einsum over its k×k neighborhood in a fixed index order, so identical
    neighborhoods yield bit-identical outputs.
    """
    if weights.ndim != 4:
        raise InvalidArgument(f"kernel must be 4-D [out,in,k,k], got ndim={weights.ndim}")
    out_ch, in_ch, kh, kw = weights.shape
    if kh != kw:
        raise InvalidArgument(f"kernel must be square, got {kh}x{kw}")
    if kh % 2 == 0:
        raise InvalidArgument(f"kernel size must be odd, got {kh}")
    if x.ndim != 3 or x.shape[0] != in_ch:
        raise InvalidArgument(
            f"channel mismatch: input has {x.shape[0] if x.ndim == 3 else '?'} channels, "
            f"kernel expects {in_ch}"
        )
    pad = kh // 2
    if pad == 0:
        xpad = x
    else:
        xpad = np.pad(x, ((0, 0), (pad, pad), (pad, pad)), mode="reflect")
    win = sliding_window_view(xpad, (kh, kw), axis=(1, 2))  # [C,H,W,k,k]
    w = weights.astype(x.dtype, copy=False)
    return np.einsum("ocij,cyxij->oyx", w, win, optimize=False)


def conv2d(input: ImageTensor, weights: np.ndarray) -> ImageTensor:
    """Convolve an image with a [out_ch, in_ch, k, k] kernel stack."""
    weights = np.asarray(weights)
    return ImageTensor(conv2d_raw(input.data, weights.astype(np.float32, copy=False)))


def _lerp(a: np.ndarray, b: np.ndarray, w: np.ndarray) -> np.ndarray:
    # a + w*(b-a): exact for w=0 and for a==b, which keeps identity resizes
    # and constant images bit-stable.
    return a + w * (b - a)


def resize_bilinear_raw(x: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Corner-aligned bilinear resize of a C×H×W array."""
    if out_h < 1 or out_w < 1:
        raise InvalidArgument(f"output dims must be >= 1, got {out_h}x{out_w}")
    _, in_h, in_w = x.shape

    def axis_coords(n_in: int, n_out: int) -> np.ndarray:
        if n_out == 1:
            return np.full(1, (n_in - 1) / 2.0)
        return np.arange(n_out, dtype=np.float64) * ((n_in - 1) / (n_out - 1))

    ys = axis_coords(in_h, out_h)
    xs = axis_coords(in_w, out_w)
    y0 = np.floor(ys).astype(np.intp)
    x0 = np.floor(xs).astype(np.intp)
    y0 = np.minimum(y0, in_h - 1)
    x0 = np.minimum(x0, in_w - 1)
    y1 = np.minimum(y0 + 1, in_h - 1)
    x1 = np.minimum(x0 + 1, in_w - 1)
    wy = (ys - y0).astype(x.dtype)[None, :, None]
    wx = (xs - x0).astype(x.dtype)[None, None, :]

    tl = x[:, y0[:, None], x0[None, :]]
    tr = x[:, y0[:, None], x1[None, :]]
    bl = x[:, y1[:, None], x0[None, :]]
    br = x[:, y1[:, None], x1[None, :]]
    top = _lerp(tl, tr, wx)
    bot = _lerp(bl, br, wx)
    return _lerp(top, bot, wy)


def resize_bilinear(input: ImageTensor, out_h: int, out_w: int) -> ImageTensor:
    """Resize an image with corner-aligned bilinear interpolation."""
    return ImageTensor(resize_bilinear_raw(input.data, int(out_h), int(out_w)))


def frobenius_norm(input: ImageTensor) -> float:
    """Elementwise L2 norm over all channels and pixels (float64 accumulation)."""
    return frobenius_norm_raw(input.data)


def frobenius_norm_raw(x: np.ndarray) -> float:
    # np.sum's pairwise reduction is deterministic for a fixed shape; avoid
    # BLAS dot whose internal threading is outside our control.
    flat = x.reshape(-1).astype(np.float64)
    return float(np.sqrt(np.sum(flat * flat)))


def leaky_relu(x: np.ndarray, slope: float) -> np.ndarray:
    return np.where(x >= 0, x, x * x.dtype.type(slope))
