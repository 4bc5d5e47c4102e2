"""File IO and the preprocessing pipeline applied before augmentation.

Preprocessing order is fixed (and locked by golden files): intensity window,
top-quantile clip over the whole 3-D scan, per-scan z-normalization, then
per-slice corner-aligned bilinear resize. The conventional augmentations
(affine, elastic, brightness/contrast, gamma, additive noise) mirror what
segmentation pipelines apply to every method by default; all parameters here
are conventional choices and fully configurable.

NPY is the only computational interchange format. PNG output is preview-only.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import InvalidArgument
from .npyio import read_npy, write_npy
from .pcmap import BsplineLatticeConfig, PseudoCorrMap, bspline_map
from .streams import SeedStream
from .tensor import ImageTensor, LabelMask, resize_bilinear_raw


@dataclass(frozen=True)
class VolumeFile:
    """D×H×W float32 scan plus optional voxel spacing metadata."""

    scan: np.ndarray
    spacing: tuple[float, float, float] | None = None

    def __post_init__(self):
        arr = np.asarray(self.scan)
        if arr.ndim != 3 or arr.shape[0] < 1:
            raise InvalidArgument(f"scan must be 3-D D×H×W with D>=1, got {arr.shape}")
        arr = np.ascontiguousarray(arr.astype(np.float32))
        if not np.isfinite(arr).all():
            raise InvalidArgument("scan contains non-finite values")
        object.__setattr__(self, "scan", arr)

    @property
    def depth(self) -> int:
        return self.scan.shape[0]


@dataclass(frozen=True)
class PreprocSpec:
    """window → clip → normalize → resize parameters."""

    window: tuple[float, float] | None = None
    clip_top_percent: float = 0.005
    normalize: bool = True
    target_size: tuple[int, int] = (192, 192)

    def __post_init__(self):
        if self.window is not None:
            lo, hi = self.window
            if not lo < hi:
                raise InvalidArgument(f"window low must be < high, got {self.window}")
            object.__setattr__(self, "window", (float(lo), float(hi)))
        if not 0.0 <= self.clip_top_percent < 1.0:
            raise InvalidArgument("clip_top_percent must lie in [0, 1)")
        th, tw = self.target_size
        if th < 1 or tw < 1:
            raise InvalidArgument("target_size dims must be >= 1")
        object.__setattr__(self, "target_size", (int(th), int(tw)))


def load_npy(path: str | Path) -> VolumeFile | ImageTensor:
    """Load a 2-D NPY as a single-channel image, a 3-D NPY as a volume."""
    arr = read_npy(path)
    arr = arr.astype(np.float32)
    if arr.ndim == 2:
        return ImageTensor.from_array(arr)
    return VolumeFile(scan=arr)


def save_npy(obj, path: str | Path) -> None:
    """Write a tensor/volume/map as float32 NPY.

    Single-channel images are written 2-D so they round-trip through
    :func:`load_npy`; multi-channel images are written 3-D channel-first.
    """
    if isinstance(obj, ImageTensor):
        arr = obj.data[0] if obj.channels == 1 else obj.data
    elif isinstance(obj, VolumeFile):
        arr = obj.scan
    elif isinstance(obj, PseudoCorrMap):
        arr = obj.values
    else:
        arr = np.asarray(obj, dtype=np.float32)
    write_npy(path, np.ascontiguousarray(arr, dtype=np.float32))


def _to_gray_u8(plane: np.ndarray, lo: float, hi: float) -> np.ndarray:
    if hi <= lo:  # degenerate constant image maps to black
        return np.zeros(plane.shape, dtype=np.uint8)
    scaled = (plane.astype(np.float64) - lo) * (255.0 / (hi - lo))
    return np.clip(np.rint(scaled), 0, 255).astype(np.uint8)


def save_png_preview(obj, path: str | Path) -> None:
    """8-bit grayscale preview, min-max scaled per image; channels tile
    side by side (a C-channel H×W tensor becomes an H×(C·W) PNG)."""
    if isinstance(obj, ImageTensor):
        arr = obj.data
    elif isinstance(obj, PseudoCorrMap):
        arr = obj.values[None]
    else:
        arr = np.asarray(obj, dtype=np.float32)
        if arr.ndim == 2:
            arr = arr[None]
    lo, hi = float(arr.min()), float(arr.max())
    tiles = [_to_gray_u8(arr[c], lo, hi) for c in range(arr.shape[0])]
    img = Image.fromarray(np.concatenate(tiles, axis=1), mode="L")
    try:
        img.save(Path(path), format="PNG")
    except OSError as exc:
        raise InvalidArgument(f"{path}: cannot write preview: {exc}") from exc


def save_png_tiled(planes: list[np.ndarray], path: str | Path) -> None:
    """Preview several equally sized 2-D planes side by side, each min-max
    scaled on its own."""
    tiles = []
    for plane in planes:
        p = np.asarray(plane, dtype=np.float64)
        tiles.append(_to_gray_u8(p, float(p.min()), float(p.max())))
    Image.fromarray(np.concatenate(tiles, axis=1), mode="L").save(Path(path), format="PNG")


def clip_threshold(scan: np.ndarray, clip_top_percent: float) -> float:
    """Linear-interpolated quantile above which values are clipped."""
    flat = scan.astype(np.float64).ravel()
    return float(np.quantile(flat, 1.0 - clip_top_percent, method="linear"))


def preprocess(volume: VolumeFile, spec: PreprocSpec) -> list[ImageTensor]:
    """Run the full pipeline and emit slices in depth order."""
    scan = volume.scan.astype(np.float64)
    if spec.window is not None:
        lo, hi = spec.window
        scan = np.clip(scan, lo, hi)
    if spec.clip_top_percent > 0.0:
        scan = np.minimum(scan, clip_threshold(scan, spec.clip_top_percent))
    if spec.normalize:
        mean = float(scan.mean())
        var = float(scan.var())
        if var <= 0.0:
            raise InvalidArgument("cannot z-normalize a zero-variance scan")
        scan = (scan - mean) / np.sqrt(var)
    scan32 = scan.astype(np.float32)
    th, tw = spec.target_size
    out = []
    for d in range(scan32.shape[0]):
        resized = resize_bilinear_raw(scan32[d][None], th, tw)
        out.append(ImageTensor(resized))
    return out


@dataclass(frozen=True)
class AugmentRanges:
    """Parameter ranges for the conventional augmentations."""

    rotation_degrees: tuple[float, float] = (-15.0, 15.0)
    scale: tuple[float, float] = (0.9, 1.1)
    translate_frac: tuple[float, float] = (-0.05, 0.05)
    elastic_spacing: int | None = None  # None: side/4 via pcmap default
    elastic_amplitude: float = 2.0  # peak displacement, pixels
    brightness: tuple[float, float] = (-0.1, 0.1)
    contrast: tuple[float, float] = (0.9, 1.1)
    gamma: tuple[float, float] = (0.7, 1.5)
    noise_sigma: float = 0.05


@dataclass(frozen=True)
class AugmentConfig:
    """Per-op application probabilities plus the shared ranges."""

    p_affine: float = 0.5
    p_elastic: float = 0.5
    p_brightness_contrast: float = 0.5
    p_gamma: float = 0.5
    p_noise: float = 0.5
    ranges: AugmentRanges = field(default_factory=AugmentRanges)

    def __post_init__(self):
        for name in ("p_affine", "p_elastic", "p_brightness_contrast", "p_gamma", "p_noise"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise InvalidArgument(f"{name} must lie in [0,1], got {v}")

    @classmethod
    def identity(cls) -> "AugmentConfig":
        return cls(p_affine=0.0, p_elastic=0.0, p_brightness_contrast=0.0, p_gamma=0.0, p_noise=0.0)


def _reflect_index(idx: np.ndarray, n: int) -> np.ndarray:
    """Map arbitrary integer indices into [0, n) by reflection (no edge repeat)."""
    if n == 1:
        return np.zeros_like(idx)
    period = 2 * (n - 1)
    idx = np.abs(idx) % period
    return np.where(idx >= n, period - idx, idx)


def _sample_bilinear(img: np.ndarray, ys: np.ndarray, xs: np.ndarray) -> np.ndarray:
    """Sample a C×H×W array at fractional coords with reflect out-of-bounds."""
    y0 = np.floor(ys).astype(np.int64)
    x0 = np.floor(xs).astype(np.int64)
    wy = (ys - y0).astype(img.dtype)
    wx = (xs - x0).astype(img.dtype)
    h, w = img.shape[1], img.shape[2]
    y0r = _reflect_index(y0, h)
    y1r = _reflect_index(y0 + 1, h)
    x0r = _reflect_index(x0, w)
    x1r = _reflect_index(x0 + 1, w)
    tl = img[:, y0r, x0r]
    tr = img[:, y0r, x1r]
    bl = img[:, y1r, x0r]
    br = img[:, y1r, x1r]
    top = tl + wx * (tr - tl)
    bot = bl + wx * (br - bl)
    return top + wy * (bot - top)


def _sample_nearest(mask: np.ndarray, ys: np.ndarray, xs: np.ndarray) -> np.ndarray:
    yn = _reflect_index(np.rint(ys).astype(np.int64), mask.shape[0])
    xn = _reflect_index(np.rint(xs).astype(np.int64), mask.shape[1])
    return mask[yn, xn]


def conventional_augment(
    image: ImageTensor,
    mask: LabelMask,
    stream: SeedStream,
    config: AugmentConfig | None = None,
) -> tuple[ImageTensor, LabelMask]:
    """Standard geometric + photometric augmentation of an aligned pair.

    Geometric transforms (affine, elastic) are applied as one combined inverse
    warp so image and mask stay aligned (bilinear for the image, nearest for
    the mask). Photometric transforms touch the image only.
    """
    if (image.height, image.width) != (mask.height, mask.width):
        raise InvalidArgument("image and mask dimensions differ")
    cfg = config or AugmentConfig()
    r = cfg.ranges
    h, w = image.height, image.width
    img = image.data
    msk = mask.data

    # --- geometric: build inverse sample coordinates -----------------------
    yy, xx = np.meshgrid(
        np.arange(h, dtype=np.float64), np.arange(w, dtype=np.float64), indexing="ij"
    )
    ys, xs = yy, xx
    geometric = False

    if float(stream.uniform(1)[0]) < cfg.p_affine:
        geometric = True
        lo, hi = r.rotation_degrees
        angle = np.deg2rad(float(stream.uniform(1)[0]) * (hi - lo) + lo)
        lo, hi = r.scale
        scale = float(stream.uniform(1)[0]) * (hi - lo) + lo
        lo, hi = r.translate_frac
        tfrac = stream.uniform(2) * (hi - lo) + lo
        ty, tx = tfrac[0] * h, tfrac[1] * w
        cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
        # inverse of rotate(angle)·scale then translate: undo translate,
        # rotate by -angle, divide by scale
        dy = ys - cy - ty
        dx = xs - cx - tx
        cos_a, sin_a = np.cos(angle), np.sin(angle)
        ys = (cos_a * dy + sin_a * dx) / scale + cy
        xs = (-sin_a * dy + cos_a * dx) / scale + cx

    if float(stream.uniform(1)[0]) < cfg.p_elastic:
        geometric = True
        lat = BsplineLatticeConfig(spacing=r.elastic_spacing)
        field_y = bspline_map(h, w, lat, stream.child("elastic", 0)).values
        field_x = bspline_map(h, w, lat, stream.child("elastic", 1)).values
        amp = r.elastic_amplitude
        ys = ys + (field_y.astype(np.float64) - 0.5) * (2.0 * amp)
        xs = xs + (field_x.astype(np.float64) - 0.5) * (2.0 * amp)

    if geometric:
        img = _sample_bilinear(img, ys, xs)
        msk = _sample_nearest(msk, ys, xs)

    # --- photometric: image only -------------------------------------------
    if float(stream.uniform(1)[0]) < cfg.p_brightness_contrast:
        lo, hi = r.contrast
        a = float(stream.uniform(1)[0]) * (hi - lo) + lo
        lo, hi = r.brightness
        b = float(stream.uniform(1)[0]) * (hi - lo) + lo
        img = img * np.float32(a) + np.float32(b)

    if float(stream.uniform(1)[0]) < cfg.p_gamma:
        lo, hi = r.gamma
        gamma = float(stream.uniform(1)[0]) * (hi - lo) + lo
        mn, mx = float(img.min()), float(img.max())
        if mx > mn:  # power applied on min-max-normalized intensities
            unit = (img - np.float32(mn)) / np.float32(mx - mn)
            img = np.float32(mn) + np.power(unit, np.float32(gamma)) * np.float32(mx - mn)

    if float(stream.uniform(1)[0]) < cfg.p_noise:
        noise = stream.normal(img.size).reshape(img.shape).astype(np.float32)
        img = img + noise * np.float32(r.noise_sigma)

    return ImageTensor(img), LabelMask(classes=mask.classes, data=msk)
