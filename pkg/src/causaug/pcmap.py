"""Pseudo-correlation maps: low-frequency scalar fields in [0,1].

Two generators are provided. The default interpolates a lattice of
uniformly-random control points with uniform cubic B-spline kernels, giving a
smooth field whose finest structure is the lattice spacing (default one
quarter of the image side, which avoids introducing large image gradients).
The alternative assigns an independent uniform value to each superpixel of a
graph-based segmentation of the image, giving a piecewise-constant field.

Both constructions are convex combinations of values in [0,1], so the range
invariant holds exactly and is asserted at the boundary.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument
from .streams import SeedStream
from .tensor import ImageTensor, conv2d_raw

# control points kept beyond each lattice border; cubic support needs at most
# one before and two after the pixel span, three keeps the indexing uniform
LATTICE_PAD = 3


@dataclass(frozen=True)
class BsplineLatticeConfig:
    """Lattice geometry. ``spacing=None`` derives floor(min(H,W)/4) per image."""

    spacing: int | None = None

    def __post_init__(self):
        if self.spacing is not None and self.spacing < 2:
            raise InvalidArgument("lattice spacing must be >= 2 pixels")

    def resolve_spacing(self, h: int, w: int) -> int:
        if self.spacing is not None:
            return self.spacing
        return max(2, min(h, w) // 4)


@dataclass(frozen=True)
class FelzConfig:
    """Graph-segmentation knobs; scale is on 0-255 rescaled intensities."""

    scale: float = 100.0
    min_size: int = 50
    sigma: float = 0.8

    def __post_init__(self):
        if self.scale <= 0:
            raise InvalidArgument("scale must be > 0")
        if self.min_size < 1:
            raise InvalidArgument("min_size must be >= 1")
        if self.sigma < 0:
            raise InvalidArgument("sigma must be >= 0")


@dataclass(frozen=True)
class PseudoCorrMap:
    """H×W scalar field with every value in [0,1]."""

    values: np.ndarray
    origin: str  # bspline | superpixel | constant

    def __post_init__(self):
        arr = np.asarray(self.values)
        if arr.ndim != 2:
            raise InvalidArgument(f"map must be 2-D, got ndim={arr.ndim}")
        arr = np.ascontiguousarray(arr.astype(np.float32))
        if not np.isfinite(arr).all():
            raise InvalidArgument("map contains non-finite values")
        lo, hi = float(arr.min()), float(arr.max())
        if lo < 0.0 or hi > 1.0:
            raise InvalidArgument(f"map values must lie in [0,1], got [{lo}, {hi}]")
        if self.origin not in ("bspline", "superpixel", "constant"):
            raise InvalidArgument(f"unknown map origin {self.origin!r}")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]


def bspline_basis(t: np.ndarray) -> np.ndarray:
    """The four uniform cubic B-spline basis weights at fractional offset t.

    Returns shape ``t.shape + (4,)``; the weights are nonnegative and sum to 1
    (partition of unity), so interpolated values stay inside the control-value
    range.
    """
    t = np.asarray(t, dtype=np.float64)
    one = 1.0 - t
    b0 = one * one * one / 6.0
    b1 = (3.0 * t**3 - 6.0 * t**2 + 4.0) / 6.0
    b2 = (-3.0 * t**3 + 3.0 * t**2 + 3.0 * t + 1.0) / 6.0
    b3 = t**3 / 6.0
    return np.stack([b0, b1, b2, b3], axis=-1)


def _lattice_axis(n_pixels: int, spacing: int) -> tuple[np.ndarray, np.ndarray, int]:
    """Cell index, basis weights and control-point count along one axis."""
    coords = np.arange(n_pixels, dtype=np.float64) / spacing
    cell = np.floor(coords).astype(np.intp)
    frac = coords - cell
    n_ctrl = int(cell[-1]) + 2 * LATTICE_PAD + 1
    return cell, bspline_basis(frac), n_ctrl


def evaluate_bspline_lattice(
    control: np.ndarray, spacing: int, h: int, w: int
) -> np.ndarray:
    """Interpolate a (padded) control-point grid to an h×w field (float64).

    ``control`` has shape [n_cy, n_cx] laid out so the point influencing pixel
    (0,0) as its cell origin sits at index LATTICE_PAD; pixel (y,x) reads the
    16 points around its cell, weighted by the outer product of the 1-D bases.
    """
    cy, by, n_cy = _lattice_axis(h, spacing)
    cx, bx, n_cx = _lattice_axis(w, spacing)
    if control.shape != (n_cy, n_cx):
        raise InvalidArgument(
            f"control grid shape {control.shape} does not match required "
            f"({n_cy}, {n_cx}) for {h}x{w} at spacing {spacing}"
        )
    out = np.zeros((h, w), dtype=np.float64)
    row0 = cy + (LATTICE_PAD - 1)  # array row of basis index m=0
    col0 = cx + (LATTICE_PAD - 1)
    for m in range(4):
        rows = control[row0 + m]  # [h, n_cx]
        for n in range(4):
            out += (by[:, m][:, None] * bx[:, n][None, :]) * rows[:, col0 + n]
    return out


def bspline_map(
    h: int, w: int, config: BsplineLatticeConfig, stream: SeedStream
) -> PseudoCorrMap:
    """Smooth random field from U(0,1) control points on a regular lattice."""
    if h < 1 or w < 1:
        raise InvalidArgument("map dimensions must be >= 1")
    spacing = config.resolve_spacing(h, w)
    _, _, n_cy = _lattice_axis(h, spacing)
    _, _, n_cx = _lattice_axis(w, spacing)
    control = stream.uniform(n_cy * n_cx).reshape(n_cy, n_cx)
    field = evaluate_bspline_lattice(control, spacing, h, w)
    return PseudoCorrMap(values=field.astype(np.float32), origin="bspline")


def constant_map(h: int, w: int, value: float) -> PseudoCorrMap:
    """Uniform map; value must lie in [0,1]."""
    if not 0.0 <= value <= 1.0:
        raise InvalidArgument(f"constant map value must lie in [0,1], got {value}")
    return PseudoCorrMap(
        values=np.full((h, w), value, dtype=np.float32), origin="constant"
    )


# ---------------------------------------------------------------------------
# graph-based segmentation (greedy merge over sorted edges, union-find)
# ---------------------------------------------------------------------------


def grid_edges(h: int, w: int) -> tuple[np.ndarray, np.ndarray]:
    """4-connected grid edges as (a, b) node-index arrays.

    Order is part of the determinism contract: all rightward edges in
    row-major order, then all downward edges in row-major order.
    """
    idx = np.arange(h * w, dtype=np.int64).reshape(h, w)
    right = np.stack([idx[:, :-1].ravel(), idx[:, 1:].ravel()], axis=1)
    down = np.stack([idx[:-1, :].ravel(), idx[1:, :].ravel()], axis=1)
    return np.concatenate([right[:, 0], down[:, 0]]), np.concatenate(
        [right[:, 1], down[:, 1]]
    )


def segment_from_costs(
    h: int, w: int, costs: np.ndarray, k: float, min_size: int
) -> np.ndarray:
    """Greedy graph merge with adaptive threshold, then small-segment cleanup.

    ``costs`` is aligned with :func:`grid_edges`. Components a, b joined by an
    edge of weight c merge when c ≤ min(Int(a)+k/|a|, Int(b)+k/|b|) where Int
    is the largest weight merged inside the component so far. A second pass in
    the same edge order absorbs components smaller than ``min_size``. Returns
    row-major-canonical labels (first segment encountered is 0).
    """
    n = h * w
    ea, eb = grid_edges(h, w)
    order = np.argsort(costs, kind="stable")
    parent = np.arange(n, dtype=np.int64)
    size = np.ones(n, dtype=np.int64)
    threshold = np.full(n, float(k), dtype=np.float64)

    def find(x: int) -> int:
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    for ei in order:
        a, b = find(ea[ei]), find(eb[ei])
        if a == b:
            continue
        c = float(costs[ei])
        if c <= threshold[a] and c <= threshold[b]:
            parent[b] = a
            size[a] += size[b]
            threshold[a] = c + k / size[a]

    for ei in order:
        a, b = find(ea[ei]), find(eb[ei])
        if a != b and (size[a] < min_size or size[b] < min_size):
            parent[b] = a
            size[a] += size[b]

    labels = np.empty(n, dtype=np.int32)
    first_seen: dict[int, int] = {}
    for i in range(n):
        labels[i] = first_seen.setdefault(find(i), len(first_seen))
    return labels.reshape(h, w)


def felz_segment(image: np.ndarray, k: float, min_size: int) -> np.ndarray:
    """Segment a 2-D intensity image; edge weight is |intensity difference|."""
    img = np.asarray(image, dtype=np.float64)
    if img.ndim != 2:
        raise InvalidArgument("felz_segment expects a 2-D intensity image")
    h, w = img.shape
    ea, eb = grid_edges(h, w)
    flat = img.ravel()
    costs = np.abs(flat[ea] - flat[eb])
    return segment_from_costs(h, w, costs, k, min_size)


def _gaussian_kernel2d(sigma: float) -> np.ndarray:
    radius = max(1, int(round(3.0 * sigma)))
    xs = np.arange(-radius, radius + 1, dtype=np.float64)
    g = np.exp(-(xs**2) / (2.0 * sigma * sigma))
    g /= g.sum()
    return np.outer(g, g)


def superpixel_map(
    image: ImageTensor, config: FelzConfig, stream: SeedStream
) -> PseudoCorrMap:
    """Random-valued superpixels of the image, one U(0,1) value per segment.

    The image is min-max rescaled to 0-255 (so ``scale`` behaves consistently
    across inputs), optionally Gaussian-smoothed, segmented on 4-connected
    edges with multi-channel Euclidean weights, and each segment receives an
    independent uniform value in segment-label order.
    """
    arr = image.data.astype(np.float64)
    lo, hi = arr.min(), arr.max()
    if hi > lo:
        arr = (arr - lo) * (255.0 / (hi - lo))
    else:
        arr = np.zeros_like(arr)
    if config.sigma > 0:
        kern = _gaussian_kernel2d(config.sigma)[None, None, :, :]
        arr = np.concatenate(
            [conv2d_raw(arr[c : c + 1], kern) for c in range(arr.shape[0])]
        )
    h, w = arr.shape[1], arr.shape[2]
    ea, eb = grid_edges(h, w)
    flat = arr.reshape(arr.shape[0], -1)
    diff = flat[:, ea] - flat[:, eb]
    costs = np.sqrt(np.sum(diff * diff, axis=0))
    labels = segment_from_costs(h, w, costs, config.scale, config.min_size)
    n_segments = int(labels.max()) + 1
    seg_values = stream.uniform(n_segments)
    return PseudoCorrMap(
        values=seg_values[labels].astype(np.float32), origin="superpixel"
    )
