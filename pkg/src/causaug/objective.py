"""Consistency training objective with analytic gradients.

The loss on an augmented pair (view1, view2) with shared labels y is

    total = seg(view1, y) + seg(view2, y) + lambda_div · KL(p1 ‖ p2)

where seg is multi-class cross-entropy plus soft Dice (1:1), p = softmax of
the raw logits, and KL is taken in the written direction (view1 ‖ view2), not
symmetrized. All reductions are per-pixel means so the divergence weight
transfers across image sizes; internal math runs in float64 and gradients are
returned in the logits dtype.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument
from .tensor import LabelMask

PROB_FLOOR = 1e-8  # probabilities are clamped to [PROB_FLOOR, 1] inside logs
DICE_SMOOTH = 1.0
DEFAULT_DIV_WEIGHT = 10.0


@dataclass(frozen=True)
class LogitsMap:
    """K×H×W raw per-class logits."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data)
        if arr.ndim != 3:
            raise InvalidArgument(f"logits must be 3-D K×H×W, got ndim={arr.ndim}")
        if arr.dtype not in (np.float32, np.float64):
            arr = arr.astype(np.float32)
        if not np.isfinite(arr).all():
            raise InvalidArgument("logits contain non-finite values")
        object.__setattr__(self, "data", arr)

    @property
    def classes(self) -> int:
        return self.data.shape[0]

    @property
    def height(self) -> int:
        return self.data.shape[1]

    @property
    def width(self) -> int:
        return self.data.shape[2]


@dataclass(frozen=True)
class LossReport:
    """Loss components for one step; total = seg1 + seg2 + div_weight·kl."""

    total: float
    seg1: float
    seg2: float
    kl: float
    div_weight: float = DEFAULT_DIV_WEIGHT

    def __post_init__(self):
        parts = (self.total, self.seg1, self.seg2, self.kl, self.div_weight)
        if not all(np.isfinite(v) for v in parts):
            raise InvalidArgument(f"non-finite loss components: {parts}")
        if self.seg1 < 0 or self.seg2 < 0:
            raise InvalidArgument("segmentation losses must be >= 0")
        recomputed = self.seg1 + self.seg2 + self.div_weight * self.kl
        if abs(self.total - recomputed) > 1e-6 * max(1.0, abs(recomputed)):
            raise InvalidArgument(
                f"total {self.total} inconsistent with components {recomputed}"
            )

    def to_dict(self) -> dict:
        return {
            "total": self.total,
            "seg1": self.seg1,
            "seg2": self.seg2,
            "kl": self.kl,
            "div_weight": self.div_weight,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LossReport":
        return cls(**{k: float(d[k]) for k in ("total", "seg1", "seg2", "kl", "div_weight")})


def _softmax64(logits: np.ndarray) -> np.ndarray:
    z = logits.astype(np.float64)
    z = z - z.max(axis=0, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=0, keepdims=True)


def softmax_probs(logits: LogitsMap) -> np.ndarray:
    """Per-pixel class probabilities (max-subtracted for stability)."""
    return _softmax64(logits.data).astype(logits.data.dtype)


def _check_pair(logits: LogitsMap, y: LabelMask) -> None:
    if (logits.height, logits.width) != (y.height, y.width):
        raise InvalidArgument(
            f"logits {logits.data.shape} do not align with labels {y.data.shape}"
        )
    if y.classes > logits.classes:
        raise InvalidArgument(
            f"labels declare {y.classes} classes but logits carry {logits.classes}"
        )


def _onehot(y: LabelMask, k: int) -> np.ndarray:
    yy = y.data
    if yy.max() >= k:
        raise InvalidArgument(f"label {yy.max()} out of range for {k} classes")
    h, w = yy.shape
    onehot = np.zeros((k, h, w), dtype=np.float64)
    rows, cols = np.indices((h, w))
    onehot[yy, rows, cols] = 1.0
    return onehot


def cross_entropy(logits: LogitsMap, y: LabelMask) -> tuple[float, np.ndarray]:
    """Per-pixel mean of −log p(true class), with its logit gradient."""
    _check_pair(logits, y)
    k, h, w = logits.data.shape
    p = _softmax64(logits.data)
    onehot = _onehot(y, k)
    rows, cols = np.indices((h, w))
    ce = float(-np.mean(np.log(np.maximum(p[y.data, rows, cols], PROB_FLOOR))))
    grad = (p - onehot) / (h * w)
    return ce, grad.astype(logits.data.dtype)


def soft_dice_loss(
    logits: LogitsMap, y: LabelMask, include_background: bool = True
) -> tuple[float, np.ndarray]:
    """1 − class-mean soft Dice with smoothing 1, with its logit gradient.

    Soft Dice for class c is (2·Σ p_c·y_c + s) / (Σ p_c + Σ y_c + s).
    """
    _check_pair(logits, y)
    k = logits.data.shape[0]
    p = _softmax64(logits.data)
    onehot = _onehot(y, k)
    first = 0 if include_background else 1
    n_cls = k - first
    dice_sum = 0.0
    dgrad_p = np.zeros_like(p)
    for c in range(first, k):
        num = 2.0 * float(np.sum(p[c] * onehot[c])) + DICE_SMOOTH
        den = float(np.sum(p[c]) + np.sum(onehot[c])) + DICE_SMOOTH
        dice_sum += num / den
        # d(dice_c)/d(p_c(q)) = (2 y_c(q) den - num) / den^2; loss gets -mean
        dgrad_p[c] = -(2.0 * onehot[c] * den - num) / (den * den * n_cls)
    loss = 1.0 - dice_sum / n_cls
    # chain through softmax: dl_m = p_m (g_m - sum_c g_c p_c)
    grad = p * (dgrad_p - np.sum(dgrad_p * p, axis=0, keepdims=True))
    return loss, grad.astype(logits.data.dtype)


def seg_loss(
    logits: LogitsMap, y: LabelMask, include_background: bool = True
) -> tuple[float, np.ndarray]:
    """Cross-entropy plus soft Dice (1:1), with the gradient w.r.t. the logits."""
    ce, g_ce = cross_entropy(logits, y)
    dice, g_dice = soft_dice_loss(logits, y, include_background)
    return ce + dice, g_ce + g_dice


def kl_consistency(
    logits_i: LogitsMap, logits_j: LogitsMap
) -> tuple[float, np.ndarray, np.ndarray]:
    """Mean per-pixel KL(p_i ‖ p_j) with gradients w.r.t. both logits."""
    if logits_i.data.shape != logits_j.data.shape:
        raise InvalidArgument(
            f"logit shapes differ: {logits_i.data.shape} vs {logits_j.data.shape}"
        )
    _, h, w = logits_i.data.shape
    n_pix = h * w
    pi = _softmax64(logits_i.data)
    pj = _softmax64(logits_j.data)
    log_pi = np.log(np.clip(pi, PROB_FLOOR, 1.0))
    log_pj = np.log(np.clip(pj, PROB_FLOOR, 1.0))
    per_class = pi * (log_pi - log_pj)
    kl_map = per_class.sum(axis=0)  # [h, w]
    kl = float(kl_map.mean())
    grad_i = (pi * ((log_pi - log_pj) - kl_map[None, :, :])) / n_pix
    grad_j = (pj - pi) / n_pix
    return kl, grad_i.astype(logits_i.data.dtype), grad_j.astype(logits_j.data.dtype)


def total_loss(
    logits1: LogitsMap,
    logits2: LogitsMap,
    y: LabelMask,
    div_weight: float = DEFAULT_DIV_WEIGHT,
) -> tuple[LossReport, np.ndarray, np.ndarray]:
    """Full objective; returns the report and gradients for both views."""
    s1, g1 = seg_loss(logits1, y)
    s2, g2 = seg_loss(logits2, y)
    kl, ki, kj = kl_consistency(logits1, logits2)
    dw = logits1.data.dtype.type(div_weight)
    report = LossReport(
        total=s1 + s2 + float(div_weight) * kl,
        seg1=s1,
        seg2=s2,
        kl=kl,
        div_weight=float(div_weight),
    )
    return report, g1 + dw * ki, g2 + dw * kj
