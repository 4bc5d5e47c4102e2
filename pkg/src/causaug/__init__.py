"""causaug: deterministic acquisition-shift augmentation for segmentation.

Randomly-weighted shallow convolutional networks re-texture training images
(GIN), and pairs of such views are blended through low-frequency random maps
(IPA) so that differently-located objects receive independently varying
appearances. A consistency objective ties the two views' predictions
together. Everything is driven by counter-based seed streams, so any output
is a pure function of (master seed, path).
"""

from .config import (
    MapConfig,
    PipelineConfig,
    canonical_json,
    config_hash,
    load_config,
    parse_config,
)
from .errors import (
    CausaugError,
    ConfigError,
    DegenerateTransform,
    InvalidArgument,
    NpyFormatError,
    TrainingDiverged,
)
from .gin import GinConfig, GinTransform, apply_gin, apply_net, gin_pair, sample_gin
from .ingest import (
    AugmentConfig,
    AugmentRanges,
    PreprocSpec,
    VolumeFile,
    conventional_augment,
    load_npy,
    preprocess,
    save_npy,
    save_png_preview,
)
from .ipa import AugPair, augment_sample, ipa_blend
from .objective import (
    LogitsMap,
    LossReport,
    cross_entropy,
    kl_consistency,
    seg_loss,
    soft_dice_loss,
    softmax_probs,
    total_loss,
)
from .pcmap import (
    BsplineLatticeConfig,
    FelzConfig,
    PseudoCorrMap,
    bspline_map,
    constant_map,
    felz_segment,
    superpixel_map,
)
from .streams import SeedStream, draw_gaussian
from .tensor import (
    ImageTensor,
    LabelMask,
    conv2d,
    frobenius_norm,
    resize_bilinear,
)
from .toyeval import (
    SyntheticTask,
    TinySegmenter,
    TrainConfig,
    dice_score,
    evaluate_generalization,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "AugPair", "AugmentConfig", "AugmentRanges", "BsplineLatticeConfig",
    "CausaugError", "ConfigError", "DegenerateTransform", "FelzConfig",
    "GinConfig", "GinTransform", "ImageTensor", "InvalidArgument", "LabelMask",
    "LogitsMap", "LossReport", "MapConfig", "NpyFormatError", "PipelineConfig",
    "PreprocSpec", "PseudoCorrMap", "SeedStream", "SyntheticTask",
    "TinySegmenter", "TrainConfig", "TrainingDiverged", "VolumeFile",
    "apply_gin", "apply_net", "augment_sample", "bspline_map", "canonical_json",
    "config_hash", "constant_map", "conv2d", "conventional_augment",
    "cross_entropy", "dice_score", "draw_gaussian", "evaluate_generalization",
    "felz_segment", "soft_dice_loss",
    "frobenius_norm", "gin_pair", "ipa_blend", "kl_consistency", "load_config",
    "load_npy", "parse_config", "preprocess", "resize_bilinear", "sample_gin",
    "save_npy", "save_png_preview", "seg_loss", "softmax_probs",
    "superpixel_map", "total_loss", "train",
]
