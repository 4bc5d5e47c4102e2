"""Pipeline configuration: strict JSON parsing and canonical hashing.

Unknown keys are rejected everywhere (a typo'd hyperparameter must fail
loudly, not silently fall back to a default). The config hash is the SHA-256
of the canonical JSON form (sorted keys, minimal separators) and is recorded
in every output sidecar, so tampered or drifted configs are detectable.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError
from .gin import GinConfig
from .ingest import AugmentConfig, AugmentRanges, PreprocSpec
from .pcmap import BsplineLatticeConfig, FelzConfig

MAP_KINDS = ("bspline", "superpixel")


@dataclass(frozen=True)
class MapConfig:
    kind: str = "bspline"
    bspline: BsplineLatticeConfig = field(default_factory=BsplineLatticeConfig)
    felz: FelzConfig = field(default_factory=FelzConfig)

    def __post_init__(self):
        if self.kind not in MAP_KINDS:
            raise ConfigError(f"map.kind must be one of {MAP_KINDS}, got {self.kind!r}")


@dataclass(frozen=True)
class PipelineConfig:
    preprocessing: PreprocSpec = field(default_factory=PreprocSpec)
    augment: AugmentConfig = field(default_factory=AugmentConfig.identity)
    gin: GinConfig = field(default_factory=GinConfig)
    map_config: MapConfig = field(default_factory=MapConfig)
    ipa_enabled: bool = True
    seed: int = 0


def _require_keys(d: dict, allowed: set[str], where: str) -> None:
    unknown = set(d) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) {sorted(unknown)} in {where}; allowed: {sorted(allowed)}")


def _get(d: dict, key: str, default):
    return d[key] if key in d else default


def _parse_pair(v, where: str) -> tuple[float, float]:
    if not isinstance(v, (list, tuple)) or len(v) != 2:
        raise ConfigError(f"{where} must be a [low, high] pair, got {v!r}")
    return (float(v[0]), float(v[1]))


def _parse_ranges(d: dict) -> AugmentRanges:
    allowed = {
        "rotation_degrees", "scale", "translate_frac", "elastic_spacing",
        "elastic_amplitude", "brightness", "contrast", "gamma", "noise_sigma",
    }
    _require_keys(d, allowed, "preprocessing.augment.ranges")
    base = AugmentRanges()
    return AugmentRanges(
        rotation_degrees=_parse_pair(d["rotation_degrees"], "rotation_degrees")
        if "rotation_degrees" in d else base.rotation_degrees,
        scale=_parse_pair(d["scale"], "scale") if "scale" in d else base.scale,
        translate_frac=_parse_pair(d["translate_frac"], "translate_frac")
        if "translate_frac" in d else base.translate_frac,
        elastic_spacing=int(d["elastic_spacing"]) if d.get("elastic_spacing") is not None
        else None if "elastic_spacing" in d else base.elastic_spacing,
        elastic_amplitude=float(_get(d, "elastic_amplitude", base.elastic_amplitude)),
        brightness=_parse_pair(d["brightness"], "brightness") if "brightness" in d else base.brightness,
        contrast=_parse_pair(d["contrast"], "contrast") if "contrast" in d else base.contrast,
        gamma=_parse_pair(d["gamma"], "gamma") if "gamma" in d else base.gamma,
        noise_sigma=float(_get(d, "noise_sigma", base.noise_sigma)),
    )


def _parse_augment(d: dict) -> AugmentConfig:
    allowed = {"p_affine", "p_elastic", "p_brightness_contrast", "p_gamma", "p_noise", "ranges"}
    _require_keys(d, allowed, "preprocessing.augment")
    base = AugmentConfig.identity()
    return AugmentConfig(
        p_affine=float(_get(d, "p_affine", base.p_affine)),
        p_elastic=float(_get(d, "p_elastic", base.p_elastic)),
        p_brightness_contrast=float(_get(d, "p_brightness_contrast", base.p_brightness_contrast)),
        p_gamma=float(_get(d, "p_gamma", base.p_gamma)),
        p_noise=float(_get(d, "p_noise", base.p_noise)),
        ranges=_parse_ranges(d["ranges"]) if "ranges" in d else AugmentRanges(),
    )


def _parse_preprocessing(d: dict) -> tuple[PreprocSpec, AugmentConfig]:
    allowed = {"window", "clip_top_percent", "normalize", "target_size", "augment"}
    _require_keys(d, allowed, "preprocessing")
    window = d.get("window")
    if window is not None:
        window = _parse_pair(window, "preprocessing.window")
    ts = d.get("target_size", (192, 192))
    if not isinstance(ts, (list, tuple)) or len(ts) != 2:
        raise ConfigError(f"preprocessing.target_size must be [H, W], got {ts!r}")
    spec = PreprocSpec(
        window=window,
        clip_top_percent=float(_get(d, "clip_top_percent", 0.005)),
        normalize=bool(_get(d, "normalize", True)),
        target_size=(int(ts[0]), int(ts[1])),
    )
    augment = _parse_augment(d["augment"]) if "augment" in d else AugmentConfig.identity()
    return spec, augment


def _parse_gin(d: dict) -> GinConfig:
    allowed = {"n_layers", "hidden_channels", "kernel_size", "leaky_slope"}
    _require_keys(d, allowed, "gin")
    base = GinConfig()
    return GinConfig(
        n_layers=int(_get(d, "n_layers", base.n_layers)),
        hidden_channels=int(_get(d, "hidden_channels", base.hidden_channels)),
        kernel_size=int(_get(d, "kernel_size", base.kernel_size)),
        leaky_slope=float(_get(d, "leaky_slope", base.leaky_slope)),
    )


def _parse_map(d: dict) -> MapConfig:
    allowed = {"kind", "spacing", "felz"}
    _require_keys(d, allowed, "map")
    felz = FelzConfig()
    if "felz" in d:
        fd = d["felz"]
        _require_keys(fd, {"scale", "min_size", "sigma"}, "map.felz")
        felz = FelzConfig(
            scale=float(_get(fd, "scale", felz.scale)),
            min_size=int(_get(fd, "min_size", felz.min_size)),
            sigma=float(_get(fd, "sigma", felz.sigma)),
        )
    spacing = d.get("spacing")
    return MapConfig(
        kind=str(_get(d, "kind", "bspline")),
        bspline=BsplineLatticeConfig(spacing=int(spacing) if spacing is not None else None),
        felz=felz,
    )


def parse_config(data: dict) -> PipelineConfig:
    """Build a validated PipelineConfig from a JSON-style dict."""
    if not isinstance(data, dict):
        raise ConfigError(f"config root must be an object, got {type(data).__name__}")
    allowed = {"preprocessing", "gin", "map", "ipa_enabled", "seed"}
    _require_keys(data, allowed, "config root")
    try:
        preproc, augment = (
            _parse_preprocessing(data["preprocessing"]) if "preprocessing" in data
            else (PreprocSpec(), AugmentConfig.identity())
        )
        return PipelineConfig(
            preprocessing=preproc,
            augment=augment,
            gin=_parse_gin(data.get("gin", {})),
            map_config=_parse_map(data.get("map", {})),
            ipa_enabled=bool(data.get("ipa_enabled", True)),
            seed=int(data.get("seed", 0)),
        )
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path: str | Path) -> PipelineConfig:
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    return parse_config(data)


def config_to_dict(cfg: PipelineConfig) -> dict:
    """Canonical dict form (every field explicit, fixed key order via sort)."""
    p = cfg.preprocessing
    a = cfg.augment
    r = a.ranges
    return {
        "preprocessing": {
            "window": list(p.window) if p.window is not None else None,
            "clip_top_percent": p.clip_top_percent,
            "normalize": p.normalize,
            "target_size": list(p.target_size),
            "augment": {
                "p_affine": a.p_affine,
                "p_elastic": a.p_elastic,
                "p_brightness_contrast": a.p_brightness_contrast,
                "p_gamma": a.p_gamma,
                "p_noise": a.p_noise,
                "ranges": {
                    "rotation_degrees": list(r.rotation_degrees),
                    "scale": list(r.scale),
                    "translate_frac": list(r.translate_frac),
                    "elastic_spacing": r.elastic_spacing,
                    "elastic_amplitude": r.elastic_amplitude,
                    "brightness": list(r.brightness),
                    "contrast": list(r.contrast),
                    "gamma": list(r.gamma),
                    "noise_sigma": r.noise_sigma,
                },
            },
        },
        "gin": {
            "n_layers": cfg.gin.n_layers,
            "hidden_channels": cfg.gin.hidden_channels,
            "kernel_size": cfg.gin.kernel_size,
            "leaky_slope": cfg.gin.leaky_slope,
        },
        "map": {
            "kind": cfg.map_config.kind,
            "spacing": cfg.map_config.bspline.spacing,
            "felz": {
                "scale": cfg.map_config.felz.scale,
                "min_size": cfg.map_config.felz.min_size,
                "sigma": cfg.map_config.felz.sigma,
            },
        },
        "ipa_enabled": cfg.ipa_enabled,
        "seed": cfg.seed,
    }


def canonical_json(cfg: PipelineConfig) -> str:
    return json.dumps(config_to_dict(cfg), sort_keys=True, separators=(",", ":"))


def config_hash(cfg: PipelineConfig) -> str:
    return hashlib.sha256(canonical_json(cfg).encode("utf-8")).hexdigest()
