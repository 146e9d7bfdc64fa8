"""Pipeline configuration: defaults, JSON loading, dotted-key overrides, validation.

All tunables live in one frozen dataclass tree so every stage receives the
same immutable config object. Keys mirror the section names used by the CLI
JSON file (segmentation.*, geometry.*, ...). Unknown keys are rejected.
"""

from __future__ import annotations

import dataclasses
import json
import math
import os
from dataclasses import dataclass, field
from typing import Any

from .errors import ConfigError

ENV_CONFIG_PATH = "TOUCHPRINT_CONFIG"


@dataclass(frozen=True)
class SegmentationConfig:
    # component dominance and plausibility bounds, fractions of frame area
    min_component_fraction: float = 0.02
    min_fill: float = 0.10
    max_fill: float = 0.90
    aspect_min: float = 0.15
    aspect_max: float = 8.0
    fill_ratio_min: float = 0.3
    # absolute skin prior, used only when a stretched channel is constant
    cr_skin_min: int = 135
    cr_skin_max: int = 185
    hue_skin_halfwidth: int = 35


@dataclass(frozen=True)
class GeometryConfig:
    trim_step: float = 0.04
    max_trim: float = 0.60
    expected_fingers: int = 4


@dataclass(frozen=True)
class EnhancementConfig:
    clahe_clip: float = 2.0
    clahe_tiles: int = 8
    border_px: int = 15
    norm_width: int = 300


@dataclass(frozen=True)
class QualityConfig:
    grad_min: float = 48.0
    sharp_min: float = 0.05
    min_roi_height: int = 240
    min_roi_area: int = 50000
    external_cmd: str | None = None


@dataclass(frozen=True)
class MinutiaeConfig:
    block_size: int = 16
    border_px: int = 15
    merge_px: float = 6.0
    max_count: int = 1024


@dataclass(frozen=True)
class MatcherConfig:
    root_limit: int = 64
    dist_tol: float = 15.0
    angle_tol: float = math.pi / 8


@dataclass(frozen=True)
class FusionConfig:
    rule: str = "mean"


@dataclass(frozen=True)
class CaptureConfig:
    samples_per_finger: int = 5
    max_frames: int = 300


@dataclass(frozen=True)
class PipelineConfig:
    segmentation: SegmentationConfig = field(default_factory=SegmentationConfig)
    geometry: GeometryConfig = field(default_factory=GeometryConfig)
    enhancement: EnhancementConfig = field(default_factory=EnhancementConfig)
    quality: QualityConfig = field(default_factory=QualityConfig)
    minutiae: MinutiaeConfig = field(default_factory=MinutiaeConfig)
    matcher: MatcherConfig = field(default_factory=MatcherConfig)
    fusion: FusionConfig = field(default_factory=FusionConfig)
    capture: CaptureConfig = field(default_factory=CaptureConfig)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def validate(self) -> "PipelineConfig":
        s, g, e, q = self.segmentation, self.geometry, self.enhancement, self.quality
        mi, ma, fu, ca = self.minutiae, self.matcher, self.fusion, self.capture
        _in(s.min_component_fraction, 0.0, 1.0, "segmentation.min_component_fraction")
        _in(s.min_fill, 0.0, 1.0, "segmentation.min_fill")
        _in(s.max_fill, 0.0, 1.0, "segmentation.max_fill")
        if s.min_fill > s.max_fill:
            raise ConfigError("segmentation.min_fill must not exceed max_fill")
        if not 0 < s.aspect_min <= s.aspect_max:
            raise ConfigError("segmentation aspect bounds must satisfy 0 < min <= max")
        _in(s.fill_ratio_min, 0.0, 1.0, "segmentation.fill_ratio_min")
        _in(s.cr_skin_min, 0, 255, "segmentation.cr_skin_min")
        _in(s.cr_skin_max, 0, 255, "segmentation.cr_skin_max")
        _in(s.hue_skin_halfwidth, 0, 128, "segmentation.hue_skin_halfwidth")
        if not 0 < g.trim_step <= 1:
            raise ConfigError("geometry.trim_step must be in (0, 1]")
        _in(g.max_trim, 0.0, 1.0, "geometry.max_trim")
        _in(g.expected_fingers, 1, 8, "geometry.expected_fingers")
        if e.clahe_clip < 1.0:
            raise ConfigError("enhancement.clahe_clip must be >= 1.0")
        if e.clahe_tiles < 1:
            raise ConfigError("enhancement.clahe_tiles must be >= 1")
        if e.border_px < 0:
            raise ConfigError("enhancement.border_px must be >= 0")
        if e.norm_width < 1:
            raise ConfigError("enhancement.norm_width must be >= 1")
        if q.grad_min < 0:
            raise ConfigError("quality.grad_min must be >= 0")
        _in(q.sharp_min, 0.0, 1.0, "quality.sharp_min")
        if q.min_roi_height < 0 or q.min_roi_area < 0:
            raise ConfigError("quality size thresholds must be >= 0")
        if q.external_cmd is not None and not isinstance(q.external_cmd, str):
            raise ConfigError("quality.external_cmd must be a string or null")
        if mi.block_size < 2:
            raise ConfigError("minutiae.block_size must be >= 2")
        if mi.border_px < 0 or mi.merge_px < 0:
            raise ConfigError("minutiae pruning distances must be >= 0")
        _in(mi.max_count, 1, 1024, "minutiae.max_count")
        if ma.root_limit < 1:
            raise ConfigError("matcher.root_limit must be >= 1")
        if ma.dist_tol <= 0:
            raise ConfigError("matcher.dist_tol must be > 0")
        if not 0 < ma.angle_tol <= math.pi:
            raise ConfigError("matcher.angle_tol must be in (0, pi]")
        if fu.rule not in ("mean", "max", "sum-normalized"):
            raise ConfigError(f"fusion.rule {fu.rule!r} not one of mean/max/sum-normalized")
        if ca.samples_per_finger < 1:
            raise ConfigError("capture.samples_per_finger must be >= 1")
        if ca.max_frames < 1:
            raise ConfigError("capture.max_frames must be >= 1")
        return self


def _in(value, lo, hi, key: str) -> None:
    if not lo <= value <= hi:
        raise ConfigError(f"{key} must be in [{lo}, {hi}], got {value}")


_SECTIONS = {f.name: f.type for f in dataclasses.fields(PipelineConfig)}


def config_from_dict(data: dict) -> PipelineConfig:
    """Build a validated config from a nested dict, rejecting unknown keys."""
    if not isinstance(data, dict):
        raise ConfigError("config root must be a JSON object")
    sections = {}
    for name, value in data.items():
        if name not in _SECTIONS:
            raise ConfigError(f"unknown config section {name!r}")
        cls = type(getattr(PipelineConfig(), name))
        known = {f.name: f for f in dataclasses.fields(cls)}
        if not isinstance(value, dict):
            raise ConfigError(f"config section {name!r} must be an object")
        kwargs = {}
        for k, v in value.items():
            if k not in known:
                raise ConfigError(f"unknown config key {name}.{k}")
            kwargs[k] = _coerce(v, name, k)
        sections[name] = cls(**kwargs)
    return PipelineConfig(**sections).validate()


def _coerce(value: Any, section: str, key: str) -> Any:
    defaults = getattr(PipelineConfig(), section)
    current = getattr(defaults, key)
    if current is None or value is None:
        return value
    if isinstance(current, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{section}.{key} must be a boolean")
        return value
    if isinstance(current, int) and not isinstance(current, bool):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{section}.{key} must be a number")
        if float(value) != int(value):
            raise ConfigError(f"{section}.{key} must be an integer")
        return int(value)
    if isinstance(current, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{section}.{key} must be a number")
        return float(value)
    if isinstance(current, str):
        if not isinstance(value, str):
            raise ConfigError(f"{section}.{key} must be a string")
        return value
    return value


def apply_overrides(cfg: PipelineConfig, pairs: list[str]) -> PipelineConfig:
    """Apply --set style 'section.key=value' overrides on top of cfg."""
    data = cfg.to_dict()
    for pair in pairs:
        if "=" not in pair:
            raise ConfigError(f"override {pair!r} is not of the form key=value")
        key, raw = pair.split("=", 1)
        parts = key.strip().split(".")
        if len(parts) != 2:
            raise ConfigError(f"override key {key!r} must be section.key")
        section, name = parts
        if section not in data or name not in data.get(section, {}):
            raise ConfigError(f"unknown config key {key!r}")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        data[section][name] = value
    return config_from_dict(data)


def load_config(path: str | None = None, overrides: list[str] | None = None) -> PipelineConfig:
    """Resolve the effective config: file (or TOUCHPRINT_CONFIG), then --set overrides."""
    if path is None:
        path = os.environ.get(ENV_CONFIG_PATH) or None
    if path is not None:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                data = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
        cfg = config_from_dict(data)
    else:
        cfg = PipelineConfig()
    if overrides:
        cfg = apply_overrides(cfg, list(overrides))
    return cfg.validate()


DEFAULT_CONFIG = PipelineConfig()
