"""Fingerprint sample quality gating and best-of-N selection."""

from __future__ import annotations

import csv
import io
import subprocess
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from PIL import Image
from scipy.ndimage import sobel

from .config import PipelineConfig
from .enhancement import FingerprintImage
from .errors import NoCandidates, TooSmall, TouchprintError

SHARPNESS_WINDOW = 32

# external scorers are not assumed reentrant
_EXTERNAL_LOCK = threading.Lock()


@dataclass(frozen=True)
class QualityReport:
    sharpness: float
    size_ok: bool
    composite: int
    passed: bool


def _gradient_magnitudes(fp: FingerprintImage) -> np.ndarray:
    gray = fp.gray
    h, w = gray.shape
    if h < SHARPNESS_WINDOW or w < SHARPNESS_WINDOW:
        raise TooSmall(
            f"{w}x{h} image cannot hold a {SHARPNESS_WINDOW}px sharpness window"
        )
    y0 = (h - SHARPNESS_WINDOW) // 2
    x0 = (w - SHARPNESS_WINDOW) // 2
    win = gray[y0 : y0 + SHARPNESS_WINDOW, x0 : x0 + SHARPNESS_WINDOW]
    win = win.astype(np.float64)
    gx = sobel(win, axis=1, mode="reflect")
    gy = sobel(win, axis=0, mode="reflect")
    # the kernel has gain 4; rescale so a full-range step lands near 255
    return np.hypot(gx, gy) / 4.0


def sharpness_score(fp: FingerprintImage, cfg: PipelineConfig) -> float:
    """Fraction of the centered window whose gradient magnitude clears grad_min."""
    mag = _gradient_magnitudes(fp)
    return float((mag > cfg.quality.grad_min).mean())


def sharpness_histogram(fp: FingerprintImage) -> np.ndarray:
    """256-bin histogram of the windowed gradient magnitudes, for debugging."""
    mag = np.clip(np.rint(_gradient_magnitudes(fp)), 0, 255).astype(np.int64)
    return np.bincount(mag.ravel(), minlength=256)


def dump_sharpness_histogram(fp: FingerprintImage, path: str | Path) -> None:
    hist = sharpness_histogram(fp)
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["magnitude", "count"])
        for value, count in enumerate(hist):
            w.writerow([value, int(count)])


def check_size(fp: FingerprintImage, cfg: PipelineConfig) -> bool:
    """Pre-normalization ROI must be tall enough and cover enough pixels."""
    return (
        fp.roi_size[0] >= cfg.quality.min_roi_height
        and fp.roi_area >= cfg.quality.min_roi_area
    )


def _external_score(fp: FingerprintImage, cmd: str) -> int:
    buf = io.BytesIO()
    Image.fromarray(fp.gray).save(buf, format="PNG")
    with _EXTERNAL_LOCK:
        proc = subprocess.run(
            cmd, shell=True, input=buf.getvalue(), stdout=subprocess.PIPE
        )
    if proc.returncode != 0:
        raise TouchprintError(f"external scorer exited {proc.returncode}")
    try:
        return max(0, min(100, int(proc.stdout.strip())))
    except ValueError:
        raise TouchprintError("external scorer produced a non-integer score")


def quality_score(fp: FingerprintImage, fill: float, cfg: PipelineConfig) -> int:
    """0-100 composite of sharpness, ROI contrast, and fill fraction.

    When quality.external_cmd is set the composite is delegated to that
    command (PNG on stdin, integer score on stdout).
    """
    if cfg.quality.external_cmd is not None:
        return _external_score(fp, cfg.quality.external_cmd)
    try:
        s = sharpness_score(fp, cfg)
    except TooSmall:
        s = 0.0
    inside = fp.gray[fp.roi]
    c = min(float(inside.std()) / 64.0, 1.0) if inside.size else 0.0
    return int(round(100.0 * (0.4 * s + 0.4 * c + 0.2 * fill)))


def assess_quality(fp: FingerprintImage, cfg: PipelineConfig) -> QualityReport:
    """Full gate: sharpness and size checks decide pass/fail; composite ranks."""
    try:
        sharp = sharpness_score(fp, cfg)
    except TooSmall:
        sharp = 0.0
    size_ok = check_size(fp, cfg)
    composite = quality_score(fp, float(fp.roi.mean()), cfg)
    return QualityReport(
        sharpness=sharp,
        size_ok=size_ok,
        composite=composite,
        passed=sharp >= cfg.quality.sharp_min and size_ok,
    )


def select_best(
    candidates: Sequence[tuple[FingerprintImage, QualityReport]],
) -> int:
    """Index of the highest composite; ties go to the earliest candidate."""
    if not candidates:
        raise NoCandidates("no candidates to choose from")
    best = 0
    for i in range(1, len(candidates)):
        if candidates[i][1].composite > candidates[best][1].composite:
            best = i
    return best
