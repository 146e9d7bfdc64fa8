"""Shared fixtures and small builders for the suite."""

from __future__ import annotations

import numpy as np
import pytest

from touchprint.config import DEFAULT_CONFIG, apply_overrides
from touchprint.enhancement import FingerprintImage


@pytest.fixture
def cfg():
    return DEFAULT_CONFIG


def cfg_with(*overrides: str):
    """Default config with "section.key=value" overrides applied."""
    return apply_overrides(DEFAULT_CONFIG, list(overrides))


def make_fp(gray: np.ndarray, roi: np.ndarray | None = None,
            finger_id: int = 2) -> FingerprintImage:
    """FingerprintImage wrapper for ad-hoc arrays in tests."""
    gray = np.asarray(gray, dtype=np.uint8)
    if roi is None:
        roi = np.ones(gray.shape, dtype=bool)
    return FingerprintImage(gray=gray, roi=roi, source_finger_id=finger_id,
                            roi_size=gray.shape, roi_area=int(roi.sum()))


def stripes(h: int, w: int, period: int = 2, horizontal: bool = False,
            lo: int = 0, hi: int = 255) -> np.ndarray:
    """Square-wave stripe pattern, vertical bars by default."""
    axis = np.arange(h if horizontal else w)
    line = np.where((axis // max(1, period // 2)) % 2 == 0, hi, lo).astype(np.uint8)
    if horizontal:
        return np.repeat(line[:, None], w, axis=1)
    return np.repeat(line[None, :], h, axis=0)
