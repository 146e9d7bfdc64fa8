"""Whole-frame processing: a four-finger photo in, rendered prints out.

Shared by the `process` CLI subcommand and the capture state machine.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import PipelineConfig
from .enhancement import FingerprintImage, render_fingerprint
from .errors import EmptyROI, MaskRejected
from .geometry import (
    FingerCrop,
    HandSide,
    assign_finger_ids,
    coarse_rotation_angle,
    crop_fingertip,
    fine_rotation_angle,
    separate_fingers,
)
from .quality import QualityReport, assess_quality
from .raster import rotate_image, to_grayscale
from .segmentation import (
    check_mask_plausibility,
    connected_components,
    dominant_components,
    segment_hand,
)

BBOX_MARGIN = 4


@dataclass(frozen=True)
class ProcessedFinger:
    fingerprint: FingerprintImage
    quality: QualityReport
    order_index: int


def _tight_crop(
    img: np.ndarray, mask: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    rows = np.nonzero(mask.any(axis=1))[0]
    cols = np.nonzero(mask.any(axis=0))[0]
    if len(rows) == 0:
        raise EmptyROI("finger mask vanished during fine rotation")
    y0, y1 = int(rows[0]), int(rows[-1]) + 1
    x0, x1 = int(cols[0]), int(cols[-1]) + 1
    return img[y0:y1, x0:x1], mask[y0:y1, x0:x1]


def process_frame(
    img: np.ndarray, hand: HandSide, cfg: PipelineConfig
) -> list[ProcessedFinger]:
    """Segment, upright, separate, and render all four fingers of a frame.

    Raises MaskRejected, DiscardFrame, SeparationFailed, or EmptyROI when
    the frame cannot yield four prints.
    """
    mask = segment_hand(img, cfg)
    cs = connected_components(mask)
    verdict = check_mask_plausibility(cs, cfg)
    if not verdict.passed:
        raise MaskRejected(verdict.reason)

    coarse = coarse_rotation_angle(mask)

    # keep only the dominant components; specks would destabilize the
    # dominance threshold once the frame is cropped smaller
    dom = dominant_components(cs, cfg)
    keep = np.isin(cs.labels, [c.id for c in dom])
    x0 = max(0, min(c.bbox[0] for c in dom) - BBOX_MARGIN)
    y0 = max(0, min(c.bbox[1] for c in dom) - BBOX_MARGIN)
    x1 = min(mask.shape[1], max(c.bbox[2] for c in dom) + BBOX_MARGIN)
    y1 = min(mask.shape[0], max(c.bbox[3] for c in dom) + BBOX_MARGIN)
    # grayscale before the rotations: everything downstream is single-channel
    img_c = to_grayscale(img[y0:y1, x0:x1])
    mask_c = keep[y0:y1, x0:x1]
    if coarse:
        img_c = rotate_image(img_c, coarse)
        mask_c = rotate_image(mask_c, coarse)

    crops = separate_fingers(img_c, mask_c, cfg.geometry.expected_fingers, cfg)
    ids = assign_finger_ids(crops, hand)

    out = []
    for crop, finger_id in zip(crops, ids):
        angle = fine_rotation_angle(crop.mask)
        image_r = rotate_image(crop.image, angle)
        mask_r = rotate_image(crop.mask, angle, interp="nearest")
        image_t, mask_t = _tight_crop(image_r, mask_r)
        upright = FingerCrop(image=image_t, mask=mask_t, order_index=crop.order_index)
        tip = crop_fingertip(upright)
        fp = render_fingerprint(tip, cfg, finger_id)
        out.append(
            ProcessedFinger(
                fingerprint=fp,
                quality=assess_quality(fp, cfg),
                order_index=crop.order_index,
            )
        )
    return out
