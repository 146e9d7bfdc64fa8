"""Procedural test imagery: ridge textures, fingerprint patches, hand frames.

Everything is driven by numpy Generators seeded through SeedSequence so the
same seed yields the same corpus on any platform.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import gaussian_filter, map_coordinates

from .enhancement import FingerprintImage
from .geometry import FINGER_IDS_LEFT, FINGER_IDS_RIGHT, HandSide
from .raster import rotate_image

PATCH_HEIGHT = 420
PATCH_WIDTH = 300

RIDGE_PERIOD_MIN = 7.0
RIDGE_PERIOD_MAX = 10.0
RIDGE_AMPLITUDE = 150.0
PHASE_NOISE_RAD = 2.6
PHASE_NOISE_SIGMA = 11.0
DUTY_NOISE = 0.7
DUTY_SIGMA = 13.0
WOBBLE_RAD = 0.18
WOBBLE_SIGMA_FRACTION = 0.25

WARP_PX = 1.2
WARP_SIGMA = 40.0
SESSION_BLUR = 0.3
SESSION_NOISE = 0.5

SKIN_BASE = (182.0, 124.0, 102.0)
SKIN_MOD = (0.34, 0.25, 0.14)
BG_BASE = (92.0, 102.0, 122.0)
BG_NOISE = 4.0

WIDTH_STEPS = (0.82, 0.94, 1.06, 1.18)
GAP_FRACTION = 0.20
STAGGER_FRACTION = 0.03
FINGER_LENGTH_FACTOR = 1.28
MARGIN_PX = 24
WRIST_CUT_PX = 8


def rng_for(seed: int, *keys: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), *(int(k) for k in keys)]))


def smooth_field(shape, sigma: float, rng: np.random.Generator) -> np.ndarray:
    """Unit-variance low-frequency noise."""
    field = gaussian_filter(rng.standard_normal(shape), sigma, mode="reflect")
    std = field.std()
    if std <= 0:
        return field
    return field / std


def ridge_texture(shape, rng: np.random.Generator, period: float | None = None,
                  theta: float | None = None) -> np.ndarray:
    """Quasi-periodic stripe pattern, uint8.

    The additive duty-cycle field pinches stripes off and merges neighbors
    wherever it swings past the wave amplitude, so the pattern carries real
    terminations and forks, which is what downstream feature extraction keys
    on. The overall amplitude is chosen to clip, giving flat-topped stripes
    with steep flanks.
    """
    h, w = shape
    if period is None:
        period = float(rng.uniform(RIDGE_PERIOD_MIN, RIDGE_PERIOD_MAX))
    if theta is None:
        theta = float(rng.uniform(0.0, np.pi))
    angle = theta + WOBBLE_RAD * smooth_field(shape, max(h, w) * WOBBLE_SIGMA_FRACTION, rng)
    phase_noise = PHASE_NOISE_RAD * smooth_field(shape, PHASE_NOISE_SIGMA, rng)
    duty = DUTY_NOISE * smooth_field(shape, DUTY_SIGMA, rng)
    yy, xx = np.indices(shape, dtype=np.float64)
    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
    carrier = (xx - cx) * np.cos(angle) + (yy - cy) * np.sin(angle)
    wave = np.cos(2.0 * np.pi / period * carrier + phase_noise) + duty
    tex = 128.0 + RIDGE_AMPLITUDE * wave
    return np.clip(np.rint(tex), 0, 255).astype(np.uint8)


def degrade(gray: np.ndarray, rng: np.random.Generator, warp_px: float = WARP_PX,
            warp_sigma: float = WARP_SIGMA, blur: float = SESSION_BLUR,
            noise: float = SESSION_NOISE) -> np.ndarray:
    """Second-capture look: mild elastic warp, slight defocus, sensor noise."""
    h, w = gray.shape
    dy = warp_px * smooth_field((h, w), warp_sigma, rng)
    dx = warp_px * smooth_field((h, w), warp_sigma, rng)
    yy, xx = np.indices((h, w), dtype=np.float64)
    warped = map_coordinates(gray.astype(np.float64), [yy + dy, xx + dx],
                             order=1, mode="nearest")
    soft = gaussian_filter(warped, blur) if blur > 0 else warped
    noisy = soft + noise * rng.standard_normal((h, w))
    return np.clip(np.rint(noisy), 0, 255).astype(np.uint8)


def fingerprint_patch(seed: int, subject: int, finger_id: int,
                      session: int) -> FingerprintImage:
    """Standalone normalized-size fingerprint for corpus-level experiments.

    Identity (ridge layout) depends on (seed, subject, finger_id) only;
    session 2 re-renders the same identity through `degrade`.
    """
    identity = rng_for(seed, subject, finger_id, 0)
    gray = ridge_texture((PATCH_HEIGHT, PATCH_WIDTH), identity)
    if session != 1:
        gray = degrade(gray, rng_for(seed, subject, finger_id, session))
    roi = np.ones((PATCH_HEIGHT, PATCH_WIDTH), dtype=bool)
    return FingerprintImage(gray=gray, roi=roi, source_finger_id=finger_id,
                            roi_size=(PATCH_HEIGHT, PATCH_WIDTH),
                            roi_area=PATCH_HEIGHT * PATCH_WIDTH)


@dataclass(frozen=True)
class HandFrame:
    """Rendered frame plus the ground truth used to build it."""

    image: np.ndarray
    hand: HandSide
    angle_deg: float
    finger_widths: tuple[int, int, int, int]
    finger_ids: tuple[int, int, int, int]


def _capsule_mask(height: int, width: int) -> np.ndarray:
    """Vertical bar with a rounded top."""
    mask = np.ones((height, width), dtype=bool)
    r = width / 2.0
    cap = int(np.ceil(r))
    yy, xx = np.indices((min(cap, height), width), dtype=np.float64)
    cx = (width - 1) / 2.0
    mask[: min(cap, height)] = (xx - cx) ** 2 + (yy - (r - 0.5)) ** 2 <= r * r
    return mask


def _upright_hand(rng: np.random.Generator, base_width: int, finger_length: int,
                  palm_height: int):
    """Mask + per-pixel ridge texture for an upright hand, fingers up."""
    widths = np.rint(np.array(WIDTH_STEPS) * base_width).astype(int)
    order = rng.permutation(4)
    widths = widths[order]
    gap = max(12, int(round(GAP_FRACTION * base_width)))
    stagger = [int(rng.integers(0, max(1, int(STAGGER_FRACTION * finger_length))))
               for _ in range(4)]

    total_w = int(widths.sum()) + 3 * gap
    height = finger_length + max(stagger) + palm_height
    mask = np.zeros((height, total_w), dtype=bool)
    tex = np.zeros((height, total_w), dtype=np.uint8)

    centers = []
    x = 0
    palm_top = height - palm_height
    for i in range(4):
        w = int(widths[i])
        top = stagger[i]
        cap = _capsule_mask(palm_top - top + 2, w)
        region = mask[top: palm_top + 2, x: x + w]
        region |= cap[: region.shape[0]]
        ftex = ridge_texture((palm_top + 2 - top, w), rng)
        patch = tex[top: palm_top + 2, x: x + w]
        patch[cap[: region.shape[0]]] = ftex[cap[: region.shape[0]]]
        centers.append(x + w / 2.0)
        x += w + gap

    # Palm spans between the outer finger centerlines and runs to the bottom
    # edge so the wrist can sit flush on the frame border after cropping.
    px0 = int(round(centers[0]))
    px1 = int(round(centers[-1]))
    mask[palm_top:, px0:px1] = True
    ptex = ridge_texture((palm_height, px1 - px0), rng, period=RIDGE_PERIOD_MAX)
    tex[palm_top:, px0:px1] = np.where(tex[palm_top:, px0:px1] > 0,
                                       tex[palm_top:, px0:px1], ptex)
    return mask, tex, tuple(int(w) for w in widths)


def _colorize(mask: np.ndarray, tex: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Skin-tone RGB where mask is set, cool background elsewhere."""
    h, w = mask.shape
    delta = tex.astype(np.float64) - 128.0
    out = np.empty((h, w, 3), dtype=np.float64)
    for c in range(3):
        out[..., c] = BG_BASE[c] + BG_NOISE * rng.standard_normal((h, w))
    for c in range(3):
        skin = SKIN_BASE[c] + SKIN_MOD[c] * delta
        out[..., c] = np.where(mask, skin, out[..., c])
    return np.clip(np.rint(out), 0, 255).astype(np.uint8)


def make_hand_frame(seed: int, index: int = 0, hand: HandSide = HandSide.RIGHT,
                    angle_deg: float | None = None, base_width: int = 120,
                    finger_length: int | None = None,
                    palm_height: int | None = None) -> HandFrame:
    """Four-finger pose on a plain background, rotated and wrist-cropped.

    The silhouette is kept compact (overall aspect near 1) so its bounding-box
    fill ratio survives any rotation, and the wrist is cut flush against one
    frame border so exactly one border carries mask contact.
    """
    rng = rng_for(seed, 1000, index)
    if angle_deg is None:
        angle_deg = float(rng.uniform(0.0, 360.0))
    widths_scale = sum(WIDTH_STEPS) * base_width
    total_w = int(widths_scale + 3 * max(12, int(round(GAP_FRACTION * base_width))))
    if palm_height is None:
        palm_height = int(round(0.24 * total_w))
    if finger_length is None:
        # Long fingers keep a full-width stretch alive even when a 45-degree
        # residual tilt forces the bottom trim deep into the finger stems.
        finger_length = int(round(FINGER_LENGTH_FACTOR * total_w))

    mask_up, tex_up, widths = _upright_hand(rng, base_width, finger_length, palm_height)

    mask_rot = rotate_image(mask_up, angle_deg)
    tex_rot = rotate_image(tex_up, angle_deg, interp="bilinear")

    ys, xs = np.nonzero(mask_rot)
    y0, y1 = int(ys.min()), int(ys.max()) + 1
    x0, x1 = int(xs.min()), int(xs.max()) + 1

    # Wrist direction: source "down" (0,1) seen after a CCW rotation by angle.
    th = np.deg2rad(angle_deg)
    ux, uy = np.sin(th), np.cos(th)
    if abs(uy) >= abs(ux):
        side = "bottom" if uy > 0 else "top"
    else:
        side = "right" if ux > 0 else "left"

    m = MARGIN_PX
    cy0, cy1, cx0, cx1 = y0 - m, y1 + m, x0 - m, x1 + m
    if side == "bottom":
        cy1 = y1 - WRIST_CUT_PX
    elif side == "top":
        cy0 = y0 + WRIST_CUT_PX
    elif side == "right":
        cx1 = x1 - WRIST_CUT_PX
    else:
        cx0 = x0 + WRIST_CUT_PX

    h, w = mask_rot.shape
    pad_y0, pad_x0 = max(0, -cy0), max(0, -cx0)
    pad_y1, pad_x1 = max(0, cy1 - h), max(0, cx1 - w)
    if pad_y0 or pad_x0 or pad_y1 or pad_x1:
        mask_rot = np.pad(mask_rot, ((pad_y0, pad_y1), (pad_x0, pad_x1)))
        tex_rot = np.pad(tex_rot, ((pad_y0, pad_y1), (pad_x0, pad_x1)))
        cy0, cy1, cx0, cx1 = cy0 + pad_y0, cy1 + pad_y0, cx0 + pad_x0, cx1 + pad_x0
    mask_c = mask_rot[cy0:cy1, cx0:cx1]
    tex_c = tex_rot[cy0:cy1, cx0:cx1]

    image = _colorize(mask_c, tex_c, rng)
    ids = FINGER_IDS_RIGHT if hand == HandSide.RIGHT else FINGER_IDS_LEFT
    return HandFrame(image=image, hand=hand, angle_deg=float(angle_deg),
                     finger_widths=widths, finger_ids=tuple(ids))


def make_capture_frame(seed: int, index: int = 0, hand: HandSide = HandSide.RIGHT,
                       tilt_deg: float = 0.0) -> HandFrame:
    """Large near-upright frame whose fingers pass the size and focus gates."""
    return make_hand_frame(seed, index=index, hand=hand, angle_deg=tilt_deg,
                           base_width=260, finger_length=470, palm_height=170)


def blur_frame(frame: HandFrame, rng: np.random.Generator,
               sigma: float = 6.0) -> HandFrame:
    """Defocused copy of a frame; ridge detail is gone but the pose remains."""
    soft = np.stack([gaussian_filter(frame.image[..., c].astype(np.float64), sigma)
                     for c in range(3)], axis=-1)
    img = np.clip(np.rint(soft), 0, 255).astype(np.uint8)
    return HandFrame(image=img, hand=frame.hand, angle_deg=frame.angle_deg,
                     finger_widths=frame.finger_widths, finger_ids=frame.finger_ids)


def background_frame(seed: int, index: int = 0, shape=(480, 640)) -> np.ndarray:
    """Frame with no hand in it."""
    rng = rng_for(seed, 2000, index)
    h, w = shape
    out = np.empty((h, w, 3), dtype=np.float64)
    for c in range(3):
        out[..., c] = BG_BASE[c] + BG_NOISE * rng.standard_normal((h, w))
    return np.clip(np.rint(out), 0, 255).astype(np.uint8)
