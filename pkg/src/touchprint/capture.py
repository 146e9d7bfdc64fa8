"""Deterministic capture-session state machine.

A session collects up to five quality-passing samples per finger from a
stream of frames, finishes Done once every buffer is full, or Failed when
the frame budget runs out first (a failure-to-acquire event). States are
immutable; process_frame returns the successor.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .config import PipelineConfig
from .enhancement import FingerprintImage
from .errors import (
    DiscardFrame,
    EmptyROI,
    MaskRejected,
    NotDone,
    SeparationFailed,
    SessionClosed,
)
from .geometry import FINGER_IDS_LEFT, FINGER_IDS_RIGHT, HandSide
from .minutiae import MinutiaTemplate, build_template
from .pipeline import process_frame as run_pipeline
from .quality import QualityReport, select_best
from .segmentation import MaskReason

FINGERS_PER_HAND = 4


class SessionStatus(Enum):
    WAITING_FOR_HAND = "waiting_for_hand"
    COLLECTING = "collecting"
    DONE = "done"
    FAILED = "failed"


class Feedback(Enum):
    NO_HAND = "no_hand"
    BLURRY = "blurry"
    BAD_POSE = "bad_pose"
    PROGRESS = "progress"
    COMPLETE = "complete"


@dataclass(frozen=True)
class FingerSample:
    fingerprint: FingerprintImage
    quality: QualityReport
    frame_index: int


@dataclass(frozen=True)
class SessionState:
    hand: HandSide
    cfg: PipelineConfig
    status: SessionStatus
    feedback: Feedback
    frames_seen: int
    buffers: tuple[tuple[FingerSample, ...], ...]
    best: tuple[int, ...] | None

    @property
    def finger_ids(self) -> tuple[int, ...]:
        return FINGER_IDS_RIGHT if self.hand is HandSide.RIGHT else FINGER_IDS_LEFT

    @property
    def counts(self) -> tuple[int, ...]:
        return tuple(len(b) for b in self.buffers)


@dataclass(frozen=True)
class CaptureResult:
    samples: tuple[FingerSample, ...]
    templates: tuple[MinutiaTemplate, ...]


def start_session(hand: HandSide, cfg: PipelineConfig) -> SessionState:
    return SessionState(
        hand=hand,
        cfg=cfg,
        status=SessionStatus.WAITING_FOR_HAND,
        feedback=Feedback.NO_HAND,
        frames_seen=0,
        buffers=tuple(() for _ in range(FINGERS_PER_HAND)),
        best=None,
    )


def process_frame(
    st: SessionState, frame: np.ndarray
) -> tuple[SessionState, Feedback]:
    """Advance the session by one frame; pure, returns the successor state."""
    if st.status in (SessionStatus.DONE, SessionStatus.FAILED):
        raise SessionClosed(f"session already {st.status.value}")
    cfg = st.cfg
    frames = st.frames_seen + 1
    buffers = list(st.buffers)
    best = st.best
    done = False

    try:
        fingers = run_pipeline(frame, st.hand, cfg)
    except MaskRejected as exc:
        feedback = (
            Feedback.NO_HAND
            if exc.reason is MaskReason.NO_COMPONENT
            else Feedback.BAD_POSE
        )
    except (DiscardFrame, SeparationFailed, EmptyROI):
        feedback = Feedback.BAD_POSE
    else:
        target = cfg.capture.samples_per_finger
        any_quality_fail = False
        for i, pf in enumerate(fingers):
            if not pf.quality.passed:
                any_quality_fail = True
            elif len(buffers[i]) < target:
                buffers[i] = buffers[i] + (
                    FingerSample(pf.fingerprint, pf.quality, frames),
                )
        if all(len(b) >= target for b in buffers):
            done = True
            feedback = Feedback.COMPLETE
            best = tuple(
                select_best([(s.fingerprint, s.quality) for s in b]) for b in buffers
            )
        elif any_quality_fail:
            feedback = Feedback.BLURRY
        else:
            feedback = Feedback.PROGRESS

    if done:
        status = SessionStatus.DONE
    elif frames >= cfg.capture.max_frames:
        status = SessionStatus.FAILED
    elif any(buffers):
        status = SessionStatus.COLLECTING
    else:
        status = SessionStatus.WAITING_FOR_HAND

    new = replace(
        st,
        status=status,
        feedback=feedback,
        frames_seen=frames,
        buffers=tuple(buffers),
        best=best,
    )
    return new, feedback


def finalize_session(st: SessionState) -> CaptureResult:
    """Best sample per finger plus its template; only valid once Done."""
    if st.status is not SessionStatus.DONE:
        raise NotDone(f"session is {st.status.value}, not done")
    best = st.best
    if best is None:
        best = tuple(
            select_best([(s.fingerprint, s.quality) for s in b]) for b in st.buffers
        )
    samples = tuple(st.buffers[i][best[i]] for i in range(FINGERS_PER_HAND))
    templates = tuple(build_template(s.fingerprint, st.cfg) for s in samples)
    return CaptureResult(samples=samples, templates=templates)
