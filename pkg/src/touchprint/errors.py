"""Exception types shared across the toolkit.

Domain errors (bad frames, failed separation, empty inputs) derive from
TouchprintError so the CLI can map them to a dedicated exit code. Usage
and configuration problems raise ConfigError instead.
"""


class TouchprintError(Exception):
    """Base class for domain-level failures."""


class ConfigError(TouchprintError):
    """Invalid configuration key, value or file."""


class GrayInput(TouchprintError):
    """A color-only operation received a single-channel image."""


class EmptyHistogram(TouchprintError):
    """Histogram contains no samples."""


class EmptyMask(TouchprintError):
    """Binary mask has no foreground pixels."""


class MaskRejected(TouchprintError):
    """Segmentation mask failed a plausibility check.

    Carries the verdict reason so callers can distinguish no-hand frames
    from badly posed ones.
    """

    def __init__(self, reason):
        super().__init__(f"mask rejected: {reason}")
        self.reason = reason


class DiscardFrame(TouchprintError):
    """Frame is unusable (too many components during separation)."""


class SeparationFailed(TouchprintError):
    """Trim budget exhausted before the expected finger count appeared."""


class WrongFingerCount(TouchprintError):
    """Number of crops does not match the hand layout."""


class EmptyROI(TouchprintError):
    """Region of interest vanished (mask empty after erosion)."""


class TooSmall(TouchprintError):
    """Image below the minimum size for the requested operation."""


class NoCandidates(TouchprintError):
    """Best-sample selection received an empty candidate list."""


class EmptyTemplate(TouchprintError):
    """Minutiae template has no minutiae."""


class EmptyScores(TouchprintError):
    """Score fusion received no scores."""


class EmptyScoreSet(TouchprintError):
    """Rate computation needs at least one genuine and one impostor score."""


class NoAttempts(TouchprintError):
    """Failure-to-acquire rate is undefined without attempts."""


class ParseError(TouchprintError):
    """Malformed template byte string."""


class NotThin(TouchprintError):
    """Skeleton contains ridges wider than one pixel."""


class SessionClosed(TouchprintError):
    """Capture session already reached a terminal state."""


class NotDone(TouchprintError):
    """Capture session has not collected enough samples."""


# write_report surfaces filesystem problems as-is; the alias documents the
# contract without wrapping the builtin.
IoError = OSError
