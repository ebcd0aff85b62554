"""Exception hierarchy shared by all shelltrack modules."""


class ShelltrackError(Exception):
    """Base class for all domain errors."""


class MismatchedSize(ShelltrackError):
    """Permutations over different ground sets were combined."""


class InvalidSpec(ShelltrackError):
    """An episode spec violates its own invariants."""


class OutOfRange(ShelltrackError):
    """A time query fell outside the episode's [0, duration] window."""


class ContinuityViolation(ShelltrackError):
    """Rasterization requested at a frame rate that fails the continuity audit."""


class TrackingError(ShelltrackError):
    """Base for tracker failures; carries the frame index where matching broke."""

    def __init__(self, message, frame_index=None):
        super().__init__(message)
        self.frame_index = frame_index


class WrongCount(TrackingError):
    """Localization found a number of object glyphs different from k."""


class NoCandidate(TrackingError):
    """An object has no successor within d_max (sampling too sparse)."""


class AmbiguousCandidate(TrackingError):
    """An object has two or more successors within d_max (separation too small)."""


class NonInjective(TrackingError):
    """Two objects claimed the same successor."""


class ParamViolation(ShelltrackError):
    """Gadget parameters break the L > 2d / h > d constraints or the canvas."""


class ParseError(ShelltrackError):
    """Track-string text did not match the grammar."""

    def __init__(self, reason, offset):
        super().__init__(f"{reason} (offset {offset})")
        self.reason = reason
        self.offset = offset


class EmptyTrack(ShelltrackError):
    """Answer derivation was asked for a track with no entries."""


class EndpointError(ShelltrackError):
    """A remote model endpoint failed for one item."""
