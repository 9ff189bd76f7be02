"""Exception types shared across the package.

Parse-time failures (bad input files) derive from ParseError so the CLI can
map them to exit code 2; everything else maps to exit code 1.
"""


class LobError(Exception):
    """Base class for all package errors."""


# -- book ------------------------------------------------------------------

class CrossedBook(LobError):
    """A placement would cross the opposite best quote."""


class UnknownLevel(LobError):
    """Cancel/execute targets a price with no resting volume."""


class OverCancel(LobError):
    """Cancel/execute volume exceeds the resting volume at that price."""


class OffTickGrid(LobError):
    """A price is not an integer multiple of the tick size."""


class InsufficientDepth(LobError):
    """Fewer price levels exist on a side than the snapshot requests."""


# -- ingest ----------------------------------------------------------------

class ParseError(LobError):
    """Base for malformed-input errors; carries the offending row number."""

    def __init__(self, message, row=None):
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)
        self.row = row


class MalformedRow(ParseError):
    """Wrong arity or non-numeric field in an input row."""


class InvalidSnapshot(ParseError):
    """A parsed row violates the snapshot ordering/positivity invariants."""


class DegenerateFeature(LobError):
    """Zero-variance feature encountered while fitting normalization."""


# -- represent -------------------------------------------------------------

class NonUniformDepth(LobError):
    """Snapshots in a window disagree on level count or tick size."""


class EmptyWindow(LobError):
    """A representation was requested for an empty snapshot window."""


class WrongScheme(LobError):
    """A tensor of the wrong representation scheme was supplied."""


class DegenerateBook(LobError):
    """Ask and bid volume coincide on one tick (crossed input)."""


# -- perturb ---------------------------------------------------------------

class DepthUnknown(LobError):
    """Perturbation needs more depth than the series exposes."""


class ShapeMismatch(LobError):
    """Before/after windows differ in length, depth or tick size."""


# -- label -----------------------------------------------------------------

class HorizonOutOfRange(LobError):
    """Label horizon extends beyond the end of the mid-price series."""


# -- learn / eval ----------------------------------------------------------

class DimMismatch(LobError):
    """Input width does not match the model's input dimension."""


class Diverged(LobError):
    """Training produced a non-finite loss."""


class EmptyInput(LobError):
    """Metrics requested for empty prediction/label arrays."""


# -- tensor files ----------------------------------------------------------

class CorruptTensor(ParseError):
    """Tensor file fails magic/version/length validation."""
