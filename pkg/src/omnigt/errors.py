"""Exception hierarchy shared by all toolkit modules.

Every structured failure raises a subclass of :class:`ToolkitError`, so callers
(and the CLI) can catch one base type and still report a precise error name.
"""


class ToolkitError(Exception):
    """Base class for all structured toolkit errors."""


# geometry

class ZeroVector(ToolkitError):
    """Spherical conversion of the zero vector is undefined."""


class BehindCamera(ToolkitError):
    """Point has z <= 0 in the lens frame; the perspective model does not apply."""


class DegenerateDenominator(ToolkitError):
    """Rational distortion denominator is (numerically) zero at this radius."""


# calibration

class InsufficientPoints(ToolkitError):
    """Fewer correspondences than the solver's minimum."""


class InsufficientViews(ToolkitError):
    """Fewer board views than the closed-form intrinsics solution needs."""


class DegenerateConfiguration(ToolkitError):
    """Point configuration leaves the linear system rank-deficient."""


class DegenerateOrientations(ToolkitError):
    """Board orientations do not constrain the intrinsics (e.g. all parallel)."""


class DegenerateHomography(ToolkitError):
    """Homography cannot be decomposed into a plausible view pose."""


class NumericalFailure(ToolkitError):
    """Normal equations unsolvable even at maximal damping."""


class LensMismatch(ToolkitError):
    """Training data carries a lens id that does not match the set."""


# sync

class DegenerateAnchors(ToolkitError):
    """Flash anchors do not determine a positive-slope time mapping."""


class EmptyTimeline(ToolkitError):
    """No mocap frames available to snap to."""


# dataio

class MalformedRow(ToolkitError):
    """CSV row has the wrong arity or an unparseable field."""

    def __init__(self, row: int, message: str):
        super().__init__(f"row {row}: {message}")
        self.row = row


class MissingHeader(ToolkitError):
    """CSV input lacks the mandatory header row."""


class SchemaViolation(ToolkitError):
    """Structured input does not match the declared schema."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


class DuplicateObject(ToolkitError):
    """The same (name, id) pair appears twice in one annotation frame."""


class CountMismatch(ToolkitError):
    """A corner view does not contain exactly cols*rows points."""


class MissingFile(ToolkitError):
    """A session header references a file the resolver cannot supply."""
