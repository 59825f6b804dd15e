"""Exception types raised across the toolkit.

Plain ``FileNotFoundError`` and ``OSError`` are used for missing files and
I/O failures; everything domain-specific derives from ``ExtremeForgeError``
so callers can catch toolkit errors in one clause.
"""


class ExtremeForgeError(Exception):
    """Base class for all toolkit errors."""


class UnsupportedFormatError(ExtremeForgeError):
    """Image file extension is not one of the supported formats."""


class CorruptHeaderError(ExtremeForgeError):
    """Image file exists but its header or payload cannot be decoded."""


class ParseError(ExtremeForgeError):
    """A label or detection line could not be parsed."""

    def __init__(self, path, line_no: int, message: str):
        super().__init__(f"{path}:{line_no}: {message}")
        self.path = path
        self.line_no = line_no


class ClassOutOfRangeError(ExtremeForgeError):
    """A box references a class id outside the configured class list."""


class ConfidenceOutOfRangeError(ExtremeForgeError):
    """A detection confidence lies outside [0, 1]."""


class DuplicateImageIdError(ExtremeForgeError):
    """Two image files in one dataset share the same id (path stem)."""


class ImageTooSmallError(ExtremeForgeError):
    """Image is below the minimum size the pyramid transform supports."""


class ShapeMismatchError(ExtremeForgeError):
    """Array dimensions are inconsistent with the expected layout."""


class StyleMismatchError(ExtremeForgeError):
    """Supplied content statistics do not describe the given pyramid."""


class ParamsKindMismatchError(ExtremeForgeError):
    """Condition parameters do not belong to the requested condition."""


class ParamOutOfRangeError(ExtremeForgeError):
    """A condition parameter violates its documented range."""


class EmptyDatasetError(ExtremeForgeError):
    """An operation requires a non-empty dataset."""


class UnknownConditionDirError(ExtremeForgeError):
    """A style directory name does not match any known condition."""


class PlanInvalidError(ExtremeForgeError):
    """A synthesis plan violates one of its invariants."""


class UnknownImageIdError(ExtremeForgeError):
    """Detections reference an image id absent from the dataset."""


class UnknownLabelError(ExtremeForgeError):
    """A robustness delta references a report label that was not supplied."""
