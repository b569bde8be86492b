"""Exception hierarchy shared across the toolkit.

``InputError`` and its subclasses mark problems with user-supplied data
(the CLI maps them to exit code 2); everything else derived from
``Her2KitError`` signals an internal or algorithmic failure (exit code 3).
"""


class Her2KitError(Exception):
    """Base class for all toolkit errors."""


class InputError(Her2KitError):
    """Invalid user input (bad file, bad value, bad identifier)."""


class FormatError(InputError):
    """Malformed file content; carries the offending line and field."""

    def __init__(self, message, line=None, field=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
        self.field = field


class RangeError(InputError):
    """Value outside its admissible range; carries the field name."""

    def __init__(self, message, line=None, field=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
        self.field = field


class IdentifierError(InputError):
    """Unknown or mismatched case identifier."""


class EmptyCollectionError(InputError):
    """An operation that requires at least one element got none."""


class IntegrityError(Her2KitError):
    """Bundled data or a model file failed a consistency check."""


class DegenerateInputError(Her2KitError):
    """Numerically degenerate input (rank-deficient, constant, ...)."""


class CoverageError(Her2KitError):
    """No usable tissue/region found in an image."""


class PackingError(Her2KitError):
    """Synthetic cell placement could not satisfy the requested density."""


class SizeError(Her2KitError):
    """Image smaller than the requested patch/ROI geometry."""


class ShapeError(Her2KitError):
    """Array shape incompatible with the trained model."""


class TrainingError(Her2KitError):
    """Training preconditions not met (e.g. a single class present)."""
