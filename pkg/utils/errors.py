"""Exception hierarchy shared by every package.

Each class carries the CLI exit code of its category:
1 usage, 2 data, 3 numeric.
"""
from typing import Optional

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3


class BackmapError(Exception):
    """Base class for all domain errors."""

    exit_code = EXIT_DATA


class UsageError(BackmapError):
    exit_code = EXIT_USAGE


class InvalidEntryIdError(UsageError):
    """Entry id is not syntactically valid."""


class UnknownResidueError(BackmapError):
    """Residue code outside the accepted set."""


class TemplateLookupError(BackmapError, KeyError):
    """Atom or element missing from the template tables."""

    def __str__(self) -> str:
        return Exception.__str__(self)


class SkeletonMismatchError(BackmapError):
    """Frames or structures disagree on their atom skeleton."""


class ChainTooShortError(BackmapError):
    """A chain has fewer than three residues."""


class MissingAtomError(BackmapError):
    """A required atom is absent from a residue."""


class UnplacedAtomError(BackmapError):
    """A non-terminal residue has an atom without coordinates."""


class MissingRowsError(BackmapError):
    """A Z-matrix frame lacks rows for a residue that needs them."""


class CoverageError(BackmapError):
    """Lookup tables hold no statistics for a residue slot."""


class FeatureError(BackmapError):
    """Features were requested for a residue that has none."""


class ModelFormatError(BackmapError):
    """A model or data file does not match the expected schema."""


class FetchError(BackmapError):
    """Download failed.

    Attributes:
        status: HTTP status code, or None for transport failures
        retryable: Whether repeating the request may succeed
    """

    def __init__(self, message: str, status: Optional[int] = None, retryable: bool = False):
        super().__init__(message)
        self.status = status
        self.retryable = retryable


class EntryNotFoundError(FetchError):
    def __init__(self, message: str, status: Optional[int] = 404):
        super().__init__(message, status=status, retryable=False)


class NumericError(BackmapError):
    exit_code = EXIT_NUMERIC


class DegenerateGeometryError(NumericError):
    """Anchor atoms are collinear or coincident.

    Attributes:
        index: Position of the first offending row in a vectorised call
    """

    def __init__(self, message: str, index: Optional[int] = None):
        super().__init__(message)
        self.index = index


class NonFiniteLossError(NumericError):
    """Training produced a NaN or infinite loss."""
