"""Exception types shared across the library."""

from __future__ import annotations


class RegionFeatError(Exception):
    """Base class for all library errors."""


class InvalidParameterError(RegionFeatError, ValueError):
    """An argument violates a documented precondition."""


class ParseError(RegionFeatError, ValueError):
    """A file could not be parsed.

    Carries enough context (path, line) to point at the offending input.
    """

    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        where = ""
        if path is not None:
            where = f"{path}: "
        if line is not None:
            where = f"{where}line {line}: "
        super().__init__(f"{where}{message}")
        self.path = path
        self.line = line


class DegenerateRegionError(RegionFeatError, ValueError):
    """A region is unusable for description (empty box or zero mass)."""


class ClassificationFailedError(RegionFeatError, RuntimeError):
    """Affine-degree classification could not run.

    ``image`` names the input ('a' or 'b') that produced no features.
    """

    def __init__(self, image: str, reason: str):
        super().__init__(f"classification failed on image {image!r}: {reason}")
        self.image = image
        self.reason = reason


class EstimationFailedError(RegionFeatError, RuntimeError):
    """Model estimation ran out of usable samples or consensus."""


class ConfigurationError(RegionFeatError, ValueError):
    """A configuration file or option set is invalid."""
