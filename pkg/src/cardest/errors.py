"""Exception hierarchy shared across the package."""


class CardestError(Exception):
    """Base class for all package errors."""


class GraphParseError(CardestError):
    """Malformed edge-list input."""

    def __init__(self, message: str, line_no: int | None = None):
        self.line_no = line_no
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)


class QueryParseError(CardestError):
    """Malformed query / template text."""

    def __init__(self, message: str, line_no: int | None = None):
        self.line_no = line_no
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)


class QueryValidationError(CardestError):
    """Structurally invalid query (disconnected, duplicate edge, ...)."""


class ConfigError(CardestError):
    """Invalid run configuration (h < 2, bad key=value file, ...)."""


class CatalogueFormatError(CardestError):
    """Catalogue file cannot be loaded (version mismatch, malformed JSON)."""


class MissingStatisticError(CardestError):
    """An estimation-graph build needs a statistic the catalogue lacks."""

    def __init__(self, what: str):
        self.what = what
        super().__init__(f"missing catalogue statistic: {what}")


class EstimationError(CardestError):
    """No usable path from the empty subquery to the full query."""


class PathOverflowError(CardestError):
    """Path enumeration would exceed the configured cap."""

    def __init__(self, count: int, cap: int):
        self.count = count
        self.cap = cap
        super().__init__(f"path enumeration needs {count} paths, cap is {cap}")


class SketchPlanError(CardestError):
    """Partition budget incompatible with the sketch attribute set."""
