"""Exception hierarchy shared across the package.

The CLI maps these onto distinct exit codes: configuration problems,
numerical failures, and I/O or artifact-consistency problems.
"""


class FvRomError(Exception):
    """Base class for all package errors."""


class ConfigError(FvRomError):
    """Invalid case configuration or command-line input."""


class MeshError(FvRomError):
    """Mesh construction or validity failure."""


class FieldError(FvRomError):
    """Field/boundary-condition inconsistency."""


class ParseError(FvRomError):
    """Malformed input file; carries file/line context in the message."""


class SolverError(FvRomError):
    """Linear-solver non-convergence, NaN detection, or step failure."""

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = history or []


class BasisError(FvRomError):
    """Rank deficiency, degenerate supremizer set, or basis misuse."""


class StaleArtifactError(FvRomError):
    """Pipeline artifact no longer matches its recorded hash."""
