"""
Exception hierarchy for ssl_forge.

The three top-level families map one-to-one onto CLI exit codes:
ConfigError -> 2, DataError -> 3, AlgorithmError -> 4.
"""
from typing import Optional, Tuple


class SSLForgeError(Exception):
    """Base class for every error raised by the library."""


class ConfigError(SSLForgeError, ValueError):
    """A configuration, parameter or component name is invalid."""


class UnknownComponentError(ConfigError):
    """An algorithm, transformer, metric or generator name is not registered."""

    def __init__(self, kind: str, name: str, known: Optional[list] = None):
        self.kind = kind
        self.name = name
        message = f"unknown {kind}: {name!r}"
        if known:
            message += f" (known: {', '.join(sorted(known))})"
        super().__init__(message)


class InvalidParameterError(ConfigError):
    """A ParamMap failed validation against a component's parameter model."""


class DataError(SSLForgeError, ValueError):
    """Input data cannot be used as given."""


class DataValidationError(DataError):
    """Shape, finiteness, label or parsing problem in input data."""


class DegenerateProblemError(DataError):
    """The labeled set cannot support the requested learning problem."""


class AlgorithmError(SSLForgeError, RuntimeError):
    """An algorithm failed while fitting."""


class ConvergenceError(AlgorithmError):
    """Non-finite objective, singular system or another numerical failure."""


class InfeasibleConstraintsError(AlgorithmError):
    """Pairwise clustering constraints cannot be satisfied."""

    def __init__(self, message: str, pair: Optional[Tuple[int, int]] = None):
        self.pair = pair
        if pair is not None:
            message = f"{message} (conflicting pair: {pair[0]}, {pair[1]})"
        super().__init__(message)


EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_ALGORITHM = 4


def exit_code_for(error: BaseException) -> int:
    """Map an exception onto the CLI exit code of its family."""
    if isinstance(error, ConfigError):
        return EXIT_CONFIG
    if isinstance(error, DataError):
        return EXIT_DATA
    if isinstance(error, AlgorithmError):
        return EXIT_ALGORITHM
    if isinstance(error, OSError):
        return EXIT_DATA
    return EXIT_ALGORITHM
