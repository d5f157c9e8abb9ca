"""Exception hierarchy shared by the library and the CLI."""

from typing import Optional


class GridscanError(ValueError):
    """Base class for all gridscan errors.

    ``exit_code`` is the process exit status the CLI uses when the error
    escapes a command.
    """

    exit_code = 1


class InvalidSpecError(GridscanError):
    """Invalid excitation, noise, estimator or window parameters."""


class ShapeError(GridscanError):
    """Length, period or parity mismatch between inputs."""


class GridConstructionError(GridscanError):
    """A ladder network that cannot be realized as a stable state-space grid."""


class UnderdeterminedError(GridscanError):
    """A local least-squares window with fewer equations than unknowns."""


class RankDeficiencyError(GridscanError):
    """A time-domain regression whose regressor matrix lacks full column rank."""


class EmptyBandError(GridscanError):
    """A frequency band that selects no (valid) bins."""


class ConfigError(GridscanError):
    """Strict configuration parsing failure, carrying the dotted field path."""

    exit_code = 2

    def __init__(self, message: str, path: Optional[str] = None):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class MissingInputError(GridscanError):
    """Dataset, manifest or estimate files are absent."""

    exit_code = 3


class IncompatibleDataError(GridscanError):
    """Data that does not fit the request (grid mismatch, modified files, ...)."""

    exit_code = 4
