"""Exception hierarchy.

Contract violations (bad shapes, bad configs, degenerate inputs) derive from
:class:`ContractError`; anything that went wrong reading or writing bytes on
disk derives from :class:`PersistenceError`. The CLI maps the first family to
exit code 1 and the second to exit code 2.
"""


class GenDistillError(Exception):
    """Base class for all package errors."""


class ContractError(GenDistillError):
    """A precondition of an operation was violated."""


class DimensionError(ContractError, ValueError):
    pass


class InputTooShortError(ContractError, ValueError):
    pass


class DegenerateVectorError(ContractError, ArithmeticError):
    """Cosine similarity requested for a zero-norm vector."""


class ConfigError(ContractError, ValueError):
    pass


class TrainingDivergedError(ContractError, ArithmeticError):
    pass


class PersistenceError(GenDistillError, OSError):
    pass


class UnsupportedFormatError(PersistenceError):
    pass


class CheckpointError(PersistenceError):
    pass


class BadMagicError(CheckpointError):
    pass


class VersionMismatchError(CheckpointError):
    pass


class CheckpointBoundsError(CheckpointError):
    pass
