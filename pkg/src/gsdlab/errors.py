"""Exception hierarchy shared across the package, mapped to CLI exit codes."""


class GsdError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class InputError(GsdError):
    """Malformed or inconsistent user input (bad file, bad parameter)."""

    exit_code = 2


class ResourceError(GsdError):
    """A configured resource cap was exceeded (table size, basis size, retries)."""

    exit_code = 3


class GenerationError(ResourceError):
    """Instance generation exhausted its retry budget."""


class NumericalError(GsdError):
    """An iterative numerical routine failed to converge."""

    exit_code = 4


class UnresolvedDegeneracyError(NumericalError):
    """Ground-state degeneracy survived the largest supported subspace."""


class IntegrityError(GsdError):
    """Internal cross-check failed; upstream artifacts are inconsistent."""

    exit_code = 5
