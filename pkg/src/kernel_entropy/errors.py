"""Exception hierarchy shared by all modules."""


class KernelEntropyError(Exception):
    """Base class for library errors."""


class DomainError(KernelEntropyError, ValueError):
    """A point lies outside the kernel's domain."""


class ParameterError(KernelEntropyError, ValueError):
    """An argument violates an operation's precondition."""


class ResourceError(KernelEntropyError, RuntimeError):
    """A computation would exceed a configured size cap."""


class NumericError(KernelEntropyError, RuntimeError):
    """A linear-algebra routine failed."""


class RegimeError(KernelEntropyError, ValueError):
    """The requested epsilon lies outside the regime where a formula is valid."""


class BudgetError(KernelEntropyError, RuntimeError):
    """A sample budget is too small for the requested resolution."""


class BoundViolation(KernelEntropyError, AssertionError):
    """A bound that must hold was found violated."""


class ConfigError(KernelEntropyError, ValueError):
    """A run configuration is malformed.

    ``path`` names the offending field, e.g. ``"spectrum.values"``.
    """

    def __init__(self, message, path=""):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)
