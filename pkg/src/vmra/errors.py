"""Exception types shared across the package."""


class VmraError(Exception):
    """Base class for all vmra errors."""


class ConfigError(VmraError):
    """A parameter or configuration invariant is violated."""


class DomainError(VmraError):
    """An operation was called with an argument outside its domain."""


class CapacityExceeded(VmraError):
    """A model cannot host the requested load within server capacity."""


class SaturatedError(VmraError):
    """The incremental allocator has already rejected an arrival."""
