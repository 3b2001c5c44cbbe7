"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Input violates a documented precondition or invariant."""


class NumericError(RuntimeError):
    """A numerical routine failed to converge or produced unusable output."""


class CacheError(RuntimeError):
    """A cache file is missing, truncated, or fails its checksum."""
