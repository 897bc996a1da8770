"""Exception types shared across the package."""


class ConvergenceError(RuntimeError):
    """A numerical routine failed to converge or produced non-finite values."""
