"""Exception types shared across the package."""


class RankspecError(Exception):
    """Base class for errors raised by this package."""


class InputError(RankspecError, ValueError):
    """Malformed external input: bad shapes, ranges, or unparsable files."""


class TieError(RankspecError, ValueError):
    """Tied observations in a column that must be totally ordered."""

    def __init__(self, column, message=None):
        self.column = int(column)
        super().__init__(message or "tied values in column %d" % self.column)


class GuardExceededError(RankspecError):
    """A resource guard tripped before starting an expensive computation."""


class ConvergenceError(RankspecError):
    """A numerical routine failed to reach its tolerance."""
