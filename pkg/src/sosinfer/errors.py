"""Exception types that map onto the CLI exit-code contract."""


class ConfigError(ValueError):
    """Invalid configuration (bad flag combination, unparsable spec string)."""


class DataError(ValueError):
    """Invalid data content (ties, support violations, non-increasing rows)."""


class ConvergenceError(RuntimeError):
    """An iterative procedure failed to converge where a result was required."""
