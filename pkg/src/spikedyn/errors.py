"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain where a function is defined."""


class ConfigError(ValueError):
    """A user supplied configuration is malformed or out of range."""


class DivergenceError(ArithmeticError):
    """A numerical integration left the region where its output is meaningful."""


class SingularSystemError(ArithmeticError):
    """A linear solve was requested at (or numerically on top of) a pole."""
