class DomainError(ValueError):
    """An argument lies outside the domain of the operation."""


class DegenerateChannelError(DomainError):
    """A channel vector is (numerically) zero, so no beamformer exists."""


class SolveError(ArithmeticError):
    """A dense linear solve failed its residual check."""


class InfeasibleWorkerError(DomainError):
    """The worker cannot finish its computation inside the deadline even at f_max."""


class ConfigError(ValueError):
    """Invalid experiment configuration."""
