"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Invalid or unsupported configuration value."""

    def __init__(self, message, field=None):
        super().__init__(message if field is None else f"{field}: {message}")
        self.field = field


class ResolutionError(ValueError):
    """A grid is too coarse for the requested transform."""


class DomainError(ValueError):
    """Parameters fall outside the regime where a quantity is defined."""


class IntegrityError(RuntimeError):
    """A trajectory and the noise path offered with it do not belong together."""


class BlowUpError(ArithmeticError):
    """Non-finite or runaway state during time stepping.

    ``step`` is the index of the step that produced the bad state and
    ``trajectory`` (when set) holds everything computed before it.
    """

    def __init__(self, step, trajectory=None, message=None):
        super().__init__(message or f"state blew up at step {step}")
        self.step = step
        self.trajectory = trajectory
