"""Exception types shared across the engine."""


class CausaugError(Exception):
    """Base class for every error raised by this package."""


class InvalidArgument(CausaugError, ValueError):
    """An argument violates an operation's precondition."""


class DegenerateTransform(CausaugError):
    """A sampled transform collapsed numerically; resample and retry."""


class NpyFormatError(CausaugError, ValueError):
    """An NPY file failed strict parsing. Messages carry the byte offset."""


class ConfigError(CausaugError, ValueError):
    """A pipeline config is malformed (unknown key, bad value, bad type)."""


class TrainingDiverged(CausaugError):
    """Loss became non-finite during training."""

    def __init__(self, iteration: int, message: str = ""):
        self.iteration = iteration
        super().__init__(message or f"loss diverged at iteration {iteration}")
