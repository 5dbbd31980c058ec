"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid configuration value (bad FFT size, roll-off, entropy target, ...)."""


class ShapeError(ValueError):
    """Array arguments with inconsistent or unsupported shapes."""


class NumericalError(RuntimeError):
    """A numerical procedure failed (solver non-convergence, divergence guard)."""
