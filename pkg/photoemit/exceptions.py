"""Common exceptions."""

__all__ = [
    "AccuracyError",
    "ConditioningError",
    "ConfigError",
    "DomainError",
    "SolverError",
    "ValidationError",
]


class ValidationError(ValueError):
    """Indicate invalid physical or numerical parameters."""


class DomainError(ValidationError):
    """Indicate an argument outside the domain of an operation."""


class ConfigError(ValidationError):
    """Indicate missing or unknown configuration keys."""


class AccuracyError(Exception):
    """Indicate that a numerical tolerance could not be met."""

    def __init__(self, quantity: str, achieved: float, tolerance: float):
        super().__init__(quantity, achieved, tolerance)
        self.quantity = quantity
        self.achieved = achieved
        self.tolerance = tolerance

    def __str__(self):
        return (
            f"{self.quantity}: achieved {self.achieved:.3e}, "
            f"tolerance {self.tolerance:.3e}"
        )


class SolverError(Exception):
    """Indicate a failure of the boundary integral equation solver."""

    def __init__(self, message: str, *, window: int | None = None,
                 residual: float | None = None):
        super().__init__(message)
        self.message = message
        self.window = window
        self.residual = residual

    def __str__(self):
        details = []

        if self.window is not None:
            details.append(f"window {self.window}")

        if self.residual is not None:
            details.append(f"residual {self.residual:.3e}")

        if details:
            return f"{self.message} ({', '.join(details)})"

        return self.message


class ConditioningError(SolverError):
    """Indicate an ill-conditioned Floquet matching system."""
