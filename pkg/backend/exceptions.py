"""
Custom exceptions for the panel quadrature toolkit
"""

from typing import Optional, Dict, Any


class QuadratureError(Exception):
    """Base exception for all quadrature errors"""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}


class ConfigurationError(QuadratureError):
    """Exception raised for invalid configuration values"""

    def __init__(self, field: str, value: Any, reason: str):
        super().__init__(
            f"Invalid value for '{field}' ({value!r}): {reason}",
            {"field": field, "value": value, "reason": reason}
        )


class GeometryError(QuadratureError):
    """Base exception for curve and panel errors"""
    pass


class PanelizationError(GeometryError):
    """Exception raised when adaptive panelization cannot resolve a curve"""

    def __init__(self, depth: int, interval: tuple):
        super().__init__(
            f"Panelization exceeded depth {depth} on interval [{interval[0]:.6g}, {interval[1]:.6g}]",
            {"depth": depth, "interval": interval}
        )


class OnCurveError(GeometryError):
    """Exception raised when a target lies on the source curve"""

    def __init__(self, target: Any, distance: Optional[float] = None, reason: str = "target lies on the curve"):
        message = f"Cannot evaluate at {target}: {reason}"
        if distance is not None:
            message += f" (distance {distance:.3e})"
        super().__init__(message, {"target": target, "distance": distance, "reason": reason})


class RootFindingError(QuadratureError):
    """Exception raised when a root finder cannot be applied"""
    pass


class VandermondeError(QuadratureError):
    """Exception raised for singular Vandermonde systems"""

    def __init__(self, reason: str):
        super().__init__(f"Vandermonde solve failed: {reason}", {"reason": reason})


class RecurrenceDomainError(QuadratureError):
    """Exception raised when a singularity lies on the integration interval"""

    def __init__(self, location: complex):
        super().__init__(
            f"Singularity {location} lies on [-1, 1]; monomial integrals are undefined",
            {"location": location}
        )


class BranchError(QuadratureError):
    """Exception raised when a winding number is undefined"""

    def __init__(self, location: complex, distance: float):
        super().__init__(
            f"Point {location} is numerically on the panel boundary (distance {distance:.3e})",
            {"location": location, "distance": distance}
        )
