"""
Per-run quadrature configuration
"""

import math
import sys
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Optional

# Add backend directory to path
backend_dir = Path(__file__).parent.parent
if str(backend_dir) not in sys.path:
    sys.path.insert(0, str(backend_dir))

from config import settings
from exceptions import ConfigurationError
from services.geometry import GL_MAX_NODES, rho_crit


class UpsampleMode(Enum):
    """How near panels are resampled before special quadrature"""
    NONE = "none"
    UPSAMPLE = "upsample"
    UPSAMPLE_DIRECT = "upsample-direct"


class Scheme(Enum):
    """Quadrature scheme for near targets"""
    DIRECT = "direct"
    HO = "ho"
    SSQ = "ssq"


@dataclass
class QuadConfig:
    """Configuration for near evaluation"""

    # Discretization
    n: int = field(default_factory=lambda: settings.quad.n)
    mode: UpsampleMode = field(default_factory=lambda: UpsampleMode(settings.quad.upsample_mode))
    scheme: Scheme = Scheme.SSQ
    upsample_factor: int = field(default_factory=lambda: settings.quad.upsample_factor)

    # Accuracy
    tolerance: float = field(default_factory=lambda: settings.quad.tolerance)
    critical_radius: Optional[float] = None

    # Near-candidate test
    distance_multiplier: float = field(default_factory=lambda: settings.quad.distance_multiplier)

    # Root finding
    newton_max_iter: int = field(default_factory=lambda: settings.quad.newton_max_iter)
    muller_max_iter: int = field(default_factory=lambda: settings.quad.muller_max_iter)
    companion_fallback: bool = field(default_factory=lambda: settings.quad.companion_fallback)
    schwarz_factor: float = field(default_factory=lambda: settings.quad.schwarz_factor)

    def __post_init__(self):
        try:
            self.mode = UpsampleMode(self.mode.value if isinstance(self.mode, UpsampleMode) else self.mode)
        except ValueError:
            raise ConfigurationError("mode", self.mode, "expected none, upsample or upsample-direct")
        try:
            self.scheme = Scheme(self.scheme.value if isinstance(self.scheme, Scheme) else self.scheme)
        except ValueError:
            raise ConfigurationError("scheme", self.scheme, "expected direct, ho or ssq")
        if not 1 <= self.n <= GL_MAX_NODES:
            raise ConfigurationError("n", self.n, f"must lie in [1, {GL_MAX_NODES}]")
        if self.upsample_factor < 1 or self.upsampled_n > GL_MAX_NODES:
            raise ConfigurationError("upsample_factor", self.upsample_factor,
                                     f"upsampled node count must lie in [n, {GL_MAX_NODES}]")
        if not 0.0 < self.tolerance < 1.0:
            raise ConfigurationError("tolerance", self.tolerance, "must lie in (0, 1)")
        if self.critical_radius is not None and not self.critical_radius > 1.0:
            raise ConfigurationError("critical_radius", self.critical_radius, "must exceed 1")
        if self.distance_multiplier <= 0:
            raise ConfigurationError("distance_multiplier", self.distance_multiplier, "must be positive")
        if self.newton_max_iter < 1 or self.muller_max_iter < 1:
            raise ConfigurationError("newton_max_iter", self.newton_max_iter, "iteration caps must be positive")

    @property
    def rho_eps(self) -> float:
        """Critical Bernstein radius"""
        if self.critical_radius is not None:
            return float(self.critical_radius)
        return rho_crit(self.tolerance, self.n)

    @property
    def upsampled_n(self) -> int:
        return self.upsample_factor * self.n

    @property
    def direct_band_radius(self) -> float:
        """Lower edge of the upsampled-direct band"""
        return math.sqrt(self.rho_eps)
