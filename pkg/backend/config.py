"""
Configuration management for the panel quadrature toolkit
"""

from pathlib import Path
from typing import List
from pydantic import Field
from pydantic_settings import BaseSettings

try:
    from pydantic import validator
except ImportError:
    from pydantic import field_validator as validator
import tempfile


UPSAMPLE_MODES = ("none", "upsample", "upsample-direct")


class QuadratureSettings(BaseSettings):
    """Defaults for near-field quadrature"""

    # Discretization
    n: int = Field(16, description="Gauss-Legendre nodes per panel")
    tolerance: float = Field(1e-10, description="Target tolerance; sets the critical Bernstein radius")
    upsample_mode: str = Field("upsample", description="One of none, upsample, upsample-direct")
    upsample_factor: int = Field(2, description="Upsampled node count is this times n")

    # Near-candidate test
    distance_multiplier: float = Field(1.0, description="Near candidates lie within this times the panel length")

    # Root finding
    newton_max_iter: int = Field(20, description="Newton iterations before giving up or switching to Muller")
    muller_max_iter: int = Field(50, description="Muller iterations for 3D root pairs")
    companion_fallback: bool = Field(False, description="Use companion-matrix roots near Schwarz singularities")
    schwarz_factor: float = Field(1.1, description="Companion trigger when rho(t_*) is below this times rho_eps")

    # Recursion caps
    max_depth_panelize: int = Field(30, description="Bisection cap for adaptive panelization")
    max_depth_adaptive: int = Field(40, description="Bisection cap for the adaptive reference quadrature")

    @validator('tolerance')
    def validate_tolerance(cls, v):
        if not 0.0 < v < 1.0:
            raise ValueError('tolerance must lie in (0, 1)')
        return v

    @validator('n')
    def validate_n(cls, v):
        if not 1 <= v <= 64:
            raise ValueError('n must lie in [1, 64]')
        return v

    @validator('upsample_mode')
    def validate_mode(cls, v):
        if v not in UPSAMPLE_MODES:
            raise ValueError(f'upsample_mode must be one of {", ".join(UPSAMPLE_MODES)}')
        return v

    class Config:
        env_prefix = "SSQ_"
        env_file = ".env"
        env_file_encoding = "utf-8"
        extra = "ignore"


class DemoSettings(BaseSettings):
    """Settings for the bundled experiments"""

    output_dir: Path = Field(
        default_factory=lambda: Path(tempfile.gettempdir()) / "panelquad",
        description="Where demo results are written when no --out is given"
    )
    seed: int = Field(0, description="Seed for random target clouds")
    grid: str = Field("60x60", description="Default evaluation grid, WxH")
    slender_radius: float = Field(1e-3, description="Fiber radius in the slender-body demo")

    @validator('output_dir')
    def create_directories(cls, v):
        if v:
            v.mkdir(parents=True, exist_ok=True)
        return v

    class Config:
        env_prefix = "DEMO_"
        env_file = ".env"
        env_file_encoding = "utf-8"
        extra = "ignore"


class AppConfig(BaseSettings):
    """Main application configuration"""

    # API settings
    api_host: str = Field("127.0.0.1", description="API host")
    api_port: int = Field(8000, description="API port")
    cors_origins: List[str] = Field(
        default_factory=lambda: [
            "http://localhost:3000",
            "http://127.0.0.1:3000",
        ],
        description="Allowed CORS origins"
    )

    # Performance settings
    max_workers: int = Field(4, description="Worker threads for target sweeps")

    log_level: str = Field("INFO", description="Root log level for the CLI and API")

    class Config:
        env_prefix = "APP_"
        env_file = ".env"
        env_file_encoding = "utf-8"
        extra = "ignore"


class Settings:
    """Singleton settings manager"""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
            cls._instance._initialized = False
        return cls._instance

    def __init__(self):
        if self._initialized:
            return

        self.app = AppConfig()
        self.quad = QuadratureSettings()
        self.demo = DemoSettings()
        self._initialized = True

    def reload(self):
        """Reload configuration from environment and files"""
        self.app = AppConfig()
        self.quad = QuadratureSettings()
        self.demo = DemoSettings()


# Global settings instance
settings = Settings()
