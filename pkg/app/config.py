"""
Configuration management for the product calculus toolkit.
Uses Pydantic Settings for environment variable handling.
"""

from pydantic_settings import BaseSettings, SettingsConfigDict
from typing import Literal


class Settings(BaseSettings):
    """Application settings loaded from environment variables."""

    # Application Settings
    debug: bool = False
    log_level: str = "WARNING"

    # Quadrature defaults (CLI flags --order, --tol, --budget override these)
    quad_kind: Literal["gauss", "adaptive"] = "adaptive"
    quad_order: int = 16
    quad_tolerance: float = 1e-10
    quad_budget: int = 2 ** 14
    quad_min_width: float = 1e-13

    # Sign detection for the signed product integral
    sign_samples: int = 1024
    sign_tolerance: float = 1e-12

    # Semantic comparison of product forms
    form_sample_points: int = 32
    form_tolerance: float = 1e-10

    # Simplex conditioning
    gram_tolerance: float = 1e-12
    case_min_gram: float = 1e-3

    # HTTP front end
    api_host: str = "0.0.0.0"
    api_port: int = 8000

    model_config = SettingsConfigDict(
        env_prefix="PRODCALC_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore"
    )


# Global settings instance
settings = Settings()
