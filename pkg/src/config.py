"""
Lab configuration via Pydantic Settings.
All values can be overridden via environment variables or a .env file.

Experiment numerics (grids, balls, optimizers) travel in the JSON configs
under configs/; the knobs here are the process-wide numerical defaults that
every experiment shares.
"""

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    # --- Finite differences ---
    fd_grad_step: float = 1e-6  # central differences of scalar losses
    fd_hess_step: float = 1e-5  # central differences of gradients

    # --- Lipschitz probes ---
    min_separation: float = Field(default=1e-4, gt=0)
    probe_pairs: int = 2000

    # --- Argmax oracle ---
    oracle_resolution: int = 201
    oracle_restarts: int = 8
    oracle_max_iter: int = 500
    ascent_grad_tol: float = 1e-10

    # --- Power iteration ---
    power_iter_tol: float = 1e-8
    power_iter_max: int = 200

    # --- Local-entropy quadrature ---
    quadrature_half_width: float = 6.0  # in standard deviations of the Gaussian factor
    quadrature_points: int = 64
    quadrature_rule: str = "midpoint"  # "midpoint" | "gauss_legendre"
    variance_floor: float = 1e-3

    # --- Surfaces ---
    discontinuity_factor: float = 5.0
    surface_pgd_steps: int = 20
    surface_pgd_step_fraction: float = 0.25  # eta_P = fraction * epsilon

    # --- Execution ---
    # 1 keeps every map sequential; >1 uses a thread pool with ordered results
    max_workers: int = Field(default=1, ge=1)
    output_dir: str = "runs"

    # --- Application ---
    app_env: str = "development"
    log_level: str = "INFO"


# Module-level singleton so all imports share the same instance.
settings = Settings()
