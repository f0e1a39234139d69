from pydantic import BaseModel
import os


def _float_env(name: str, default: float) -> float:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        return float(raw)
    except ValueError:
        raise ValueError(f"{name} must be a number, got {raw!r}")


def _int_env(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        return int(raw)
    except ValueError:
        raise ValueError(f"{name} must be an integer, got {raw!r}")


class Settings(BaseModel):
    """Solver settings and configuration."""

    # Tolerances
    tolerance: float = 1e-7
    continuity_tolerance: float = 1e-9

    # Coalition solver
    outer_grid_points: int = 2048
    refine_passes: int = 3
    refine_factor: int = 32
    inner_grid_points: int = 512
    bisection_iterations: int = 64

    # Player caps
    max_retailers: int = 12
    max_shapley_players: int = 12

    # Verification suite
    verify_instances: int = 50
    verify_max_n: int = 3
    verify_candidates: int = 10_000
    verify_oracle_instances: int = 20
    no_pd_seed_cap: int = 200

    # Logging
    log_level: str = "WARNING"
    log_format: str = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

    @classmethod
    def from_env(cls) -> "Settings":
        """Load settings from environment variables."""
        from dotenv import load_dotenv

        # Load .env.local first, then .env (if they exist)
        load_dotenv(".env.local", override=True)
        load_dotenv(".env", override=False)

        tolerance = _float_env("RS_CHAIN_TOL", 1e-7)
        if tolerance <= 0:
            raise ValueError("RS_CHAIN_TOL must be positive")
        continuity_tolerance = _float_env("RS_CHAIN_CONTINUITY_TOL", 1e-9)
        if continuity_tolerance <= 0:
            raise ValueError("RS_CHAIN_CONTINUITY_TOL must be positive")

        return cls(
            tolerance=tolerance,
            continuity_tolerance=continuity_tolerance,
            outer_grid_points=_int_env("RS_CHAIN_OUTER_GRID", 2048),
            refine_passes=_int_env("RS_CHAIN_REFINE_PASSES", 3),
            refine_factor=_int_env("RS_CHAIN_REFINE_FACTOR", 32),
            inner_grid_points=_int_env("RS_CHAIN_INNER_GRID", 512),
            bisection_iterations=_int_env("RS_CHAIN_BISECTION_ITERS", 64),
            max_retailers=_int_env("RS_CHAIN_MAX_RETAILERS", 12),
            max_shapley_players=_int_env("RS_CHAIN_MAX_SHAPLEY_PLAYERS", 12),
            verify_instances=_int_env("RS_CHAIN_VERIFY_INSTANCES", 50),
            verify_max_n=_int_env("RS_CHAIN_VERIFY_MAX_N", 3),
            verify_candidates=_int_env("RS_CHAIN_VERIFY_CANDIDATES", 10_000),
            verify_oracle_instances=_int_env("RS_CHAIN_VERIFY_ORACLE_INSTANCES", 20),
            no_pd_seed_cap=_int_env("RS_CHAIN_VERIFY_NO_PD_SEEDS", 200),
            log_level=os.getenv("LOG_LEVEL", "WARNING"),
        )


# Global settings instance
settings = Settings.from_env()
