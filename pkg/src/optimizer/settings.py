"""
Optimizer settings.
"""
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator


class PccpConfig(BaseModel):
    """Penalty schedule of the passive-beamforming loop."""
    model_config = ConfigDict(extra='forbid', frozen=True)

    lambda0: float = Field(1e-3, gt=0)
    scaling: float = Field(10.0, gt=1)
    lambda_max: float = Field(1e6, gt=0)
    eps1: float = Field(1e-3, gt=0)
    eps2: float = Field(1e-4, gt=0)
    t_max: int = Field(30, ge=1)
    max_restarts: int = Field(3, ge=0)

    @model_validator(mode='after')
    def _check(self):
        if self.lambda_max <= self.lambda0:
            raise ValueError(f"lambda_max {self.lambda_max} must exceed lambda0 {self.lambda0}")
        return self


class TsSearchConfig(BaseModel):
    model_config = ConfigDict(extra='forbid', frozen=True)

    floor: float = Field(0.05, gt=0, lt=0.5)
    grid_points: int = Field(5, ge=3)
    tolerance: float = Field(0.02, gt=0)
    fallback_resolution: float = Field(0.02, gt=0)


class AOConfig(BaseModel):
    """Alternating-optimization driver settings."""
    model_config = ConfigDict(extra='forbid', frozen=True)

    tolerance: float = Field(1e-4, gt=0)
    max_iterations: int = Field(60, ge=1)
    monotonicity_slack: float = Field(1e-6, ge=0)
    psi_floor: float = Field(1e-6, gt=0)
    seed: int = 0
    restoration_iterations: int = Field(10, ge=1)
    restoration_restarts: int = Field(3, ge=1)
    solver: Optional[str] = None
    feasibility: float = Field(1e-6, gt=0)
    backoff_steps: int = Field(24, ge=0)
    backoff_db: float = Field(2.5, gt=0)
    ms_binary_tol: float = Field(1e-3, gt=0)
    pccp: PccpConfig = PccpConfig()
    ts: TsSearchConfig = TsSearchConfig()
