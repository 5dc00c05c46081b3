"""
Validated system, geometry and uncertainty parameters.

All values are stored in linear units; the before-validators accept the
unit-suffixed strings used in config files.
"""
from typing import Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from src.config import DEFAULT_KAPPA, GEOMETRY_DEFAULTS, SYSTEM_DEFAULTS
from .units import parse_power, parse_ratio

SPACES = ('r', 't')
NUM_EVES = 2  # one Eve per half-space

Point = Tuple[float, float, float]


class SystemParams(BaseModel):
    """Scalar constants of the downlink."""
    model_config = ConfigDict(extra='forbid', frozen=True, validate_default=True)

    N: int = Field(ge=1, description="BS antennas")
    M: int = Field(ge=1, description="STAR-RIS elements")
    J_r: int = Field(ge=0, description="Bobs in the reflection space")
    J_t: int = Field(ge=0, description="Bobs in the transmission space")
    noise_power: float = Field(SYSTEM_DEFAULTS['noise_power'], gt=0)
    p_max: float = Field(SYSTEM_DEFAULTS['p_max'], gt=0)
    amplifier_efficiency: float = Field(SYSTEM_DEFAULTS['amplifier_efficiency'], gt=0)
    p_bs: float = Field(SYSTEM_DEFAULTS['p_bs'], gt=0)
    p_user: float = Field(SYSTEM_DEFAULTS['p_user'], gt=0)
    p_element: float = Field(SYSTEM_DEFAULTS['p_element'], gt=0)
    min_rate: float = Field(SYSTEM_DEFAULTS['min_rate'], gt=0)
    max_leakage: float = Field(SYSTEM_DEFAULTS['max_leakage'], gt=0)
    reference_path_loss: float = Field(SYSTEM_DEFAULTS['reference_path_loss'], gt=0)
    exponent_bs_ris: float = Field(SYSTEM_DEFAULTS['exponent_bs_ris'], ge=0)
    exponent_direct: float = Field(SYSTEM_DEFAULTS['exponent_direct'], ge=0)
    exponent_ris_user: float = Field(SYSTEM_DEFAULTS['exponent_ris_user'], ge=0)
    rician_bs_ris: float = Field(SYSTEM_DEFAULTS['rician_bs_ris'], ge=0)
    rician_direct: float = Field(SYSTEM_DEFAULTS['rician_direct'], ge=0)
    rician_ris_user: float = Field(SYSTEM_DEFAULTS['rician_ris_user'], ge=0)

    @field_validator('noise_power', 'p_max', 'p_bs', 'p_user', 'p_element', mode='before')
    @classmethod
    def _power(cls, value):
        return parse_power(value)

    @field_validator('reference_path_loss', 'rician_bs_ris', 'rician_direct', 'rician_ris_user', mode='before')
    @classmethod
    def _ratio(cls, value):
        return parse_ratio(value)

    @model_validator(mode='after')
    def _check(self):
        if self.J_r + self.J_t < 1:
            raise ValueError("at least one Bob is required (J_r + J_t >= 1)")
        if self.min_rate < NUM_EVES * self.max_leakage:
            raise ValueError(
                f"min_rate {self.min_rate} must be at least the summed leakage limits {NUM_EVES * self.max_leakage}")
        return self

    @property
    def J(self) -> int:
        return self.J_r + self.J_t

    def users(self, k: int) -> int:
        return self.J_r if k == 0 else self.J_t

    @property
    def static_power(self) -> float:
        """P_B + J·P_U + M·P_r(b)."""
        return self.p_bs + self.J * self.p_user + self.M * self.p_element


class Geometry(BaseModel):
    """Node positions in meters. The surface plane is y = ris[1]."""
    model_config = ConfigDict(extra='forbid', frozen=True, validate_default=True)

    bs: Point = GEOMETRY_DEFAULTS['bs']
    ris: Point = GEOMETRY_DEFAULTS['ris']
    bob_center_r: Point = GEOMETRY_DEFAULTS['bob_center_r']
    eve_center_r: Point = GEOMETRY_DEFAULTS['eve_center_r']
    bob_center_t: Point = GEOMETRY_DEFAULTS['bob_center_t']
    eve_center_t: Point = GEOMETRY_DEFAULTS['eve_center_t']
    cluster_radius: float = Field(GEOMETRY_DEFAULTS['cluster_radius'], gt=0)

    @field_validator('bs', 'ris', 'bob_center_r', 'eve_center_r', 'bob_center_t', 'eve_center_t', mode='before')
    @classmethod
    def _point(cls, value):
        if isinstance(value, str):
            value = tuple(float(v) for v in value.replace('(', '').replace(')', '').split(','))
        return value

    @model_validator(mode='after')
    def _half_spaces(self):
        plane = self.ris[1]
        if self.bs[1] >= plane:
            raise ValueError("the BS must lie on the reflection side of the surface (bs.y < ris.y)")
        for name in ('bob_center_r', 'eve_center_r'):
            if getattr(self, name)[1] + self.cluster_radius >= plane:
                raise ValueError(f"{name} cluster must lie on the BS side of the surface")
        for name in ('bob_center_t', 'eve_center_t'):
            if getattr(self, name)[1] - self.cluster_radius <= plane:
                raise ValueError(f"{name} cluster must lie beyond the surface")
        return self

    def bob_center(self, k: int) -> Point:
        return self.bob_center_r if k == 0 else self.bob_center_t

    def eve_center(self, k: int) -> Point:
        return self.eve_center_r if k == 0 else self.eve_center_t


class UncertaintyConfig(BaseModel):
    """Maximum normalized estimation errors κ for the direct and cascaded links."""
    model_config = ConfigDict(extra='forbid', frozen=True)

    kappa_h_bob: float = Field(DEFAULT_KAPPA, ge=0, lt=1)
    kappa_g_bob: float = Field(DEFAULT_KAPPA, ge=0, lt=1)
    kappa_h_eve: float = Field(DEFAULT_KAPPA, ge=0, lt=1)
    kappa_g_eve: float = Field(DEFAULT_KAPPA, ge=0, lt=1)

    @classmethod
    def perfect(cls) -> "UncertaintyConfig":
        return cls(kappa_h_bob=0.0, kappa_g_bob=0.0, kappa_h_eve=0.0, kappa_g_eve=0.0)

    @property
    def is_perfect(self) -> bool:
        return not any((self.kappa_h_bob, self.kappa_g_bob, self.kappa_h_eve, self.kappa_g_eve))
