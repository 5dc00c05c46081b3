"""
INI experiment configuration.

    [system]       SystemParams fields (powers with units)
    [geometry]     Geometry fields, points as "x, y, z"
    [uncertainty]  UncertaintyConfig fields
    [campaign]     schemes, sweep, values, seeds, first_seed, output
    [optimizer]    AOConfig fields; pccp_* and ts_* keys fill the nested settings
"""
import configparser
import logging
import math
import os
from typing import Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from src.channel import Geometry, SystemParams, UncertaintyConfig, parse_power
from src.config import PROFILES, RESULTS_DIR
from src.metrics import Protocol
from src.optimizer import AOConfig

logger = logging.getLogger(__name__)

SECTIONS = ('system', 'geometry', 'uncertainty', 'campaign', 'optimizer')
SWEEP_AXES = ('p_max', 'M', 'N', 'kappa_g', 'ris_x', 'none')
SCHEMES = tuple(f"{access}-{p.value}" for access in ("NOMA", "OMA") for p in Protocol)


class ConfigError(ValueError):
    """Invalid experiment configuration; the message names section.field."""


def normalize_scheme(name: str) -> str:
    """'ES' -> 'NOMA-ES'; access and protocol are case-insensitive."""
    name = name.strip().upper()
    if '-' not in name:
        name = f"NOMA-{name}"
    if name not in SCHEMES:
        raise ValueError(f"unknown scheme '{name}', expected one of {', '.join(SCHEMES)}")
    return name


def split_scheme(name: str) -> Tuple[str, Protocol]:
    access, protocol = normalize_scheme(name).split('-')
    return access, Protocol(protocol)


def _split_list(value) -> List[str]:
    if isinstance(value, str):
        return [v.strip() for v in value.split(',') if v.strip()]
    return list(value)


class CampaignConfig(BaseModel):
    model_config = ConfigDict(extra='forbid', frozen=True)

    schemes: Tuple[str, ...] = ("NOMA-ES",)
    sweep: Literal['p_max', 'M', 'N', 'kappa_g', 'ris_x', 'none'] = 'none'
    values: Tuple[float, ...] = ()
    seeds: int = Field(5, ge=1)
    first_seed: int = Field(0, ge=0)
    output: Optional[str] = None

    @field_validator('schemes', mode='before')
    @classmethod
    def _schemes(cls, value):
        schemes = [normalize_scheme(s) for s in _split_list(value)]
        if not schemes:
            raise ValueError("at least one scheme is required")
        return tuple(dict.fromkeys(schemes))

    @model_validator(mode='before')
    @classmethod
    def _values(cls, data):
        if isinstance(data, dict) and 'values' in data:
            raw = _split_list(data['values'])
            parse = parse_power if data.get('sweep') == 'p_max' else float
            data = {**data, 'values': tuple(parse(v) for v in raw)}
        return data

    @model_validator(mode='after')
    def _check(self):
        if self.sweep == 'none':
            if self.values:
                raise ValueError("values must be empty when sweep is none")
            return self
        if not self.values:
            raise ValueError(f"sweep over {self.sweep} needs at least one value")
        if not all(math.isfinite(v) for v in self.values):
            raise ValueError("sweep values must be finite")
        if list(self.values) != sorted(self.values):
            raise ValueError("sweep values must be sorted ascending")
        if self.sweep in ('M', 'N') and any(v < 1 or v != int(v) for v in self.values):
            raise ValueError(f"{self.sweep} sweep values must be positive integers")
        return self

    @property
    def seed_list(self) -> List[int]:
        return list(range(self.first_seed, self.first_seed + self.seeds))

    @property
    def points(self) -> List[Optional[float]]:
        return list(self.values) if self.sweep != 'none' else [None]


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(extra='forbid', frozen=True)

    system: SystemParams
    geometry: Geometry = Geometry()
    uncertainty: UncertaintyConfig = UncertaintyConfig()
    campaign: CampaignConfig = CampaignConfig()
    optimizer: AOConfig = AOConfig()

    @property
    def output_dir(self) -> str:
        return self.campaign.output or RESULTS_DIR

    def at(self, value: Optional[float]) -> Tuple[SystemParams, Geometry, UncertaintyConfig]:
        """System, geometry and uncertainty at one sweep value."""
        axis = self.campaign.sweep
        params, geometry, uncertainty = self.system, self.geometry, self.uncertainty
        if axis == 'none' or value is None:
            return params, geometry, uncertainty
        if axis == 'p_max':
            params = SystemParams.model_validate({**params.model_dump(), 'p_max': float(value)})
        elif axis in ('M', 'N'):
            params = SystemParams.model_validate({**params.model_dump(), axis: int(value)})
        elif axis == 'kappa_g':
            uncertainty = UncertaintyConfig.model_validate(
                {**uncertainty.model_dump(), 'kappa_g_bob': value, 'kappa_g_eve': value})
        elif axis == 'ris_x':
            ris = (float(value),) + tuple(geometry.ris[1:])
            geometry = Geometry.model_validate({**geometry.model_dump(), 'ris': ris})
        return params, geometry, uncertainty


def _optimizer_section(raw: Dict[str, str]) -> Dict:
    out: Dict = {}
    for key, value in raw.items():
        for prefix in ('pccp', 'ts'):
            if key.startswith(prefix + '_'):
                out.setdefault(prefix, {})[key[len(prefix) + 1:]] = value
                break
        else:
            out[key] = value
    return out


def _format_error(e: ValidationError) -> str:
    lines = []
    for err in e.errors():
        loc = '.'.join(str(part) for part in err['loc']) or 'config'
        lines.append(f"{loc}: {err['msg']}")
    return '; '.join(lines)


def parse_config(sections: Dict[str, Dict], profile: Optional[str] = None,
                 seeds: Optional[int] = None, output: Optional[str] = None) -> ExperimentConfig:
    """
    Validate already-split sections, applying profile and command-line overrides.

    Raises:
        ConfigError: unknown section or profile, or any field-level violation
    """
    unknown = set(sections) - set(SECTIONS)
    if unknown:
        raise ConfigError(f"unknown sections: {', '.join(sorted(unknown))}")
    data = {name: dict(values) for name, values in sections.items()}
    data.setdefault('system', {})
    campaign = data.setdefault('campaign', {})
    if profile is not None:
        if profile not in PROFILES:
            raise ConfigError(f"unknown profile '{profile}', expected one of {', '.join(PROFILES)}")
        data['system'].update(PROFILES[profile]['system'])
        campaign['seeds'] = PROFILES[profile]['seeds']
    if seeds is not None:
        campaign['seeds'] = seeds
    if output is not None:
        campaign['output'] = output
    if 'optimizer' in data:
        data['optimizer'] = _optimizer_section(data['optimizer'])
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(_format_error(e)) from e


def load_config(path: str, profile: Optional[str] = None, seeds: Optional[int] = None,
                output: Optional[str] = None) -> ExperimentConfig:
    """
    Read and validate an INI experiment file.

    Args:
        path: INI file
        profile: 'desk' or 'paper' scale override
        seeds: seed count override
        output: output directory override

    Returns:
        ExperimentConfig with every quantity in linear units

    Raises:
        ConfigError: malformed file or invalid values
    """
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser(inline_comment_prefixes=('#', ';'))
    parser.optionxform = str
    try:
        parser.read(path, encoding='utf-8')
    except configparser.Error as e:
        logger.error(f"Failed to parse {path}: {e}")
        raise ConfigError(f"{path}: {e}") from e
    sections = {name: dict(parser.items(name)) for name in parser.sections()}
    config = parse_config(sections, profile, seeds, output)
    logger.info(f"Loaded {path}: {len(config.campaign.schemes)} schemes, sweep {config.campaign.sweep} "
                f"over {len(config.campaign.points)} points, {config.campaign.seeds} seeds")
    return config
