"""Experiment configuration: a JSON document validated into frozen models."""

from __future__ import annotations

import json
import math
from enum import Enum
from pathlib import Path
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .errors import ConfigError
from .spectral import BoxGeometry, ClassThresholds, ModeClass


class _Model(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class GeometryConfig(_Model):
    x_A: float = Field(gt=0, allow_inf_nan=False)
    x_B: float = Field(gt=0, allow_inf_nan=False)
    s_tilde: float = Field(gt=0, allow_inf_nan=False)

    def build(self) -> BoxGeometry:
        return BoxGeometry(self.x_A, self.x_B, self.s_tilde)


class ThresholdConfig(_Model):
    resonant: float = Field(0.3, gt=0)
    near_resonant: float = Field(3.0, gt=0)
    intermediate_fraction: float = Field(1.0 / 3.0, gt=0)

    @model_validator(mode="after")
    def _ordered(self):
        if self.near_resonant <= self.resonant:
            raise ValueError("near_resonant must exceed resonant")
        return self

    def build(self) -> ClassThresholds:
        return ClassThresholds(self.resonant, self.near_resonant, self.intermediate_fraction)


class ModesConfig(_Model):
    k_max: Optional[float] = Field(None, gt=0)
    pair: Optional[tuple[int, int]] = None
    thresholds: ThresholdConfig = ThresholdConfig()

    @model_validator(mode="after")
    def _selection(self):
        if self.k_max is None and self.pair is None:
            raise ValueError("give k_max, pair, or both")
        if self.pair is not None and (min(self.pair) < 0 or sum(self.pair) == 0):
            raise ValueError("pair indices must be >= 0 and not both zero")
        return self


class GridSpec(_Model):
    start: float = Field(gt=0)
    stop: float = Field(gt=0)
    num: int = Field(ge=2)
    spacing: Literal["log", "linear"] = "log"

    def values(self) -> list[float]:
        if self.spacing == "log":
            return [float(v) for v in np.geomspace(self.start, self.stop, self.num)]
        return [float(v) for v in np.linspace(self.start, self.stop, self.num)]


class Units(str, Enum):
    """How a frequency grid is expressed: absolute, or in units of 1/tau_0."""

    ABSOLUTE = "absolute"
    INVERSE_TAU0 = "inverse_tau0"


class CurveConfig(_Model):
    mode_class: ModeClass = Field(alias="class")
    eta: float = Field(allow_inf_nan=False)

    model_config = ConfigDict(extra="forbid", frozen=True, populate_by_name=True)


class DecoherenceConfig(_Model):
    tau_d: Optional[float] = Field(None, gt=0)
    omega_d: Optional[list[float]] = None
    omega_d_grid: Optional[GridSpec] = None
    grid_units: Units = Units.ABSOLUTE
    basis: Literal["partition", "energy"] = "partition"
    lam: float = Field(1.0, ge=0, le=1)
    events: Literal["deterministic", "stochastic"] = "deterministic"
    seed: int = Field(0, ge=0, lt=2**64)
    horizon: Optional[float] = Field(None, gt=0)
    simulate: bool = False
    max_events: int = Field(20_000, ge=10)
    curves: list[CurveConfig] = Field(default_factory=list)

    @field_validator("omega_d")
    @classmethod
    def _positive(cls, v):
        if v is not None and (not v or any(not (math.isfinite(w) and w > 0) for w in v)):
            raise ValueError("omega_d values must be finite and > 0")
        return v


class EnsembleMember(_Model):
    weight: float = Field(ge=0)
    omega_l: float = Field(0.0, allow_inf_nan=False)
    delta_omega_l: float = Field(0.0, allow_inf_nan=False)
    omega_0l: float = Field(0.0, allow_inf_nan=False)


class EnvironmentConfig(_Model):
    model: Literal["EnergyDiagonal", "SectionA"] = "SectionA"
    ensemble: list[EnsembleMember] = Field(default_factory=lambda: [EnsembleMember(weight=1.0)])

    @field_validator("ensemble")
    @classmethod
    def _simplex(cls, v):
        if not v or abs(sum(m.weight for m in v) - 1.0) > 1e-12:
            raise ValueError("ensemble weights must sum to 1")
        return v


class EvolveConfig(_Model):
    t_max: Optional[float] = Field(None, gt=0)
    samples: int = Field(201, ge=2)


class OracleConfig(_Model):
    n: int = Field(4000, ge=2000)
    steps_per_period: int = Field(4000, ge=100)
    barrier_width: Optional[float] = Field(None, gt=0)
    s_hat: float = Field(20.0, gt=0)


class OutputConfig(_Model):
    dir: str = "out"
    modes: str = "modes.csv"
    trajectory: str = "trajectory.csv"
    rates: str = "rates.csv"
    regime: str = "regime.csv"
    environment: str = "environment.csv"
    report: str = "report.csv"


class ExperimentConfig(_Model):
    geometry: GeometryConfig
    modes: ModesConfig
    decoherence: DecoherenceConfig = DecoherenceConfig()
    environment: EnvironmentConfig = EnvironmentConfig()
    evolve: EvolveConfig = EvolveConfig()
    oracle: OracleConfig = OracleConfig()
    output: OutputConfig = OutputConfig()
    normalized: bool = False
    threads: int = Field(1, ge=1)


def _format_errors(exc: ValidationError) -> list[str]:
    out = []
    for err in exc.errors():
        loc = ".".join(str(p) for p in err["loc"]) or "<root>"
        out.append(f"{loc}: {err['msg']}")
    return out


def parse_config(data: dict) -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(_format_errors(exc)) from None


def load_config(path) -> ExperimentConfig:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError([f"{p}: {exc.strerror or exc}"]) from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"{p}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}"]) from None
    if not isinstance(data, dict):
        raise ConfigError([f"{p}: top level must be an object"])
    return parse_config(data)


def dump_config(cfg: ExperimentConfig) -> str:
    """Canonical JSON form; loading it yields an equal configuration."""
    return json.dumps(cfg.model_dump(mode="json", by_alias=True), indent=2, sort_keys=True) + "\n"
