"""JSON run configuration.

Field names carry their units.  A minimal file is ``{"scenario": "case1"}``;
everything else has defaults matching the M=10, N=32, 1 GHz / 200 MHz setup.
"""
from __future__ import annotations

import json
from importlib import resources
from pathlib import Path
from typing import Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .beampattern import C_LIGHT, RadarConfig, Region, Scenario, scenario_cases
from .solver import SolverParams

BUNDLED = ("case1", "case2", "case3")


class ConfigError(ValueError):
    """Unreadable or invalid configuration."""


class _Model(BaseModel):
    model_config = ConfigDict(extra="forbid")


class RadarModel(_Model):
    M: int = Field(10, ge=1)
    N: int = Field(32, ge=2)
    f_c_hz: float = 1e9
    B_hz: float = Field(200e6, gt=0)
    d_m: Optional[float] = Field(None, gt=0)
    c_m_per_s: float = Field(C_LIGHT, gt=0)
    theta_deg: Optional[list[float]] = None
    gain: Optional[float] = Field(None, gt=0)

    @model_validator(mode="after")
    def _even(self):
        if self.N % 2:
            raise ValueError("N must be even")
        return self

    def build(self) -> RadarConfig:
        return RadarConfig(
            M=self.M, N=self.N, f_c=self.f_c_hz, B=self.B_hz, d=self.d_m, c=self.c_m_per_s,
            theta_grid=self.theta_deg, gain=self.gain,
        )


class RegionModel(_Model):
    theta_deg: tuple[float, float]
    f_hz: tuple[float, float]
    amplitude: float = Field(ge=0)


class ScenarioModel(_Model):
    name: str = "custom"
    default_amplitude: float = Field(0.0, ge=0)
    regions: list[RegionModel] = []


class SolverModel(_Model):
    beta: float = Field(5e-5, gt=0)
    epsilon: float = Field(1e-3, gt=0)
    max_iter: int = Field(6, ge=1)
    safe_mode: bool = False
    zeta: Optional[float] = Field(None, gt=0)
    outer_max: int = Field(50, ge=1)

    def params(self) -> SolverParams:
        return SolverParams(beta=self.beta, epsilon=self.epsilon, max_iter=self.max_iter, safe_mode=self.safe_mode)


class MismatchModel(_Model):
    theta_steer_deg: float = Field(125.0, ge=0, le=180)
    M_R: Optional[int] = Field(None, ge=1)
    delta_deg: list[float] = [0.0, 10.0, 20.0]
    rx_spacing_m: Optional[float] = Field(None, gt=0)
    mode: Literal["pdr", "lfm", "coherent"] = "lfm"


class RunConfig(_Model):
    radar: RadarModel = RadarModel()
    scenario: Union[Literal["case1", "case2", "case3"], ScenarioModel] = "case1"
    solver: SolverModel = SolverModel()
    seed: int = Field(0, ge=0, lt=2**64)
    alpha: float = Field(0.0, ge=0)
    output_dir: str = "results"
    mismatch: MismatchModel = MismatchModel()

    def radar_config(self) -> RadarConfig:
        try:
            return self.radar.build()
        except ValueError as exc:
            raise ConfigError(f"radar: {exc}") from exc

    def build_scenario(self) -> Scenario:
        radar = self.radar
        if isinstance(self.scenario, str):
            return scenario_cases(radar.f_c_hz, radar.B_hz)[self.scenario]
        sc = self.scenario
        try:
            return Scenario(
                sc.name,
                tuple(Region(tuple(r.theta_deg), tuple(r.f_hz), r.amplitude) for r in sc.regions),
                sc.default_amplitude,
            )
        except ValueError as exc:
            raise ConfigError(f"scenario: {exc}") from exc

    def echo(self) -> dict:
        return self.model_dump(mode="json")


def _format_validation(exc: ValidationError, source: str) -> str:
    lines = [f"{source}: invalid configuration"]
    for err in exc.errors():
        loc = ".".join(str(p) for p in err["loc"]) or "<root>"
        lines.append(f"  {loc}: {err['msg']}")
    return "\n".join(lines)


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    try:
        return RunConfig.model_validate(raw)
    except ValidationError as exc:
        raise ConfigError(_format_validation(exc, source)) from exc


def bundled_text(name: str) -> str:
    if name not in BUNDLED:
        raise ConfigError(f"no bundled config named {name!r}")
    return resources.files("pdrwave").joinpath("configs", f"{name}.json").read_text()


def load_config(path: Union[str, Path]) -> RunConfig:
    """Load a JSON file; the bare names ``case1``..``case3`` select a bundled config."""
    p = Path(path)
    if not p.exists() and str(path) in BUNDLED:
        return parse_config(bundled_text(str(path)), f"bundled:{path}")
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from exc
    return parse_config(text, str(path))
