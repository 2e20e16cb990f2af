"""Config-file ingestion.

The on-disk format is TOML with four sections (``[system]``,
``[alternating]``, ``[rounding]``, ``[experiment]``), validated by pydantic
models with the desk-scale defaults. Thresholds are written in dB and
converted to linear scale here; everything downstream is linear.
"""

from __future__ import annotations

import sys

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from .alternating import AltConfig
from .experiments import ExperimentSpec
from .sysmodel import SystemConfig

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

__all__ = ["ConfigError", "SpecModel", "load_spec", "spec_from_dict"]


class ConfigError(ValueError):
    """Invalid or unreadable configuration."""


def _db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


class SystemModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    n_src: int = Field(default=3, ge=1)
    n_relay: int = Field(default=3, ge=1)
    sigma2_r: float = Field(default=1.0, gt=0)
    sigma2_b: float = Field(default=1.0, gt=0)
    sigma2_e: float = Field(default=1.0, gt=0)
    r_b_db: float = 6.0
    r_e_db: float = 0.0
    eps: float = Field(default=0.01, ge=0)

    def to_core(self) -> SystemConfig:
        return SystemConfig(
            n_src=self.n_src,
            n_relay=self.n_relay,
            sigma2_r=self.sigma2_r,
            sigma2_b=self.sigma2_b,
            sigma2_e=self.sigma2_e,
            r_b=_db_to_linear(self.r_b_db),
            r_e=_db_to_linear(self.r_e_db),
            eps=self.eps,
        )


class AlternatingModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    xi0: float = 1e3
    tol: float = Field(default=1e-3, gt=0)
    n_max: int = Field(default=30, ge=1)
    p_s: float = Field(default=10.0, gt=0)

    def to_core(self) -> AltConfig:
        return AltConfig(xi0=self.xi0, tol=self.tol, n_max=self.n_max, p_s=self.p_s)


class RoundingModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    k_samples: int = Field(default=100, ge=1)
    rank_tol: float = Field(default=1e-6, gt=0, lt=1)


class ExperimentModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    trials: int = Field(default=100, ge=1)
    eps_values: list[float] = [0.01]
    r_b_db_values: list[float] = [3.0, 6.0, 9.0]
    r_e_db_values: list[float] = [-3.0, 0.0, 3.0]
    eve_samples: int = Field(default=500, ge=1)
    root_seed: int = 1234
    include_sigma_e: bool = False
    output_dir: str = "out"
    workers: int = Field(default=1, ge=1)
    max_polish: int = Field(default=5, ge=0)


class SpecModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    system: SystemModel = SystemModel()
    alternating: AlternatingModel = AlternatingModel()
    rounding: RoundingModel = RoundingModel()
    experiment: ExperimentModel = ExperimentModel()

    def to_core(self) -> ExperimentSpec:
        exp = self.experiment
        if not exp.eps_values or any(e < 0 for e in exp.eps_values):
            raise ConfigError("experiment.eps_values must be non-empty and >= 0")
        if not exp.r_b_db_values or not exp.r_e_db_values:
            raise ConfigError("threshold sweep lists must be non-empty")
        return ExperimentSpec(
            system=self.system.to_core(),
            alt=self.alternating.to_core(),
            k_samples=self.rounding.k_samples,
            rank_tol=self.rounding.rank_tol,
            trials=exp.trials,
            eps_values=tuple(exp.eps_values),
            r_b_values=tuple(_db_to_linear(v) for v in exp.r_b_db_values),
            r_e_values=tuple(_db_to_linear(v) for v in exp.r_e_db_values),
            eve_samples=exp.eve_samples,
            root_seed=exp.root_seed,
            include_sigma_e=exp.include_sigma_e,
            output_dir=exp.output_dir,
            workers=exp.workers,
            max_polish=exp.max_polish,
        )


def spec_from_dict(data: dict) -> ExperimentSpec:
    try:
        return SpecModel.model_validate(data).to_core()
    except ValidationError as exc:
        raise ConfigError(str(exc)) from exc


def load_spec(path: str) -> ExperimentSpec:
    """Parse and validate a TOML config file into an ExperimentSpec."""
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path!r}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML in {path!r}: {exc}") from exc
    return spec_from_dict(data)
