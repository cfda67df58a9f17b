"""
SSSTA Designer - Run Configuration Schemas

Pydantic models for TOML run configurations including:
- Scenario geometry, sampling and polarization
- Solver, BCS and reweighting controls
- Behaviour flags and evaluation settings
"""

import sys

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - Python 3.10 backport
    import tomli as tomllib
from pathlib import Path
from typing import Any, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from ..array_model import PolarizationConvention, SourceState
from ..bayesian_engine import EvidenceForm, MtBcsConfig, StBcsConfig
from ..errors import InvalidConfigError
from ..placement_search import BcsEngine, ImdsmConfig, MergeRule
from ..problem_builder import (
    DEFAULT_MAINLOBE_HALFWIDTH,
    AngularRegion,
    DesignScenario,
    mainlobe_centred_regions,
)
from ..reweighting import FirstLocationRule, ReweightConfig
from ..socp_core import SolverConfig
from .report import MethodName


# =============================================================================
# SECTIONS
# =============================================================================

def _check_half_plane(phi: float) -> float:
    if phi not in (90.0, -90.0):
        raise ValueError("phi must be 90 or -90")
    return float(phi)


class RegionSection(BaseModel):
    """One sidelobe region on a phi half-plane."""
    model_config = ConfigDict(extra="forbid")

    phi: float = Field(..., description="Half-plane, +90 or -90 degrees")
    theta_start: float = Field(..., ge=0, le=90)
    theta_end: float = Field(..., ge=0, le=90)
    step: float = Field(default=1.0, gt=0)

    @field_validator("phi")
    @classmethod
    def _half_plane(cls, v: float) -> float:
        return _check_half_plane(v)

    @model_validator(mode="after")
    def _ordered(self) -> "RegionSection":
        if self.theta_end < self.theta_start:
            raise ValueError("theta_end must not be below theta_start")
        return self

    def to_region(self) -> AngularRegion:
        return AngularRegion(float(self.phi), self.theta_start, self.theta_end, self.step)


class ScenarioSection(BaseModel):
    """Geometry and sampling. Without ``sidelobes`` the regions are built around the mainlobe."""
    model_config = ConfigDict(extra="forbid")

    mainlobe_theta: float = Field(default=0.0, ge=0, le=90, description="Degrees")
    mainlobe_phi: float = 90.0
    gamma: float = Field(default=45.0, ge=0, le=90, description="Auxiliary polarization angle, degrees")
    eta: float = Field(default=100.0, ge=-180, lt=180, description="Polarization phase difference, degrees")
    sidelobes: Optional[list[RegionSection]] = None
    mainlobe_halfwidth: float = Field(default=DEFAULT_MAINLOBE_HALFWIDTH, gt=0, le=90)
    region_step: float = Field(default=1.0, gt=0)
    aperture: float = Field(default=10.0, ge=0, description="Wavelengths")
    grid_count: int = Field(default=301, ge=1)
    alpha: float = Field(default=0.5, ge=0, le=1)
    min_separation: float = Field(default=0.8, gt=0, description="Wavelengths")

    @field_validator("mainlobe_phi")
    @classmethod
    def _half_plane(cls, v: float) -> float:
        return _check_half_plane(v)


class SolverSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    feastol: float = Field(default=1e-8, gt=0)
    abstol: float = Field(default=1e-8, gt=0)
    reltol: float = Field(default=1e-8, gt=0)
    max_iterations: int = Field(default=200, ge=1)
    zero_threshold: float = Field(default=1e-6, gt=0, lt=1)


class BcsSection(BaseModel):
    """Multi-task and single-task BCS controls."""
    model_config = ConfigDict(extra="forbid")

    engine: BcsEngine = "multi-task"
    beta_mt1: float = Field(default=1e-2, gt=0)
    beta_mt2: float = Field(default=1e-2, gt=0)
    noise_variance: Optional[float] = Field(default=None, gt=0)
    max_em_iterations: int = Field(default=1000, ge=1)
    hyper_tol: float = Field(default=1e-6, gt=0)
    prune_threshold: float = Field(default=1e12, gt=0)
    noise_floor_stop: bool = True
    learn_noise: bool = True
    beta_st3: float = Field(default=0.0, ge=0)
    beta_st4: float = Field(default=0.0, ge=0)
    beta_st5: float = Field(default=0.0, ge=0)
    beta_st6: float = Field(default=0.0, ge=0)


class ReweightSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    epsilon: Optional[float] = Field(default=None, gt=0)
    epsilon_scale: float = Field(default=1e-3, gt=0)
    max_iterations: int = Field(default=20, ge=1)
    airms_max_iterations: int = Field(default=10, ge=1)
    first_location_rule: FirstLocationRule = "first-active"


class FlagsSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    polarization_sign_convention: PolarizationConvention = "as-printed"
    cs_residual: bool = True
    merge_rule: MergeRule = "centroid"
    cluster_threshold: float = Field(default=1e-2, gt=0, lt=1)
    evidence_form: EvidenceForm = "standard"
    airms_redesign: bool = True


class EvaluationSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    pattern_step: float = Field(default=0.1, gt=0, le=10)
    ula_spacing: float = Field(default=0.5, gt=0)


# =============================================================================
# RUN CONFIG
# =============================================================================

class RunConfig(BaseModel):
    """A complete design run as read from a TOML file."""
    model_config = ConfigDict(extra="forbid")

    schema_version: Literal[1] = 1
    method: MethodName
    output_dir: str = "output"
    seed: int = 0
    scenario: ScenarioSection = Field(default_factory=ScenarioSection)
    solver: SolverSection = Field(default_factory=SolverSection)
    bcs: BcsSection = Field(default_factory=BcsSection)
    reweight: ReweightSection = Field(default_factory=ReweightSection)
    flags: FlagsSection = Field(default_factory=FlagsSection)
    evaluation: EvaluationSection = Field(default_factory=EvaluationSection)

    def to_scenario(self) -> DesignScenario:
        """
        Core scenario for this configuration.

        Raises:
            InvalidScenarioError: Inconsistent geometry (e.g. mainlobe inside a region)
        """
        s = self.scenario
        mainlobe = SourceState(s.mainlobe_theta, float(s.mainlobe_phi), s.gamma, s.eta)
        if s.sidelobes is None:
            if s.mainlobe_phi != 90:
                raise InvalidConfigError(
                    "sidelobes must be given explicitly when mainlobe_phi is -90",
                    field="scenario.sidelobes",
                )
            regions = mainlobe_centred_regions(s.mainlobe_theta, s.mainlobe_halfwidth, s.region_step)
        else:
            regions = tuple(region.to_region() for region in s.sidelobes)
        return DesignScenario(
            mainlobe=mainlobe,
            sidelobe_regions=regions,
            aperture=s.aperture,
            grid_count=s.grid_count,
            alpha=s.alpha,
            min_separation=s.min_separation,
            convention=self.flags.polarization_sign_convention,
        )

    def to_solver_config(self) -> SolverConfig:
        return SolverConfig(**self.solver.model_dump())

    def to_mt_config(self) -> MtBcsConfig:
        b = self.bcs
        return MtBcsConfig(
            beta_mt1=b.beta_mt1,
            beta_mt2=b.beta_mt2,
            noise_variance=b.noise_variance,
            max_em_iterations=b.max_em_iterations,
            hyper_tol=b.hyper_tol,
            prune_threshold=b.prune_threshold,
            evidence_form=self.flags.evidence_form,
            noise_floor_stop=b.noise_floor_stop,
        )

    def to_st_config(self) -> StBcsConfig:
        b = self.bcs
        return StBcsConfig(
            noise_variance=b.noise_variance,
            max_em_iterations=b.max_em_iterations,
            hyper_tol=b.hyper_tol,
            prune_threshold=b.prune_threshold,
            learn_noise=b.learn_noise,
            beta_st3=b.beta_st3,
            beta_st4=b.beta_st4,
            beta_st5=b.beta_st5,
            beta_st6=b.beta_st6,
        )

    def to_reweight_config(self) -> ReweightConfig:
        return ReweightConfig(**self.reweight.model_dump())

    def to_imdsm_config(self) -> ImdsmConfig:
        return ImdsmConfig(
            merge_rule=self.flags.merge_rule,
            cs_residual=self.flags.cs_residual,
            cluster_threshold=self.flags.cluster_threshold,
            bcs_engine=self.bcs.engine,
        )


def _field_path(error: dict[str, Any]) -> str:
    return ".".join(str(part) for part in error.get("loc", ()))


def parse_run_config(data: dict[str, Any]) -> RunConfig:
    """
    Validate an already-parsed config mapping.

    Raises:
        InvalidConfigError: Unknown keys, wrong types or out-of-range values
    """
    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        field = _field_path(first)
        raise InvalidConfigError(f"{field}: {first['msg']}", field=field) from e


def load_run_config(path: str | Path) -> RunConfig:
    """
    Read and validate a TOML run configuration.

    Args:
        path: Config file path

    Returns:
        Validated RunConfig

    Raises:
        InvalidConfigError: Unreadable file, TOML syntax error or schema violation
    """
    path = Path(path)
    try:
        with path.open("rb") as f:
            data = tomllib.load(f)
    except OSError as e:
        raise InvalidConfigError(f"cannot read config {path}: {e}") from e
    except tomllib.TOMLDecodeError as e:
        raise InvalidConfigError(f"invalid TOML in {path}: {e}") from e
    return parse_run_config(data)
