"""
SSSTA Designer - Report Schemas

Pydantic models for design reports including:
- Placements (position, axis, complex weight as [re, im])
- Per-iteration log entries for IMDSM, reweighting and ULA passes
- Performance metrics
"""

from typing import Any, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field

from ..array_model import DipolePlacement, Orientation


# =============================================================================
# TYPE DEFINITIONS
# =============================================================================

OrientationName = Literal["X", "Y", "Z"]
MethodName = Literal["cs-imdsm", "bcs-imdsm", "airms", "ula"]
ReportStatus = Literal[
    "ok",              # Design produced and redesigned
    "no_solution",     # AIRMS failed to comply within its cap
    "empty",           # Nothing survived (e.g. alpha >= ||p_r||)
    "solver_failure",  # Inner solver aborted; log is partial
]
IterationStage = Literal["imdsm", "reweight", "ula-pass"]

REPORT_SCHEMA_VERSION = 1


# =============================================================================
# PLACEMENTS
# =============================================================================

class PlacementRecord(BaseModel):
    """One dipole as serialized in reports."""
    model_config = ConfigDict(extra="forbid")

    position: float = Field(..., ge=0, description="Location in wavelengths")
    orientation: OrientationName
    weight: tuple[float, float] = Field(..., description="Stored complex weight as [re, im]")

    @classmethod
    def from_placement(cls, placement: DipolePlacement) -> "PlacementRecord":
        return cls(
            position=float(placement.position),
            orientation=Orientation(placement.orientation).name,
            weight=(float(placement.weight.real), float(placement.weight.imag)),
        )

    def to_placement(self) -> DipolePlacement:
        return DipolePlacement(
            position=self.position,
            orientation=Orientation[self.orientation],
            weight=complex(self.weight[0], self.weight[1]),
        )


def records_from(placements: list[DipolePlacement]) -> list[PlacementRecord]:
    return [PlacementRecord.from_placement(p) for p in placements]


# =============================================================================
# ITERATION LOG
# =============================================================================

class IterationRecord(BaseModel):
    """One outer iteration of a design method."""
    model_config = ConfigDict(extra="forbid")

    iteration: int = Field(..., ge=1)
    stage: IterationStage
    solver_status: str
    active_groups: int = 0

    # IMDSM
    grid_origin: Optional[float] = None
    grid_span: Optional[float] = None
    grid_count: Optional[int] = None
    cluster: list[PlacementRecord] = Field(default_factory=list)
    merged: Optional[PlacementRecord] = None
    evidence: Optional[float] = None

    # Reweighting
    l0: Optional[int] = None
    objective: Optional[float] = None
    compliant: Optional[bool] = None


# =============================================================================
# METRICS
# =============================================================================

class Metrics(BaseModel):
    """Performance measures of a finished design."""
    model_config = ConfigDict(extra="forbid")

    aperture: float = Field(..., ge=0, description="max - min position, wavelengths")
    mean_adjacent_separation: float = Field(..., ge=0)
    single_dipole: bool = False
    dipole_count: int = Field(..., ge=0)
    percent_decrease: int
    response_error: float = Field(..., ge=0)
    response_error_pre_redesign: Optional[float] = None
    closest_sidelobe_db: Optional[float] = None
    closest_sidelobe_is_peak: bool = True
    achieved_mainlobe_deg: float
    mainlobe_displaced: bool = False
    iterations: int = Field(..., ge=0)
    wall_time: float = Field(..., ge=0, description="Seconds")


# =============================================================================
# REPORT
# =============================================================================

class DesignReport(BaseModel):
    """Final placements, metrics and iteration log of one run."""
    model_config = ConfigDict(extra="forbid")

    schema_version: int = REPORT_SCHEMA_VERSION
    method: MethodName
    status: ReportStatus
    message: Optional[str] = None
    config: dict[str, Any] = Field(default_factory=dict)
    placements: list[PlacementRecord] = Field(default_factory=list)
    pre_redesign_placements: list[PlacementRecord] = Field(default_factory=list)
    metrics: Optional[Metrics] = None
    iterations: list[IterationRecord] = Field(default_factory=list)
    bcs_settings: Optional[dict[str, Any]] = None

    def dipoles(self) -> list[DipolePlacement]:
        return [record.to_placement() for record in self.placements]

    def pre_redesign_dipoles(self) -> list[DipolePlacement]:
        return [record.to_placement() for record in self.pre_redesign_placements]

    @property
    def iteration_count(self) -> int:
        return len(self.iterations)
