"""
SSSTA Designer - Services

Pipeline orchestration, sweeps and report persistence.
"""

from .design_service import DesignService, RunOutcome
from .report_writer import ReportWriter
from .sweep_service import SWEEP_AXES, SweepService

__all__ = ["DesignService", "RunOutcome", "ReportWriter", "SWEEP_AXES", "SweepService"]
