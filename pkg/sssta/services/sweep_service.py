"""
SSSTA Designer - Sweep Service

Runs one base configuration over a list of values of a single parameter
(grid size M, error bound alpha or mainlobe direction) and tabulates the
metrics. A failing point becomes an NA row and the sweep continues.
"""

from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Literal, Optional, Sequence

from ..errors import DesignError
from ..logging_config import get_logger, setup_logging
from ..schemas.config import RunConfig
from ..schemas.report import Metrics
from .design_service import DesignService
from .report_writer import ReportWriter

logger = get_logger("sssta.sweep_service")

SweepAxis = Literal["M", "alpha", "theta_ml"]
SWEEP_AXES: tuple[str, ...] = ("M", "alpha", "theta_ml")

SweepRow = tuple[float, str, Optional[Metrics]]


def apply_axis(config: RunConfig, axis: SweepAxis, value: float) -> RunConfig:
    """
    Copy of ``config`` with one swept parameter replaced.

    A ``theta_ml`` value moves the mainlobe to (value, phi=+90) and
    rebuilds the sidelobe regions around it.
    """
    if axis == "M":
        update = {"grid_count": int(round(value))}
    elif axis == "alpha":
        update = {"alpha": float(value)}
    elif axis == "theta_ml":
        update = {"mainlobe_theta": float(value), "mainlobe_phi": 90.0, "sidelobes": None}
    else:
        raise ValueError(f"unknown sweep axis {axis!r}")
    scenario = config.scenario.model_copy(update=update)
    # Re-validate so field bounds apply to swept values
    return RunConfig.model_validate({**config.model_dump(), "scenario": scenario.model_dump()})


def run_point(config: RunConfig, axis: SweepAxis, value: float) -> SweepRow:
    """One sweep point; any failure becomes an ``error`` row."""
    try:
        outcome = DesignService().design(apply_axis(config, axis, value))
    except (DesignError, ValueError) as e:
        logger.warning("sweep.point_failed", axis=axis, value=value, error=str(e))
        return float(value), "error", None
    except Exception as e:
        logger.exception("sweep.point_crashed", axis=axis, value=value, error=str(e))
        return float(value), "error", None
    return float(value), outcome.report.status, outcome.report.metrics


def _init_worker(level: str, use_json: bool) -> None:
    setup_logging(level, use_json=use_json)


class SweepService:
    """Service for parameter sweeps."""

    def __init__(self, log_level: str = "INFO", log_json: bool = True):
        self.log_level = log_level
        self.log_json = log_json

    def sweep(
        self,
        config: RunConfig,
        axis: SweepAxis,
        values: Sequence[float],
        jobs: int = 1,
    ) -> list[SweepRow]:
        """
        Run every sweep point.

        Args:
            config: Base configuration
            axis: Parameter to vary
            values: Values in output order
            jobs: Worker processes; 1 runs in-process

        Returns:
            Rows in the order of ``values``
        """
        logger.info("sweep.started", axis=axis, points=len(values), jobs=jobs)
        if jobs <= 1 or len(values) <= 1:
            return [run_point(config, axis, v) for v in values]

        with ProcessPoolExecutor(
            max_workers=jobs,
            initializer=_init_worker,
            initargs=(self.log_level, self.log_json),
        ) as pool:
            return list(pool.map(run_point, [config] * len(values), [axis] * len(values), values))

    def run(
        self,
        config: RunConfig,
        axis: SweepAxis,
        values: Sequence[float],
        output_dir: Path,
        jobs: int = 1,
    ) -> Path:
        """Sweep and write ``sweep_<axis>.csv``."""
        rows = self.sweep(config, axis, values, jobs)
        return ReportWriter(output_dir).write_sweep(axis, rows)
