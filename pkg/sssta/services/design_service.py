"""
SSSTA Designer - Design Service

Runs one configured design end to end: scenario construction, method
dispatch, SST feasibility check, evaluation and persistence.
"""

import uuid
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from structlog.contextvars import bound_contextvars

from utils.metrics import RunMetrics

from ..errors import EXIT_NO_SOLUTION, EXIT_OK, EXIT_SOLVER_FAILURE, InvalidConfigError
from ..evaluation import BeamPattern, beam_pattern, compute_metrics, ula_count
from ..logging_config import get_logger
from ..placement_search import check_sst_feasibility, run_airms, run_imdsm
from ..problem_builder import DesignScenario, sample_scenario
from ..redesign import design_ula
from ..schemas.config import RunConfig, parse_run_config
from ..schemas.report import DesignReport
from .report_writer import ReportWriter

logger = get_logger("sssta.design_service")

_STATUS_EXIT = {
    "ok": EXIT_OK,
    "no_solution": EXIT_NO_SOLUTION,
    "empty": EXIT_NO_SOLUTION,
    "solver_failure": EXIT_SOLVER_FAILURE,
}


@dataclass
class RunOutcome:
    """A finished (or failed) design with its pattern and CLI exit code."""
    report: DesignReport
    pattern: Optional[BeamPattern] = None

    @property
    def exit_code(self) -> int:
        return _STATUS_EXIT[self.report.status]


class DesignService:
    """Service for designing, evaluating and persisting arrays."""

    def design(self, config: RunConfig) -> RunOutcome:
        """
        Run the configured method and evaluate the result.

        Args:
            config: Validated run configuration

        Returns:
            Outcome with metrics filled in when the design produced dipoles

        Raises:
            InvalidScenarioError: Inconsistent scenario geometry
            FeasibilityError: The design breaks the SST rules
        """
        with bound_contextvars(run_id=uuid.uuid4().hex[:8], method=config.method):
            metrics = RunMetrics()
            metrics.start()
            scenario = config.to_scenario()
            metrics.add_step("scenario")

            report = self._dispatch(config, scenario)
            metrics.add_step("design")
            report = report.model_copy(update={"config": config.model_dump(mode="json")})

            pattern = None
            if report.status == "ok" and report.placements:
                separation = (
                    config.evaluation.ula_spacing if config.method == "ula" else scenario.min_separation
                )
                check_sst_feasibility(report, separation, scenario.aperture)
                pattern = beam_pattern(
                    report.dipoles(),
                    scenario.mainlobe,
                    config.evaluation.pattern_step,
                    scenario.convention,
                )
                metrics.complete()
                report.metrics = compute_metrics(
                    report,
                    sample_scenario(scenario),
                    ula_count(scenario.aperture, config.evaluation.ula_spacing),
                    wall_time=metrics.wall_time,
                    pattern_step=config.evaluation.pattern_step,
                    pattern=pattern,
                )
                metrics.add_step("evaluation")

            logger.info(
                "design.finished",
                status=report.status,
                dipoles=len(report.placements),
                **metrics.to_dict(),
            )
            return RunOutcome(report=report, pattern=pattern)

    def _dispatch(self, config: RunConfig, scenario: DesignScenario) -> DesignReport:
        solver_cfg = config.to_solver_config()
        if config.method == "cs-imdsm":
            return run_imdsm(scenario, "cs", config.to_imdsm_config(), solver_cfg)
        if config.method == "bcs-imdsm":
            return run_imdsm(
                scenario,
                "bcs",
                config.to_imdsm_config(),
                solver_cfg,
                config.to_mt_config(),
                config.to_st_config(),
            )
        if config.method == "airms":
            return run_airms(scenario, config.to_reweight_config(), solver_cfg, config.flags.airms_redesign)
        return design_ula(scenario, config.evaluation.ula_spacing)

    def run(self, config: RunConfig, output_dir: Path) -> RunOutcome:
        """Design and write ``report.json``, ``placements.csv`` and ``pattern.csv``."""
        outcome = self.design(config)
        writer = ReportWriter(output_dir)
        writer.write_report(outcome.report)
        if outcome.report.placements:
            writer.write_placements(outcome.report.dipoles())
        if outcome.pattern is not None:
            writer.write_pattern(outcome.pattern)
        return outcome

    def evaluate(self, report_path: Path, pattern_step: float) -> RunOutcome:
        """
        Re-evaluate a saved report at a new pattern resolution.

        The report's metrics are recomputed (keeping wall time) and
        ``report.json`` and ``pattern.csv`` are rewritten in its directory.

        Raises:
            InvalidConfigError: The file is not a readable report
        """
        report_path = Path(report_path)
        try:
            report = DesignReport.model_validate_json(report_path.read_text(encoding="utf-8"))
        except OSError as e:
            raise InvalidConfigError(f"cannot read report {report_path}: {e}") from e
        except ValueError as e:
            raise InvalidConfigError(f"invalid report {report_path}: {e}") from e

        config = parse_run_config(report.config)
        scenario = config.to_scenario()

        if not report.placements:
            logger.info("evaluate.no_placements", status=report.status)
            return RunOutcome(report=report)

        pattern = beam_pattern(report.dipoles(), scenario.mainlobe, pattern_step, scenario.convention)
        wall_time = report.metrics.wall_time if report.metrics else 0.0
        report.metrics = compute_metrics(
            report,
            sample_scenario(scenario),
            ula_count(scenario.aperture, config.evaluation.ula_spacing),
            wall_time=wall_time,
            pattern_step=pattern_step,
            pattern=pattern,
        )
        writer = ReportWriter(report_path.parent)
        writer.write_report(report)
        writer.write_pattern(pattern)
        return RunOutcome(report=report, pattern=pattern)
