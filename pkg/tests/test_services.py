import csv

import numpy as np
import pytest

from sssta.array_model import DipolePlacement, Orientation
from sssta.errors import FeasibilityError
from sssta.placement_search import ImdsmConfig
from sssta.schemas import DesignReport, Metrics, records_from
from sssta.schemas.config import load_run_config, parse_run_config
from sssta.services import DesignService, ReportWriter, SweepService
from sssta.services.report_writer import SWEEP_COLUMNS, format_number
from sssta.services.sweep_service import apply_axis, run_point


def _read_csv(path):
    with path.open(newline="", encoding="utf-8") as f:
        return list(csv.reader(f))


def _metrics(**overrides):
    values = dict(
        aperture=9.33,
        mean_adjacent_separation=0.933,
        dipole_count=11,
        percent_decrease=48,
        response_error=0.5,
        closest_sidelobe_db=-31.47,
        achieved_mainlobe_deg=0.0,
        iterations=11,
        wall_time=1.5,
    )
    values.update(overrides)
    return Metrics(**values)


def test_format_number():
    assert format_number(1 / 3) == "0.333333"
    assert format_number(123456789.0) == "1.23457e+08"
    assert format_number(None) == "NA"
    assert format_number(True) == "true"
    assert format_number(7) == "7"


def test_placements_table_is_numbered_in_position_order(tmp_path):
    placements = [
        DipolePlacement(2.5, Orientation.Z, 0.25 - 1j),
        DipolePlacement(0.5, Orientation.X, 1.0),
    ]
    path = ReportWriter(tmp_path).write_placements(placements)
    assert _read_csv(path) == [
        ["n", "d_n_lambda", "orientation", "w_re", "w_im"],
        ["1", "0.5", "X", "1", "0"],
        ["2", "2.5", "Z", "0.25", "-1"],
    ]


def test_sweep_table_marks_failed_points(tmp_path):
    rows = [(101.0, "ok", _metrics()), (201.0, "error", None)]
    rows_read = _read_csv(ReportWriter(tmp_path).write_sweep("M", rows))
    assert rows_read[0] == SWEEP_COLUMNS
    assert rows_read[1][:2] == ["101", "ok"]
    assert rows_read[2][:2] == ["201", "error"]
    assert set(rows_read[2][2:]) == {"NA"}


def test_report_write_leaves_no_temporary_files(tmp_path):
    ReportWriter(tmp_path / "nested").write_report(DesignReport(method="ula", status="empty"))
    assert [p.name for p in (tmp_path / "nested").iterdir()] == ["report.json"]


def test_apply_axis():
    config = parse_run_config({"schema_version": 1, "method": "cs-imdsm"})
    assert apply_axis(config, "M", 101.0).scenario.grid_count == 101
    assert apply_axis(config, "alpha", 0.35).scenario.alpha == 0.35
    moved = apply_axis(config, "theta_ml", 40.0)
    assert moved.scenario.mainlobe_theta == 40.0
    assert moved.scenario.sidelobes is None
    assert config.scenario.mainlobe_theta == 0.0


def test_invalid_sweep_point_becomes_error_row(small_config):
    config = load_run_config(small_config())
    value, status, metrics = run_point(config, "alpha", 1.5)
    assert (value, status, metrics) == (1.5, "error", None)


@pytest.mark.parametrize("crash", [RuntimeError("worker state lost"), np.linalg.LinAlgError("singular matrix")])
def test_unexpected_failure_becomes_error_row(small_config, monkeypatch, crash):
    config = load_run_config(small_config())

    def explode(*args, **kwargs):
        raise crash

    monkeypatch.setattr("sssta.services.design_service.run_imdsm", explode)
    rows = SweepService().sweep(config, "alpha", [0.6, 0.7])
    assert rows == [(0.6, "error", None), (0.7, "error", None)]


def test_sweep_keeps_value_order(small_config):
    config = load_run_config(small_config())
    rows = SweepService().sweep(config, "alpha", [0.6, 1.0])
    assert [(value, status) for value, status, _ in rows] == [(0.6, "ok"), (1.0, "empty")]
    assert rows[0][2].dipole_count >= 1


def test_empty_sweep_writes_header_only(small_config, tmp_path):
    config = load_run_config(small_config())
    path = SweepService().run(config, "M", [], tmp_path / "sweep")
    assert _read_csv(path) == [SWEEP_COLUMNS]


def test_design_fills_metrics_and_config_echo(small_config):
    config = load_run_config(small_config("ula"))
    outcome = DesignService().design(config)
    report = outcome.report
    assert outcome.exit_code == 0
    assert report.metrics.dipole_count == 7
    assert report.metrics.percent_decrease == 0
    assert report.config["method"] == "ula"
    assert outcome.pattern is not None


def test_infeasible_design_is_not_persisted(small_config, monkeypatch, tmp_path):
    config = load_run_config(small_config())
    bad = DesignReport(
        method="cs-imdsm",
        status="ok",
        placements=records_from([DipolePlacement(0.0, Orientation.Y, 1.0), DipolePlacement(0.3, Orientation.Y, 1.0)]),
    )
    monkeypatch.setattr("sssta.services.design_service.run_imdsm", lambda *args, **kwargs: bad)
    with pytest.raises(FeasibilityError):
        DesignService().run(config, tmp_path / "never")
    assert not (tmp_path / "never").exists()


def test_imdsm_config_carries_flags():
    config = parse_run_config(
        {"schema_version": 1, "method": "bcs-imdsm", "flags": {"merge_rule": "snap"}, "bcs": {"engine": "single-task"}}
    )
    assert config.to_imdsm_config() == ImdsmConfig(merge_rule="snap", bcs_engine="single-task")
