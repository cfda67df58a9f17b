"""
SSSTA Designer - Report Writer

Atomic persistence of reports, placement tables, beam patterns and sweep
tables. Every file is written to a temporary sibling and moved into place.
"""

import csv
import io
import os
import tempfile
from pathlib import Path
from typing import Any, Iterable, Optional, Sequence

from ..array_model import DipolePlacement
from ..evaluation import BeamPattern
from ..logging_config import get_logger
from ..schemas.report import DesignReport, Metrics

logger = get_logger("sssta.report_writer")

REPORT_FILE = "report.json"
PLACEMENTS_FILE = "placements.csv"
PATTERN_FILE = "pattern.csv"

PLACEMENT_COLUMNS = ["n", "d_n_lambda", "orientation", "w_re", "w_im"]
PATTERN_COLUMNS = ["theta_signed_deg", "gain_db"]
SWEEP_COLUMNS = ["value", "status", *Metrics.model_fields.keys()]

MISSING = "NA"


def format_number(value: Any) -> str:
    """6 significant digits for floats, plain text for everything else."""
    if value is None:
        return MISSING
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return format(value, ".6g")
    return str(value)


def atomic_write_text(path: Path, text: str) -> None:
    """Write ``text`` to ``path`` through a temporary file in the same directory."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise


def _csv_text(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_number(v) for v in row])
    return buffer.getvalue()


class ReportWriter:
    """Writes run artifacts under one output directory."""

    def __init__(self, output_dir: Path):
        self.output_dir = Path(output_dir)

    def write_report(self, report: DesignReport) -> Path:
        path = self.output_dir / REPORT_FILE
        atomic_write_text(path, report.model_dump_json(indent=2) + "\n")
        logger.info("report.written", path=str(path), status=report.status)
        return path

    def write_placements(self, placements: Sequence[DipolePlacement]) -> Path:
        """Placement table numbered from 1 in position order."""
        ordered = sorted(placements, key=lambda p: p.position)
        rows = [
            (n, float(p.position), p.orientation.name, float(p.weight.real), float(p.weight.imag))
            for n, p in enumerate(ordered, start=1)
        ]
        path = self.output_dir / PLACEMENTS_FILE
        atomic_write_text(path, _csv_text(PLACEMENT_COLUMNS, rows))
        return path

    def write_pattern(self, pattern: BeamPattern) -> Path:
        path = self.output_dir / PATTERN_FILE
        atomic_write_text(path, _csv_text(PATTERN_COLUMNS, pattern.rows()))
        return path

    def write_sweep(
        self,
        axis: str,
        rows: Sequence[tuple[float, str, Optional[Metrics]]],
    ) -> Path:
        """
        One row per sweep value; runs without metrics are filled with NA.

        Args:
            axis: Swept parameter name
            rows: (value, report status, metrics or None)

        Returns:
            Path of ``sweep_<axis>.csv``
        """
        metric_names = list(Metrics.model_fields.keys())
        table = []
        for value, status, metrics in rows:
            data = metrics.model_dump() if metrics else {}
            table.append([float(value), status, *(data.get(name) for name in metric_names)])
        path = self.output_dir / f"sweep_{axis}.csv"
        atomic_write_text(path, _csv_text(SWEEP_COLUMNS, table))
        logger.info("sweep.written", path=str(path), rows=len(rows))
        return path
