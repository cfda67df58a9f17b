"""
SSSTA Designer - Schemas

Report models are re-exported here; run configurations live in
``sssta.schemas.config``.
"""

from .report import (
    REPORT_SCHEMA_VERSION,
    DesignReport,
    IterationRecord,
    Metrics,
    PlacementRecord,
    records_from,
)

__all__ = [
    "REPORT_SCHEMA_VERSION",
    "DesignReport",
    "IterationRecord",
    "Metrics",
    "PlacementRecord",
    "records_from",
]
