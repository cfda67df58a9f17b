"""
SSSTA Designer - Utilities Module

Run timing helpers.
"""

from .metrics import RunMetrics

__all__ = ["RunMetrics"]
