"""
SSSTA Designer

Sparse spatially stretched tripole array design by group-sparse convex
optimization, Bayesian compressive sensing and greedy minimum-distance
placement.
"""

__version__ = "0.1.0"
