"""
SSSTA Designer - Run Metrics

Wall-clock timing and step recording for one design run.
"""

from dataclasses import dataclass, field
from typing import Optional
import time


@dataclass
class RunMetrics:
    """
    Collects timing for a single design run.

    Usage:
        metrics = RunMetrics()
        metrics.start()
        # ... sampling ...
        metrics.add_step("sample")
        # ... design, redesign, evaluation ...
        metrics.add_step("design")
        metrics.complete()
    """

    # Timing
    start_time: Optional[float] = None
    end_time: Optional[float] = None

    # (name, seconds since the previous step)
    steps: list[tuple[str, float]] = field(default_factory=list)
    _last_mark: Optional[float] = field(default=None, repr=False)

    def start(self) -> None:
        """Mark the start of the run."""
        self.start_time = time.perf_counter()
        self._last_mark = self.start_time

    def complete(self) -> None:
        """Mark the end of the run."""
        self.end_time = time.perf_counter()

    def add_step(self, name: str) -> None:
        """Record a finished step and its duration."""
        now = time.perf_counter()
        previous = self._last_mark if self._last_mark is not None else now
        self.steps.append((name, now - previous))
        self._last_mark = now

    @property
    def wall_time(self) -> float:
        """Run duration in seconds; elapsed so far when not completed."""
        if self.start_time is None:
            return 0.0
        end = self.end_time if self.end_time is not None else time.perf_counter()
        return end - self.start_time

    def step_time(self, name: str) -> float:
        return sum(seconds for step, seconds in self.steps if step == name)

    def to_dict(self) -> dict:
        """Convert to a dictionary for logging."""
        return {
            "wall_time_s": round(self.wall_time, 6),
            "steps": {name: round(seconds, 6) for name, seconds in self.steps},
        }
