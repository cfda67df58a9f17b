"""
SSSTA Designer - Centralized Logging Configuration

Provides structured logging for solver calls, outer-loop iterations,
Bayesian evidence traces and report persistence.
"""

import logging
import logging.handlers
import sys
import time
from functools import wraps
from pathlib import Path
from typing import Any, Callable, Optional

import structlog

# Log format for plain-text handlers
CONSOLE_FORMAT = "%(message)s"


def setup_logging(
    level: str | int = logging.INFO,
    log_file: Optional[Path] = None,
    use_json: bool = True,
) -> None:
    """
    Set up structlog on top of stdlib logging.

    Args:
        level: Logging level name or number
        log_file: Optional path of a rotating JSON log file
        use_json: Whether stderr output is rendered as JSON lines
    """
    if isinstance(level, str):
        level = logging.getLevelName(level.upper())
        if not isinstance(level, int):
            level = logging.INFO

    root = logging.getLogger("sssta")
    root.setLevel(level)
    root.propagate = False

    # Prevent duplicate handlers on repeated setup
    for handler in list(root.handlers):
        root.removeHandler(handler)

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(level)
    console_handler.setFormatter(logging.Formatter(CONSOLE_FORMAT))
    root.addHandler(console_handler)

    if log_file:
        log_file.parent.mkdir(parents=True, exist_ok=True)
        file_handler = logging.handlers.RotatingFileHandler(
            log_file,
            maxBytes=10 * 1024 * 1024,  # 10MB
            backupCount=5,
        )
        file_handler.setLevel(level)
        file_handler.setFormatter(logging.Formatter(CONSOLE_FORMAT))
        root.addHandler(file_handler)

    renderer = (
        structlog.processors.JSONRenderer()
        if use_json
        else structlog.dev.ConsoleRenderer(colors=False)
    )
    structlog.configure(
        processors=[
            structlog.contextvars.merge_contextvars,
            structlog.stdlib.add_logger_name,
            structlog.processors.add_log_level,
            structlog.processors.TimeStamper(fmt="iso", utc=True),
            structlog.processors.format_exc_info,
            renderer,
        ],
        logger_factory=structlog.stdlib.LoggerFactory(),
        wrapper_class=structlog.stdlib.BoundLogger,
        cache_logger_on_first_use=False,
    )


def get_logger(name: str) -> Any:
    """Get a structlog logger under the ``sssta`` namespace."""
    return structlog.get_logger(name)


def log_timed(event: str) -> Callable:
    """
    Decorator to log call duration and status.

    Args:
        event: Event name emitted on completion or failure
    """

    def decorator(func: Callable) -> Callable:
        logger = get_logger(func.__module__)

        @wraps(func)
        def wrapper(*args, **kwargs):
            start_time = time.perf_counter()
            try:
                result = func(*args, **kwargs)
            except Exception as e:
                duration_ms = (time.perf_counter() - start_time) * 1000
                logger.error(
                    event,
                    function=func.__name__,
                    duration_ms=round(duration_ms, 2),
                    status="error",
                    error=str(e),
                )
                raise
            duration_ms = (time.perf_counter() - start_time) * 1000
            logger.debug(
                event,
                function=func.__name__,
                duration_ms=round(duration_ms, 2),
                status="success",
            )
            return result

        return wrapper

    return decorator
