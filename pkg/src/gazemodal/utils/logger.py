"""Logging utilities for gazemodal."""

import logging
import sys
from typing import Any, Optional

import structlog

from gazemodal.config import settings

_configured = False


def _configure() -> None:
    global _configured
    renderer: Any
    if settings.log_format == "json":
        renderer = structlog.processors.JSONRenderer(sort_keys=True)
    else:
        renderer = structlog.dev.ConsoleRenderer(colors=False)

    structlog.configure(
        processors=[
            structlog.stdlib.filter_by_level,
            structlog.stdlib.add_logger_name,
            structlog.stdlib.add_log_level,
            structlog.processors.TimeStamper(fmt="iso"),
            structlog.processors.StackInfoRenderer(),
            structlog.processors.format_exc_info,
            structlog.processors.UnicodeDecoder(),
            renderer,
        ],
        wrapper_class=structlog.stdlib.BoundLogger,
        logger_factory=structlog.stdlib.LoggerFactory(),
        cache_logger_on_first_use=True,
    )
    _configured = True


def get_logger(name: str, level: Optional[str] = None) -> structlog.stdlib.BoundLogger:
    """Get a structured logger bound to a standard-library logger of the same name."""
    if not _configured:
        _configure()

    std_logger = logging.getLogger(name)
    std_logger.setLevel(getattr(logging, (level or settings.log_level).upper(), logging.INFO))

    # Avoid duplicate handlers
    if not std_logger.handlers:
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter("%(message)s"))
        std_logger.addHandler(handler)
        std_logger.propagate = False

    return structlog.get_logger(name)
