"""Structured logging setup.

Logs go to stderr so that report output on stdout stays byte-identical
between runs.
"""

import logging
import sys

import structlog

from misbelief.core.config import settings


def configure_logging(level: str | None = None, fmt: str | None = None) -> None:
    """Configure structlog for the CLI process.

    Args:
        level: Log level name (defaults to ``settings.log_level``)
        fmt: ``"console"`` or ``"json"`` (defaults to ``settings.log_format``)
    """
    level_name = (level or settings.log_level).upper()
    renderer: structlog.typing.Processor = (
        structlog.processors.JSONRenderer()
        if (fmt or settings.log_format) == "json"
        else structlog.dev.ConsoleRenderer(colors=False)
    )

    structlog.configure(
        processors=[
            structlog.processors.add_log_level,
            structlog.processors.TimeStamper(fmt="iso"),
            structlog.processors.StackInfoRenderer(),
            structlog.processors.format_exc_info,
            renderer,
        ],
        wrapper_class=structlog.make_filtering_bound_logger(
            (
                logging.getLevelNamesMapping()
                if sys.version_info >= (3, 11)
                else dict(logging._nameToLevel)
            )[level_name]
        ),
        logger_factory=structlog.PrintLoggerFactory(file=sys.stderr),
        cache_logger_on_first_use=False,
    )
