"""Structured logging configuration using structlog."""
import logging
import sys
from pathlib import Path

import structlog

from src import config

_LEVELS = {
    "DEBUG": logging.DEBUG,
    "INFO": logging.INFO,
    "WARNING": logging.WARNING,
    "ERROR": logging.ERROR,
}


class _TeeFile:
    """Write-through to standard error and an optional log file."""

    def __init__(self, log_file: str):
        self._file = None
        if log_file:
            path = Path(log_file)
            path.parent.mkdir(parents=True, exist_ok=True)
            self._file = open(path, "a", encoding="utf-8")

    def _streams(self):
        # sys.stderr is looked up per write so redirected streams are honoured
        return [sys.stderr] if self._file is None else [sys.stderr, self._file]

    def write(self, message: str):
        for stream in self._streams():
            stream.write(message)

    def flush(self):
        for stream in self._streams():
            stream.flush()


def setup_logging(level: str = None):
    """Configure structlog; logs go to standard error (and LOG_FILE_PATH when set)."""
    level = (level or config.LOG_LEVEL).upper()

    processors = [
        structlog.contextvars.merge_contextvars,
        structlog.processors.add_log_level,
        structlog.processors.TimeStamper(fmt="iso"),
        structlog.processors.StackInfoRenderer(),
        structlog.processors.format_exc_info,
        structlog.processors.UnicodeDecoder(),
    ]

    if level == "DEBUG":
        processors.append(structlog.dev.ConsoleRenderer())
    else:
        processors.append(structlog.processors.JSONRenderer())

    structlog.configure(
        processors=processors,
        wrapper_class=structlog.make_filtering_bound_logger(_LEVELS.get(level, logging.INFO)),
        context_class=dict,
        logger_factory=structlog.PrintLoggerFactory(file=_TeeFile(config.LOG_FILE_PATH)),
        cache_logger_on_first_use=False,
    )

    return structlog.get_logger()


# Global logger instance
logger = setup_logging()
