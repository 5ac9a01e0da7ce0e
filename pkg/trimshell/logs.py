"""
Level-tagged progress messages.

Objects and pipeline functions that accept ``verbose=True`` report through `log`,
which prints a prefixed line and always forwards the record to the standard
logging tree under the caller's logger.
"""

import logging
from typing import Optional

_PREFIX = {
    "INFO": "ℹ️",
    "SUCCESS": "✅",
    "WARNING": "⚠️",
    "ERROR": "❌",
    "PROCESSING": "🔧",
}

_LEVELS = {
    "INFO": logging.INFO,
    "SUCCESS": logging.INFO,
    "WARNING": logging.WARNING,
    "ERROR": logging.ERROR,
    "PROCESSING": logging.DEBUG,
}


def log(
    message: str,
    level: str = "INFO",
    *,
    verbose: bool = False,
    logger: Optional[logging.Logger] = None,
) -> None:
    """Emit a progress message.

    Args:
        message: Text to report.
        level: One of INFO, SUCCESS, WARNING, ERROR, PROCESSING.
        verbose: Also print the message with its prefix to stdout.
        logger: Logger receiving the record (package logger if None).
    """
    (logger or logging.getLogger("trimshell")).log(
        _LEVELS.get(level, logging.INFO), message
    )
    if verbose:
        print(f"{_PREFIX.get(level, '📝')} {message}")
