"""Structured logging utilities for robustlab.

Experiment events are logged as one JSON object per message so the sweep
log can be grepped or loaded with ``jsonlines`` next to the result CSV.
"""

import json
import logging
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

LOG_FORMAT = "%(asctime)s | %(levelname)-8s | %(name)s | %(message)s"
DATE_FORMAT = "%Y-%m-%dT%H:%M:%S%z"

logging.basicConfig(level=logging.INFO, format=LOG_FORMAT, datefmt=DATE_FORMAT)


def get_logger(name: str) -> logging.Logger:
    """Get a logger instance with the given name (typically ``__name__``)."""
    return logging.getLogger(name)


def set_verbosity(verbose: bool = False, quiet: bool = False) -> None:
    """Adjust the level of every ``robustlab.*`` logger."""
    if quiet:
        level = logging.WARNING
    elif verbose:
        level = logging.DEBUG
    else:
        level = logging.INFO
    logging.getLogger("robustlab").setLevel(level)


def structured_log(
    logger: logging.Logger,
    level: str,
    message: str,
    phase: str | None = None,
    run_id: str | None = None,
    **kwargs: Any,
) -> None:
    """Log a structured message with ISO timestamps and metadata.

    Args:
        logger: Logger instance
        level: Log level (debug, info, warning, error, critical)
        message: Log message
        phase: Optional phase identifier ("sweep", "acceptance", "theory", ...)
        run_id: Optional experiment or suite name
        **kwargs: Additional metadata; numpy scalars and paths are stringified
    """
    log_data: dict[str, Any] = {
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "message": message,
    }

    if phase:
        log_data["phase"] = phase
    if run_id:
        log_data["run_id"] = run_id

    log_data.update(kwargs)

    log_func = getattr(logger, level.lower())
    log_func(json.dumps(log_data, default=str))


def setup_file_logger(log_file: Path, name: str = "robustlab") -> logging.Logger:
    """Attach a JSON-lines file handler to the ``robustlab`` logger tree.

    Args:
        log_file: Path to log file (parent directories are created)
        name: Logger name

    Returns:
        Configured logger
    """
    logger = get_logger(name)
    log_file.parent.mkdir(parents=True, exist_ok=True)

    handler = logging.FileHandler(log_file)
    handler.setFormatter(
        logging.Formatter(
            '{"timestamp": "%(asctime)s", "level": "%(levelname)s", '
            '"logger": "%(name)s", "message": %(message)s}',
            datefmt=DATE_FORMAT,
        )
    )
    logger.addHandler(handler)

    return logger
