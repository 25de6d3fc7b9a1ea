"""
Logging configuration
"""

import logging
import sys
from typing import Optional

from config.settings import settings


def get_logger(name: str, level: Optional[str] = None) -> logging.Logger:
    """
    Get a configured logger instance

    Args:
        name: Logger name (usually __name__)
        level: Logging level, defaults to the configured log level

    Returns:
        Configured logger instance
    """
    logger = logging.getLogger(name)

    if not logger.handlers:
        # Set level
        logger.setLevel(getattr(logging, (level or settings.log_level).upper()))

        # Create formatter
        formatter = logging.Formatter(
            '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
        )

        # Console handler; stdout carries CLI reports
        console_handler = logging.StreamHandler(sys.stderr)
        console_handler.setFormatter(formatter)
        logger.addHandler(console_handler)

        # File handler
        if settings.log_to_file:
            try:
                settings.log_dir.mkdir(parents=True, exist_ok=True)
                file_handler = logging.FileHandler(settings.log_dir / "ubm_bandit.log")
                file_handler.setFormatter(formatter)
                logger.addHandler(file_handler)
            except OSError as e:
                logger.warning(f"Could not open log file in {settings.log_dir}: {e}")

        # Prevent duplicate logs
        logger.propagate = False

    return logger
