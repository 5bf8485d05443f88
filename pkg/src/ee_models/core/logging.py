"""
Logging configuration for ee-models.

This module handles logging setup and configuration:
- File and console logging handlers
- Log level management (EE_MODELS_LOG via the config loader)
- Format customization
- Handler lifecycle management

All library modules log through children of the "ee-models" logger, e.g.
"ee-models.hhh4model" or "ee-models.simulation", so one call here controls
the whole tree.
"""
import logging
import os

from ..config.models import LoggingConfig

ROOT_LOGGER = "ee-models"


def get_logger(component: str) -> logging.Logger:
    """Return the child logger for a library component."""
    return logging.getLogger(f"{ROOT_LOGGER}.{component}")


def setup_logging(config: LoggingConfig) -> logging.Logger:
    """Configure and initialize logging system.

    Sets up logging with:
    - File logging (if configured):
      * Handles relative/absolute paths
      * Uses configured log level
      * Applies custom format

    - Console logging on stderr at the configured level, so batch runs
      report progress and warnings next to their exit status

    - Handler Management:
      * Removes existing handlers
      * Configures new handlers
      * Sets up formatters

    Args:
        config: Logging configuration containing:
               - Log level (e.g., "INFO", "DEBUG")
               - Format string
               - Optional log file path

    Returns:
        Configured logger instance for "ee-models"

    Example config:
        {
            "level": "INFO",
            "format": "%(asctime)s - %(name)s - %(levelname)s - %(message)s",
            "file": "/path/to/log/file.log"  # Optional
        }
    """
    level = getattr(logging, config.level.upper())

    # Convert relative path to absolute
    log_file = config.file
    if log_file and not os.path.isabs(log_file):
        log_file = os.path.join(os.getcwd(), log_file)

    handlers: list[logging.Handler] = []

    if log_file:
        file_handler = logging.FileHandler(log_file)
        file_handler.setLevel(level)
        handlers.append(file_handler)

    console_handler = logging.StreamHandler()
    console_handler.setLevel(level)
    handlers.append(console_handler)

    formatter = logging.Formatter(config.format)
    for handler in handlers:
        handler.setFormatter(formatter)

    root_logger = logging.getLogger()
    root_logger.setLevel(level)

    # Remove any existing handlers
    for handler in root_logger.handlers[:]:
        root_logger.removeHandler(handler)

    for handler in handlers:
        root_logger.addHandler(handler)

    return logging.getLogger(ROOT_LOGGER)
