import logging
import os
import sys
from typing import List, Optional, Union


class ColorFormatter(logging.Formatter):
    """
    Colour formatter for console logging, one ANSI colour per level.
    Colours are dropped when the stream is not a terminal so that log files
    and captured output stay plain.
    """

    COLORS = {
        "DEBUG": "\033[94m",  # Light Blue
        "INFO": "\033[92m",  # Light Green
        "WARNING": "\033[93m",  # Yellow
        "ERROR": "\033[91m",  # Light Red
        "CRITICAL": "\033[1;91m",  # Bold Red
    }
    RESET = "\033[0m"

    def __init__(self, fmt: str, use_color: bool = True):
        super().__init__(fmt)
        self.use_color = use_color

    def format(self, record: logging.LogRecord) -> str:
        message = super().format(record)
        if not self.use_color:
            return message
        return self.COLORS.get(record.levelname, self.RESET) + message + self.RESET


def resolve_level(level: Optional[Union[str, int]] = None) -> int:
    """Turn a level name (or the INEQVAR_LOG_LEVEL variable) into a logging level."""
    if level is None:
        level = os.getenv("INEQVAR_LOG_LEVEL", "INFO")
    if isinstance(level, int):
        return level
    resolved = logging.getLevelName(level.upper())
    if not isinstance(resolved, int):
        raise ValueError(f"Unknown log level: {level}")
    return resolved


def setup_logging(
    level: int = logging.INFO,
    log_file: Optional[str] = None,
    format_string: str = "%(asctime)s - %(name)s - %(levelname)s - %(funcName)s - %(message)s",
) -> None:
    """
    Set up logging configuration.

    Args:
        level (int): The logging level. Defaults to logging.INFO.
        log_file (str, optional): Path to a log file. If provided, logs will be written to this file.
        format_string (str, optional): Custom format string for log messages.

    Returns:
        None
    """
    handlers: List[logging.Handler] = []

    # Console handler
    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setFormatter(
        ColorFormatter(format_string, use_color=sys.stderr.isatty())
    )
    handlers.append(console_handler)

    # File handler (if log_file is provided)
    if log_file:
        file_handler = logging.FileHandler(log_file)
        file_handler.setFormatter(logging.Formatter(format_string))
        handlers.append(file_handler)

    # Configure root logger
    logging.basicConfig(level=level, handlers=handlers, force=True)

    # Third-party chatter stays at WARNING
    for noisy in ("matplotlib", "asyncio", "aiohttp"):
        logging.getLogger(noisy).setLevel(max(level, logging.WARNING))
