import logging
import sys
from .config import settings

_HANDLER_NAME = "rs_chain.stderr"


def setup_logging() -> None:
    """Configure application logging.

    Logs go to stderr; stdout carries reports and JSON only.
    """

    # Create formatter
    formatter = logging.Formatter(settings.log_format)

    root_logger = logging.getLogger()
    root_logger.setLevel(getattr(logging, settings.log_level.upper(), logging.WARNING))

    # Repeated CLI invocations in one process (tests) must not stack handlers
    for handler in root_logger.handlers:
        if handler.get_name() == _HANDLER_NAME:
            handler.setStream(sys.stderr)
            handler.setFormatter(formatter)
            return

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.set_name(_HANDLER_NAME)
    console_handler.setFormatter(formatter)
    root_logger.addHandler(console_handler)


def get_logger(name: str) -> logging.Logger:
    """Get a logger instance for the given name."""
    return logging.getLogger(name)
