import orjson
from rich.console import Console
from .base import AppException, EXIT_FAILURE
from rs_chain.core.logging import get_logger

logger = get_logger(__name__)


def _render_error(console: Console, message: str, details: dict) -> None:
    payload = {"error": {"message": message, "details": details}}
    console.print(orjson.dumps(payload, option=orjson.OPT_SORT_KEYS).decode(), markup=False, highlight=False, soft_wrap=True)


def handle_app_exception(exc: AppException, console: Console, command: str) -> int:
    """Handle application exceptions; returns the process exit code."""

    logger.error(
        f"Application exception: {exc.message}",
        extra={
            "exit_code": exc.exit_code,
            "details": exc.details,
            "command": command,
        }
    )

    _render_error(console, exc.message, exc.details)
    return exc.exit_code


def handle_unexpected_exception(exc: Exception, console: Console, command: str) -> int:
    """Handle general exceptions."""

    logger.exception(
        f"Unhandled exception: {str(exc)}",
        extra={"command": command}
    )

    _render_error(console, "An unexpected error occurred", {})
    return EXIT_FAILURE
