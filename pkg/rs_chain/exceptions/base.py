from typing import Optional, Dict, Any, List

# Exit codes are a stable contract for CI
EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_INPUT_ERROR = 2


class AppException(Exception):
    """Base application exception."""

    def __init__(
        self,
        message: str,
        exit_code: int = EXIT_FAILURE,
        details: Optional[Dict[str, Any]] = None
    ):
        self.message = message
        self.exit_code = exit_code
        self.details = details or {}
        super().__init__(self.message)


class InputError(AppException):
    """Unreadable or malformed input document."""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message, exit_code=EXIT_INPUT_ERROR, details=details)


class ModelAssumptionError(InputError):
    """An RS-problem or RS-situation violates the model's standing assumptions."""

    def __init__(self, message: str, violations: Optional[List[str]] = None):
        self.violations = list(violations or [])
        super().__init__(message, details={"violations": self.violations})


class DomainError(InputError):
    """A curve was evaluated outside its domain."""

    def __init__(self, q: float):
        super().__init__(f"quantity {q!r} is outside the curve domain [0, inf)", details={"q": q})


class NoCrossingError(AppException):
    """A curve never attains the requested level."""

    def __init__(self, level: float, details: Optional[Dict[str, Any]] = None):
        message = f"curve never attains level {level!r}"
        super().__init__(message, exit_code=EXIT_INPUT_ERROR, details={"level": level, **(details or {})})


class ArgumentError(AppException):
    """Invalid argument passed to an operation."""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message, exit_code=EXIT_INPUT_ERROR, details=details)


class CapacityError(AppException):
    """Player count exceeds an exhaustive-enumeration cap."""

    def __init__(self, what: str, players: int, cap: int):
        message = f"{what} supports at most {cap} players, got {players}"
        super().__init__(message, exit_code=EXIT_INPUT_ERROR, details={"players": players, "cap": cap})


class CoreMembershipError(AppException):
    """An allocation outside the core was passed where a core allocation is required."""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message, exit_code=EXIT_FAILURE, details=details)


class PriceBoundError(AppException):
    """A wholesale price vector violates the coalition price bounds."""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message, exit_code=EXIT_FAILURE, details=details)


class DegenerateRetailerError(AppException):
    """A retailer's cooperative order quantity is zero, so its price cannot be recovered."""

    def __init__(self, retailer: int):
        message = f"retailer {retailer} has zero cooperative order quantity"
        super().__init__(message, exit_code=EXIT_INPUT_ERROR, details={"retailer": retailer})


class ConstructionError(AppException):
    """Random instance generation could not satisfy the model assumptions."""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message, exit_code=EXIT_FAILURE, details=details)
