from .base import (
    AppException,
    InputError,
    ModelAssumptionError,
    DomainError,
    NoCrossingError,
    ArgumentError,
    CapacityError,
    CoreMembershipError,
    PriceBoundError,
    DegenerateRetailerError,
    ConstructionError,
    EXIT_OK,
    EXIT_FAILURE,
    EXIT_INPUT_ERROR,
)
from .handlers import handle_app_exception, handle_unexpected_exception

__all__ = [
    "AppException",
    "InputError",
    "ModelAssumptionError",
    "DomainError",
    "NoCrossingError",
    "ArgumentError",
    "CapacityError",
    "CoreMembershipError",
    "PriceBoundError",
    "DegenerateRetailerError",
    "ConstructionError",
    "EXIT_OK",
    "EXIT_FAILURE",
    "EXIT_INPUT_ERROR",
    "handle_app_exception",
    "handle_unexpected_exception",
]
