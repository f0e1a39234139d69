from .base import DocumentRepository
from .situation import (
    InputRepository,
    allocation_from_schema,
    curve_from_schema,
    game_from_schema,
    prices_from_schema,
    situation_from_schema,
)

__all__ = [
    "DocumentRepository",
    "InputRepository",
    "allocation_from_schema",
    "curve_from_schema",
    "game_from_schema",
    "prices_from_schema",
    "situation_from_schema",
]
