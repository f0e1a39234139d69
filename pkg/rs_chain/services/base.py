from abc import ABC
from typing import Optional

from rs_chain.core.config import Settings, settings
from rs_chain.core.logging import get_logger


class BaseService(ABC):
    """Base service class with common functionality."""

    def __init__(self, config: Optional[Settings] = None):
        self.settings = config or settings
        self.logger = get_logger(self.__class__.__name__)

    @property
    def tolerance(self) -> float:
        return self.settings.tolerance
