from pathlib import Path
from typing import Generic, Type, TypeVar, Union

import orjson
from pydantic import BaseModel, ValidationError

from rs_chain.core.logging import get_logger
from rs_chain.exceptions import InputError

SchemaType = TypeVar("SchemaType", bound=BaseModel)

logger = get_logger(__name__)


class DocumentRepository(Generic[SchemaType]):
    """Reads JSON documents from disk and validates them against a schema."""

    def __init__(self, schema: Type[SchemaType]):
        self.schema = schema

    def parse(self, raw: Union[str, bytes], source: str = "<input>") -> SchemaType:
        try:
            data = orjson.loads(raw)
        except orjson.JSONDecodeError as exc:
            raise InputError(f"{source}: malformed JSON: {exc}", details={"source": source})
        try:
            return self.schema.model_validate(data)
        except ValidationError as exc:
            errors = [
                f"{'.'.join(str(p) for p in err['loc']) or '<root>'}: {err['msg']}"
                for err in exc.errors(include_url=False)
            ]
            raise InputError(
                f"{source}: does not match the {self.schema.__name__} schema",
                details={"source": source, "errors": errors},
            )

    def load(self, path: Union[str, Path]) -> SchemaType:
        path = Path(path)
        try:
            raw = path.read_bytes()
        except OSError as exc:
            raise InputError(f"cannot read {path}: {exc.strerror}", details={"source": str(path)})
        logger.debug("loaded document path=%s bytes=%d", path, len(raw))
        return self.parse(raw, source=str(path))
