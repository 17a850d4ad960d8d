from typing import Generic, TypeVar, Optional
from pydantic import BaseModel

# Generic type for line data
T = TypeVar('T')

class StandardResponse(BaseModel, Generic[T]):
    """Envelope of every json-lines output line.

    ``message`` is the line type (``commit``, ``audit``, ...) on success and
    the error text on failure.
    """
    success: bool
    data: Optional[T] = None
    message: str

def success_response(data: T, line_type: str) -> StandardResponse[T]:
    """Envelope for one result line"""
    return StandardResponse(success=True, data=data, message=line_type)

def error_response(message: str, data: T = None) -> StandardResponse[T]:
    """Envelope for the final error line"""
    return StandardResponse(success=False, data=data, message=message)
