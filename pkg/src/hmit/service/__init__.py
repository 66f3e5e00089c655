"""HTTP service and file-backed state for the translation platform."""

from .app import create_app
from .state import (
    ConflictError,
    InvalidRequestError,
    NotFoundError,
    RunJob,
    SegmentState,
    ServiceState,
)

__all__ = [
    "ConflictError",
    "InvalidRequestError",
    "NotFoundError",
    "RunJob",
    "SegmentState",
    "ServiceState",
    "create_app",
]
