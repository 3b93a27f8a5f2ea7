from .app import MAX_BODY_BYTES, ServiceBundle, bundle_from_checkpoint, create_app
from .schemas import (
    CompletionEntry,
    CompletionRequest,
    CompletionResponse,
    HealthResponse,
    PromptsResponse,
    ShapeListResponse,
    ShapeResponse,
)

__all__ = [
    "MAX_BODY_BYTES",
    "CompletionEntry",
    "CompletionRequest",
    "CompletionResponse",
    "HealthResponse",
    "PromptsResponse",
    "ServiceBundle",
    "ShapeListResponse",
    "ShapeResponse",
    "bundle_from_checkpoint",
    "create_app",
]
