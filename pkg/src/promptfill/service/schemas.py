"""Wire schemas for the completion service."""
from __future__ import annotations

from pydantic import BaseModel, Field


class HealthResponse(BaseModel):
    status: str
    model_id: str


class PromptsResponse(BaseModel):
    category: str
    part_type: str | None = None
    prompts: list[str]


class ShapeListResponse(BaseModel):
    shapes: list[str]


class ShapeResponse(BaseModel):
    shape_id: str
    mode: str
    removed_part_type: str
    gt_prompt: str
    n_points: int
    points: list[list[float]]


class CompletionRequest(BaseModel):
    points: list[list[float]]
    prompt: str | None = None
    k: int | None = Field(default=None, ge=1, le=16)
    # optional: narrows k-variant prompts to one part type
    part_type: str | None = None


class CompletionEntry(BaseModel):
    prompt: str
    missing: list[list[float]]
    coarse: list[list[float]]
    full_size: int
    oov: bool = False


class CompletionResponse(BaseModel):
    completions: list[CompletionEntry]
    model_id: str
    timing_ms: float


class ErrorResponse(BaseModel):
    detail: str
