"""HTTP service exposing prompt-guided completion to the web viewer.

All endpoints serve a single frozen checkpoint loaded at startup;
inference is read-only over the parameter store, so requests run
concurrently without locking.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from fastapi import FastAPI, HTTPException, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from ..completion import CompletionModel, complete
from ..data import PromptLexicon, default_lexicon
from ..encoders import has_oov
from .. import nn
from .schemas import (
    CompletionEntry,
    CompletionRequest,
    CompletionResponse,
    HealthResponse,
    PromptsResponse,
    ShapeListResponse,
    ShapeResponse,
)

MAX_BODY_BYTES = 8 * 1024 * 1024


@dataclass
class ServiceBundle:
    """Everything one service process serves: model, lexicon, demo shapes."""

    model: CompletionModel
    store: nn.ParamStore
    model_id: str
    category: str
    lexicon: PromptLexicon = field(default_factory=default_lexicon)
    demo_instances: dict = field(default_factory=dict)  # shape_id -> BenchmarkInstance


def create_app(bundle: ServiceBundle) -> FastAPI:
    app = FastAPI(title="prompt-guided point cloud completion", version="0.1.0")

    @app.exception_handler(RequestValidationError)
    async def validation_as_400(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"detail": str(exc.errors()[:1])})

    @app.exception_handler(Exception)
    async def internal_error(request: Request, exc: Exception):
        return JSONResponse(status_code=500, content={"detail": str(exc)})

    @app.middleware("http")
    async def body_size_limit(request: Request, call_next):
        length = request.headers.get("content-length")
        if length is not None and int(length) > MAX_BODY_BYTES:
            return JSONResponse(status_code=413, content={"detail": "request body exceeds 8 MiB"})
        return await call_next(request)

    @app.get("/health", response_model=HealthResponse)
    def health():
        return HealthResponse(status="ok", model_id=bundle.model_id)

    @app.get("/prompts", response_model=PromptsResponse)
    def prompts(category: str | None = None, part_type: str | None = None):
        cat = category or bundle.category
        try:
            if part_type is not None:
                phrases = sorted(bundle.lexicon.phrases(cat, part_type))
            else:
                phrases = sorted(
                    p
                    for pt in bundle.lexicon.part_types(cat)
                    for p in bundle.lexicon.phrases(cat, pt)
                )
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown category or part type")
        return PromptsResponse(category=cat, part_type=part_type, prompts=phrases)

    @app.get("/shapes", response_model=ShapeListResponse)
    def shapes():
        return ShapeListResponse(shapes=sorted(bundle.demo_instances))

    @app.get("/shapes/{shape_id}", response_model=ShapeResponse)
    def shape(shape_id: str):
        inst = bundle.demo_instances.get(shape_id)
        if inst is None:
            raise HTTPException(status_code=404, detail=f"unknown shape id {shape_id!r}")
        pts = inst.partial.points
        return ShapeResponse(
            shape_id=shape_id,
            mode=inst.mode,
            removed_part_type=inst.removed_part_type,
            gt_prompt=inst.gt_prompt,
            n_points=pts.shape[0],
            points=pts.tolist(),
        )

    def _variant_prompts(req: CompletionRequest) -> list[str]:
        if req.prompt is not None and req.prompt.strip():
            return [req.prompt]
        if req.k is not None:
            try:
                if req.part_type is not None:
                    phrases = sorted(bundle.lexicon.phrases(bundle.category, req.part_type))
                else:
                    phrases = sorted(
                        p
                        for pt in bundle.lexicon.part_types(bundle.category)
                        for p in bundle.lexicon.phrases(bundle.category, pt)
                    )
            except KeyError:
                raise HTTPException(status_code=400, detail=f"unknown part type {req.part_type!r}")
            return phrases[: req.k]
        raise HTTPException(status_code=400, detail="request needs a prompt or k")

    @app.post("/complete", response_model=CompletionResponse)
    def complete_endpoint(req: CompletionRequest):
        pts = np.asarray(req.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 3:
            raise HTTPException(status_code=400, detail="points must be a list of [x, y, z]")
        if not np.isfinite(pts).all():
            raise HTTPException(status_code=400, detail="points contain non-finite values")
        n_centers = bundle.model.enc.cfg.n_centers
        if pts.shape[0] < n_centers:
            raise HTTPException(
                status_code=400,
                detail=f"too few points: got {pts.shape[0]}, need at least {n_centers}",
            )
        prompts = _variant_prompts(req)
        t0 = time.perf_counter()
        entries = []
        for prompt in prompts:
            out = complete(bundle.model, bundle.store, pts, prompt)
            entries.append(
                CompletionEntry(
                    prompt=prompt,
                    missing=out.missing.points.tolist(),
                    coarse=out.coarse.points.tolist(),
                    full_size=len(out.full),
                    oov=has_oov(prompt, bundle.model.vocab),
                )
            )
        timing_ms = (time.perf_counter() - t0) * 1000.0
        return CompletionResponse(completions=entries, model_id=bundle.model_id, timing_ms=timing_ms)

    return app


def bundle_from_checkpoint(ckpt_path, shapes_path=None) -> ServiceBundle:
    from ..completion import load_completion_checkpoint, model_id_of
    from ..data import load_benchmark_jsonl

    model, store, config = load_completion_checkpoint(ckpt_path)
    demo = {}
    if shapes_path:
        for inst in load_benchmark_jsonl(shapes_path):
            demo[inst.shape_id] = inst
    return ServiceBundle(
        model=model,
        store=store,
        model_id=model_id_of(config),
        category=config.get("category", "chair"),
        demo_instances=demo,
    )
