"""Procedural assembly of part-annotated shapes.

A shape is built part by part from lexicon-selected geometry families,
assembled in contact (legs meet the seat underside, the back rises from
the seat's rear edge, lamp heads sit on the post top), sampled to a
fixed per-part point count, and normalized to the unit sphere in a
frame shared by all parts.

Randomness is structured: layout, family choice, family parameters and
surface sampling each draw from independent seeded streams, so forcing
one part's family (``family_overrides``) leaves everything else
byte-identical.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..geom import PointCloud, normalize_unit_sphere
from . import recipes
from .lexicon import (
    CATEGORY_PARTS,
    OPTIONAL_PARTS,
    LexiconEntry,
    PromptLexicon,
    default_lexicon,
    sample_entry_params,
)
from .surfaces import sample_surface

POINTS_PER_PART = 1024

_CAT_CODE = {"chair": 1, "table": 2, "lamp": 3}

# rng stream tags
_S_OPTIONAL, _S_FAMILY, _S_PARAMS, _S_LAYOUT, _S_SAMPLE = 10, 20, 30, 40, 50


@dataclass(frozen=True)
class ShapePart:
    part_type: str
    prompt: str
    cloud: PointCloud
    generator_params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class PartAnnotatedShape:
    shape_id: str
    category: str
    parts: list

    def part(self, part_type: str) -> ShapePart:
        for p in self.parts:
            if p.part_type == part_type:
                return p
        raise KeyError(part_type)


def _uniform(rng, lo, hi):
    return lo + rng.random() * (hi - lo)


def _seat_thickness(entry: LexiconEntry, params: dict) -> float:
    if entry.recipe == "padded_seat":
        return params["base_t"] + params["cushion_t"]
    if entry.recipe == "dished_seat":
        return 0.35 * params["sag"]
    return params["thickness"]


def _base_top(entry: LexiconEntry, params: dict) -> float:
    if entry.recipe == "dome_base":
        return params["r"]
    if entry.recipe == "tiered_base":
        return 2 * params["t"]
    return params["t"]


def _resolve_layout(category, rng, chosen: dict) -> dict:
    """Draw the shared skeleton; family overrides re-range single fields.

    Every field consumes exactly one draw whether or not it is
    overridden, keeping the stream aligned across family choices.
    """
    if category == "chair":
        leg_over = chosen["leg"][0].layout_overrides if "leg" in chosen else {}
        seat_lo, seat_hi = leg_over.get("seat_h", (0.72, 0.95))
        layout = {
            "seat_w": _uniform(rng, 0.85, 1.25),
            "seat_d": _uniform(rng, 0.8, 1.1),
            "seat_h": _uniform(rng, seat_lo, seat_hi),
            "back_h": _uniform(rng, 0.8, 1.1),
        }
        layout["seat_t"] = _seat_thickness(*chosen["seat"])
        return layout
    if category == "table":
        layout = {
            "top_w": _uniform(rng, 1.2, 1.9),
            "top_d": _uniform(rng, 0.7, 1.1),
            "top_h": _uniform(rng, 0.65, 0.95),
        }
        layout["top_t"] = chosen["tabletop"][1]["thickness"]
        return layout
    if category == "lamp":
        layout = {"post_h": _uniform(rng, 0.8, 1.3)}
        base_entry, base_params = chosen["base"]
        layout["post_z0"] = _base_top(base_entry, base_params)
        post_entry, post_params = chosen["post"]
        if post_entry.recipe == "curved_post":
            cx, cy, cz = recipes.curved_post_top(layout, post_params)
            layout["head_cx"], layout["head_cy"], layout["head_z"] = cx, cy, cz
        else:
            layout["head_cx"], layout["head_cy"] = 0.0, 0.0
            layout["head_z"] = layout["post_z0"] + layout["post_h"]
        return layout
    raise ValueError(f"unknown category {category!r}")


def _choose_parts(category, seed, lexicon, family_overrides):
    """Pick the part set and a (entry, params) pair per part."""
    cat_code = _CAT_CODE[category]
    part_types = list(CATEGORY_PARTS[category])
    rng_opt = np.random.default_rng([seed, cat_code, _S_OPTIONAL])
    present = []
    for pt in part_types:
        if (category, pt) in OPTIONAL_PARTS:
            if rng_opt.random() < 0.5:
                present.append(pt)
        else:
            present.append(pt)
    overrides = family_overrides or {}
    chosen: dict[str, tuple[LexiconEntry, dict]] = {}
    for pt in present:
        part_idx = part_types.index(pt)
        entries = lexicon.entries(category, pt)
        if pt in overrides:
            fam_idx = next(i for i, e in enumerate(entries) if e.prompt == overrides[pt])
        else:
            rng_f = np.random.default_rng([seed, cat_code, _S_FAMILY, part_idx])
            fam_idx = int(rng_f.integers(len(entries)))
        entry = entries[fam_idx]
        rng_p = np.random.default_rng([seed, cat_code, _S_PARAMS, part_idx, fam_idx])
        params = sample_entry_params(entry, rng_p)
        chosen[pt] = (entry, params)
    return part_types, chosen


def generate_shape(
    category: str,
    seed: int,
    *,
    points_per_part: int = POINTS_PER_PART,
    lexicon: PromptLexicon | None = None,
    family_overrides: dict | None = None,
) -> PartAnnotatedShape:
    """Deterministically generate one part-annotated shape."""
    if category not in _CAT_CODE:
        raise ValueError(f"unknown category {category!r}")
    lexicon = lexicon or default_lexicon()
    cat_code = _CAT_CODE[category]
    part_types, chosen = _choose_parts(category, seed, lexicon, family_overrides)
    rng_layout = np.random.default_rng([seed, cat_code, _S_LAYOUT])
    layout = _resolve_layout(category, rng_layout, chosen)

    raw_parts = []
    for pt, (entry, params) in chosen.items():
        builder, _ = recipes.RECIPES[entry.recipe]
        tris = builder(layout, params)
        part_idx = part_types.index(pt)
        rng_s = np.random.default_rng([seed, cat_code, _S_SAMPLE, part_idx])
        raw_parts.append((pt, entry, params, sample_surface(tris, points_per_part, rng_s)))

    union = np.concatenate([pts for *_, pts in raw_parts])
    _, center, scale = normalize_unit_sphere(union)

    parts = []
    for pt, entry, params, pts in raw_parts:
        normalized = ((pts - center) / scale).astype(np.float32).astype(np.float64)
        gen_params = dict(params)
        gen_params.update({f"layout_{k}": float(v) for k, v in layout.items()})
        gen_params.update(
            {
                "norm_cx": float(center[0]),
                "norm_cy": float(center[1]),
                "norm_cz": float(center[2]),
                "norm_scale": float(scale),
            }
        )
        parts.append(ShapePart(pt, entry.prompt, PointCloud(normalized), gen_params))
    return PartAnnotatedShape(f"{category}-{seed:06d}", category, parts)


def build_part_points(
    category: str,
    part_type: str,
    prompt: str,
    layout: dict,
    n: int,
    seed: int,
    *,
    lexicon: PromptLexicon | None = None,
    param_mode: str = "mid",
) -> np.ndarray:
    """Build one part in isolation, in the raw (pre-normalization) frame.

    Used for family prototypes: with param_mode="mid" the part is the
    family's canonical representative under the given layout.
    """
    lexicon = lexicon or default_lexicon()
    entry = lexicon.entry_for_prompt(category, part_type, prompt)
    rng = np.random.default_rng([seed, _CAT_CODE[category], _S_PARAMS, 99])
    params = sample_entry_params(entry, rng, mode=param_mode)
    builder, _ = recipes.RECIPES[entry.recipe]
    tris = builder(layout, params)
    rng_s = np.random.default_rng([seed, _CAT_CODE[category], _S_SAMPLE, 99])
    return sample_surface(tris, n, rng_s)


def layout_of_shape(shape: PartAnnotatedShape) -> dict:
    """Recover the layout dict recorded in a shape's generator params."""
    gp = shape.parts[0].generator_params
    return {k[len("layout_") :]: v for k, v in gp.items() if k.startswith("layout_")}


def normalization_of_shape(shape: PartAnnotatedShape) -> tuple[np.ndarray, float]:
    gp = shape.parts[0].generator_params
    center = np.array([gp["norm_cx"], gp["norm_cy"], gp["norm_cz"]])
    return center, gp["norm_scale"]


def sample_part_points(tris: np.ndarray, n: int, seed: int) -> PointCloud:
    """Area-weighted uniform sampling of a triangle surface, seeded."""
    rng = np.random.default_rng([seed, _S_SAMPLE])
    return PointCloud(sample_surface(tris, n, rng))


def validate_shape(
    shape: PartAnnotatedShape,
    lexicon: PromptLexicon | None = None,
    points_per_part: int = POINTS_PER_PART,
) -> None:
    """Raise if a shape violates the part-annotation invariants."""
    lexicon = lexicon or default_lexicon()
    legal = CATEGORY_PARTS.get(shape.category)
    if legal is None:
        raise ValueError(f"unknown category {shape.category!r}")
    if not shape.parts:
        raise ValueError(f"{shape.shape_id}: shape has no parts")
    for part in shape.parts:
        if part.part_type not in legal:
            raise ValueError(f"{shape.shape_id}: unknown part type {part.part_type!r}")
        if len(part.cloud) != points_per_part:
            raise ValueError(
                f"{shape.shape_id}/{part.part_type}: {len(part.cloud)} points, expected {points_per_part}"
            )
        if not part.prompt or part.prompt not in lexicon.phrases(shape.category, part.part_type):
            raise ValueError(f"{shape.shape_id}/{part.part_type}: prompt {part.prompt!r} not in lexicon")
