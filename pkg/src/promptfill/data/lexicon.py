"""Closed prompt lexicon: each phrase names one procedural geometry family."""
from __future__ import annotations

import re
from dataclasses import dataclass, field

from .recipes import RECIPES

_PHRASE_RE = re.compile(r"^[a-z][a-z-]*( [a-z][a-z-]*)+$")

CATEGORY_PARTS = {
    "chair": ["back", "seat", "armrest", "leg"],
    "table": ["tabletop", "leg"],
    "lamp": ["head", "post", "base"],
}

OPTIONAL_PARTS = {("chair", "armrest")}


@dataclass(frozen=True)
class LexiconEntry:
    """One prompt phrase bound to a recipe and its parameter ranges.

    Parameter values are float (lo, hi) ranges, fixed floats, or "=name"
    aliases copying an earlier parameter. ``layout_overrides`` lets a
    family re-range a shared layout field (e.g. short legs lower the
    whole seat).
    """

    prompt: str
    recipe: str
    params: dict = field(default_factory=dict)
    layout_overrides: dict = field(default_factory=dict)


class PromptLexicon:
    def __init__(self, entries: dict[tuple[str, str], list[LexiconEntry]]):
        self._entries = entries
        for (cat, part), items in entries.items():
            if part not in CATEGORY_PARTS.get(cat, ()):
                raise ValueError(f"unknown part type {part!r} for category {cat!r}")
            seen = set()
            for e in items:
                if not _PHRASE_RE.match(e.prompt):
                    raise ValueError(f"bad prompt phrase {e.prompt!r}")
                if e.prompt in seen:
                    raise ValueError(f"duplicate prompt {e.prompt!r} for ({cat}, {part})")
                if e.recipe not in RECIPES:
                    raise ValueError(f"unknown recipe {e.recipe!r}")
                seen.add(e.prompt)

    def entries(self, category: str, part_type: str) -> list[LexiconEntry]:
        return self._entries[(category, part_type)]

    def phrases(self, category: str, part_type: str) -> list[str]:
        return [e.prompt for e in self.entries(category, part_type)]

    def entry_for_prompt(self, category: str, part_type: str, prompt: str) -> LexiconEntry:
        for e in self.entries(category, part_type):
            if e.prompt == prompt:
                return e
        raise KeyError(f"prompt {prompt!r} not in lexicon for ({category}, {part_type})")

    def part_types(self, category: str) -> list[str]:
        return CATEGORY_PARTS[category]

    def categories(self) -> list[str]:
        return sorted({cat for cat, _ in self._entries})

    def vocabulary(self) -> list[str]:
        words = set()
        for items in self._entries.values():
            for e in items:
                words.update(e.prompt.split())
        return sorted(words)

    def counts(self) -> dict[tuple[str, str], int]:
        return {key: len(items) for key, items in self._entries.items()}


def _chair_backs():
    E = LexiconEntry
    wf, hf = "width_frac", "height_frac"
    return [
        E("flat back", "panel_back", {wf: (0.9, 1.0), hf: (0.9, 1.1), "tilt": 0.0}),
        E("straight back", "panel_back", {wf: (0.78, 0.88), hf: (0.95, 1.15), "tilt": 0.0}),
        E("inclined back", "panel_back", {wf: (0.85, 1.0), hf: (0.9, 1.1), "tilt": (0.22, 0.45)}),
        E("tall back", "panel_back", {wf: (0.8, 0.95), hf: (1.4, 1.65), "tilt": 0.0}),
        E("short back", "panel_back", {wf: (0.85, 1.0), hf: (0.45, 0.6), "tilt": 0.0}),
        E("wide back", "panel_back", {wf: (1.1, 1.25), hf: (0.8, 1.0), "tilt": 0.0}),
        E("narrow back", "panel_back", {wf: (0.5, 0.65), hf: (0.9, 1.1), "tilt": 0.0}),
        E("curved back", "arc_back", {wf: (0.9, 1.05), hf: (0.9, 1.1), "half_angle": (0.55, 0.8)}),
        E("arched back", "arch_back", {wf: (0.85, 1.0), hf: (1.0, 1.2)}),
        E("slatted back", "slat_back", {wf: (0.85, 1.0), hf: (0.9, 1.1), "n_slats": (3, 5.99), "fill": (0.55, 0.65)}),
        E("ladder back", "slat_back", {wf: (0.85, 1.0), hf: (1.0, 1.2), "n_slats": (2, 3.99), "fill": (0.3, 0.42)}),
        E("barred back", "bar_back", {wf: (0.85, 1.0), hf: (0.9, 1.1), "n_bars": (4, 6.99), "bar_w": (0.05, 0.07)}),
    ]


def _chair_seats():
    E = LexiconEntry
    return [
        E("flat seat", "slab_seat", {"thickness": (0.06, 0.09)}),
        E("thick seat", "slab_seat", {"thickness": (0.14, 0.2)}),
        E("thin seat", "slab_seat", {"thickness": (0.03, 0.045)}),
        E("square seat", "square_seat", {"thickness": (0.06, 0.1)}),
        E("round seat", "round_seat", {"r_frac": (0.9, 1.0), "thickness": (0.06, 0.1)}),
        E("curved seat", "dished_seat", {"sag": (0.08, 0.14)}),
        E("padded seat", "padded_seat", {"base_t": (0.05, 0.07), "cushion_t": (0.06, 0.09), "inset": (0.12, 0.2)}),
    ]


def _chair_armrests():
    E = LexiconEntry
    return [
        E("flat armrest", "rail_arms", {"arm_h": (0.3, 0.38), "rail_w": (0.05, 0.07), "slope": 0.0, "round_profile": 0.0}),
        E("round armrest", "rail_arms", {"arm_h": (0.3, 0.38), "rail_w": (0.05, 0.07), "slope": 0.0, "round_profile": 1.0}),
        E("thin armrest", "rail_arms", {"arm_h": (0.3, 0.38), "rail_w": (0.025, 0.035), "slope": 0.0, "round_profile": 0.0}),
        E("wide armrest", "rail_arms", {"arm_h": (0.3, 0.38), "rail_w": (0.09, 0.12), "slope": 0.0, "round_profile": 0.0}),
        E("high armrest", "rail_arms", {"arm_h": (0.42, 0.5), "rail_w": (0.05, 0.07), "slope": 0.0, "round_profile": 0.0}),
        E("low armrest", "rail_arms", {"arm_h": (0.2, 0.26), "rail_w": (0.05, 0.07), "slope": 0.0, "round_profile": 0.0}),
        E("sloped armrest", "rail_arms", {"arm_h": (0.32, 0.4), "rail_w": (0.05, 0.07), "slope": (0.15, 0.25), "round_profile": 0.0}),
        E("curved armrest", "curved_arms", {"arm_h": (0.34, 0.42), "rail_w": (0.05, 0.07), "droop": (0.1, 0.16)}),
        E("boxy armrest", "panel_arms", {"arm_h": (0.3, 0.4), "panel_t": (0.05, 0.08)}),
    ]


def _post(thick, **kw):
    base = {"thick": thick, "taper": 1.0, "splay": 0.0, "round_cross": 0.0}
    base.update(kw)
    return base


def _chair_legs():
    E = LexiconEntry
    return [
        E("straight leg", "post_legs", _post((0.06, 0.08))),
        E("tapered leg", "post_legs", _post((0.07, 0.09), taper=(0.45, 0.65))),
        E("splayed leg", "post_legs", _post((0.06, 0.08), splay=(0.12, 0.2))),
        E("round leg", "post_legs", _post((0.06, 0.08), round_cross=1.0)),
        E("square leg", "post_legs", _post((0.07, 0.09))),
        E("thick leg", "post_legs", _post((0.12, 0.16))),
        E("thin leg", "post_legs", _post((0.03, 0.04))),
        E("short leg", "post_legs", _post((0.06, 0.08)), {"seat_h": (0.45, 0.55)}),
        E("long leg", "post_legs", _post((0.06, 0.08)), {"seat_h": (1.05, 1.2)}),
        E("slender leg", "post_legs", _post((0.02, 0.028))),
        E("block leg", "post_legs", _post((0.17, 0.22))),
        E("flared leg", "post_legs", _post((0.06, 0.08), taper=(1.45, 1.8))),
        E("conical leg", "post_legs", _post((0.08, 0.1), taper=(0.25, 0.4), round_cross=1.0)),
        E("cylindrical leg", "post_legs", _post((0.05, 0.06), round_cross=1.0)),
        E("angled leg", "post_legs", _post((0.06, 0.08), splay=(0.22, 0.3))),
        E("braced leg", "braced_legs", _post((0.06, 0.08), stretcher_h=(0.3, 0.45))),
        E("single-rod leg", "pedestal_leg", {"col_r": (0.03, 0.045), "base_r": (0.3, 0.4), "star": 0.0}),
        E("pedestal leg", "pedestal_leg", {"col_r": (0.07, 0.1), "base_r": (0.35, 0.45), "star": 0.0}),
        E("star-base leg", "pedestal_leg", {"col_r": (0.04, 0.06), "base_r": (0.35, 0.45), "star": 1.0}),
        E("sled leg", "sled_legs", {"runner_t": (0.04, 0.06)}),
        E("crossed leg", "scissor_legs", {"bar_w": (0.04, 0.06)}),
        E("hairpin leg", "hairpin_legs", {"rod_r": (0.012, 0.018), "spread": (0.18, 0.26)}),
    ]


def _tabletops():
    E = LexiconEntry
    return [
        E("rectangular tabletop", "slab_top", {"thickness": (0.05, 0.08)}),
        E("square tabletop", "square_top", {"thickness": (0.05, 0.08)}),
        E("round tabletop", "round_top", {"r_frac": (0.95, 1.1), "thickness": (0.05, 0.08)}),
        E("oval tabletop", "oval_top", {"ry_frac": (0.85, 1.0), "thickness": (0.05, 0.08)}),
        E("thick tabletop", "slab_top", {"thickness": (0.12, 0.18)}),
        E("thin tabletop", "slab_top", {"thickness": (0.025, 0.04)}),
    ]


def _table_legs():
    E = LexiconEntry
    return [
        E("straight leg", "post_legs", _post((0.06, 0.08))),
        E("tapered leg", "post_legs", _post((0.07, 0.09), taper=(0.45, 0.65))),
        E("splayed leg", "post_legs", _post((0.06, 0.08), splay=(0.12, 0.2))),
        E("round leg", "post_legs", _post((0.06, 0.08), round_cross=1.0)),
        E("square leg", "post_legs", _post((0.07, 0.09))),
        E("thick leg", "post_legs", _post((0.12, 0.16))),
        E("thin leg", "post_legs", _post((0.03, 0.04))),
        E("angled leg", "post_legs", _post((0.06, 0.08), splay=(0.22, 0.3))),
        E("braced leg", "braced_legs", _post((0.06, 0.08), stretcher_h=(0.3, 0.45))),
        E("block leg", "post_legs", _post((0.17, 0.22))),
        E("pedestal leg", "pedestal_leg", {"col_r": (0.08, 0.12), "base_r": (0.4, 0.5), "star": 0.0}),
        E("double-pedestal leg", "double_pedestal", {"col_r": (0.06, 0.09), "base_r": (0.25, 0.32)}),
        E("trestle leg", "trestle_legs", {"slab_t": (0.05, 0.08)}),
        E("crossed leg", "scissor_legs", {"bar_w": (0.04, 0.06)}),
        E("hairpin leg", "hairpin_legs", {"rod_r": (0.012, 0.018), "spread": (0.18, 0.26)}),
        E("sled leg", "sled_legs", {"runner_t": (0.04, 0.06)}),
    ]


def _lamp_heads():
    E = LexiconEntry
    return [
        E("cylindrical head", "shade", {"r_bottom": (0.22, 0.3), "r_top": "=r_bottom", "height": (0.3, 0.42)}),
        E("conical head", "shade", {"r_bottom": (0.3, 0.4), "r_top": (0.1, 0.15), "height": (0.3, 0.42)}),
        E("flared head", "shade", {"r_bottom": (0.42, 0.52), "r_top": (0.08, 0.12), "height": (0.25, 0.35)}),
        E("narrow head", "shade", {"r_bottom": (0.1, 0.14), "r_top": "=r_bottom", "height": (0.38, 0.5)}),
        E("drum head", "shade", {"r_bottom": (0.3, 0.4), "r_top": "=r_bottom", "height": (0.14, 0.2)}),
        E("spherical head", "ball_head", {"r": (0.2, 0.28)}),
        E("dome head", "dome_head", {"r": (0.22, 0.3)}),
        E("square head", "box_shade", {"w": (0.35, 0.45), "height": (0.3, 0.4)}),
    ]


def _lamp_posts():
    E = LexiconEntry
    return [
        E("straight post", "rod_post", {"r": (0.035, 0.05)}),
        E("thick post", "rod_post", {"r": (0.07, 0.1)}),
        E("thin post", "rod_post", {"r": (0.015, 0.022)}),
        E("curved post", "curved_post", {"r": (0.03, 0.04), "bend": (0.5, 0.8)}),
        E("segmented post", "segmented_post", {"r": (0.035, 0.05), "n_seg": (4, 6.99)}),
        E("tripod post", "tripod_post", {"r": (0.02, 0.03), "spread": (0.25, 0.35)}),
    ]


def _lamp_bases():
    E = LexiconEntry
    return [
        E("round base", "disk_base", {"r": (0.25, 0.35), "t": (0.04, 0.06)}),
        E("flat base", "disk_base", {"r": (0.38, 0.48), "t": (0.015, 0.025)}),
        E("heavy base", "disk_base", {"r": (0.28, 0.36), "t": (0.1, 0.16)}),
        E("square base", "box_base", {"w": (0.45, 0.6), "t": (0.04, 0.06)}),
        E("dome base", "dome_base", {"r": (0.22, 0.3)}),
        E("tiered base", "tiered_base", {"r": (0.3, 0.38), "t": (0.035, 0.05)}),
    ]


def default_lexicon() -> PromptLexicon:
    """Lexicon with the reference per-part-type prompt counts
    (chair 12/7/9/22, table 6/16, lamp 8/6/6)."""
    return PromptLexicon(
        {
            ("chair", "back"): _chair_backs(),
            ("chair", "seat"): _chair_seats(),
            ("chair", "armrest"): _chair_armrests(),
            ("chair", "leg"): _chair_legs(),
            ("table", "tabletop"): _tabletops(),
            ("table", "leg"): _table_legs(),
            ("lamp", "head"): _lamp_heads(),
            ("lamp", "post"): _lamp_posts(),
            ("lamp", "base"): _lamp_bases(),
        }
    )


def sample_entry_params(entry: LexiconEntry, rng, mode: str = "sample") -> dict[str, float]:
    """Resolve an entry's parameter spec into concrete floats.

    mode="sample" draws uniformly from each range; mode="mid" takes
    midpoints (used for family prototypes). Alias values "=name" copy a
    previously resolved parameter.
    """
    out: dict[str, float] = {}
    aliases = []
    for name, spec in entry.params.items():
        if isinstance(spec, str):
            aliases.append((name, spec))
        elif isinstance(spec, tuple):
            lo, hi = spec
            u = rng.random() if mode == "sample" else 0.5
            out[name] = lo + u * (hi - lo)
        else:
            out[name] = float(spec)
    for name, spec in aliases:
        out[name] = out[spec[1:]]
    return out
