"""Dataset construction, 7:1:2 splits and the JSONL interchange format."""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass

import numpy as np

from ..geom import PointCloud, fps
from .lexicon import CATEGORY_PARTS, PromptLexicon, default_lexicon
from .shapes import POINTS_PER_PART, PartAnnotatedShape, ShapePart, generate_shape

_S_SPLIT = 60

# full-export reference totals per category: (shapes, parts)
FULL_EXPORT_COUNTS = {"chair": (8176, 22175), "table": (9906, 17830), "lamp": (3408, 9201)}


@dataclass(frozen=True)
class DatasetSplit:
    train: list
    val: list
    test: list

    def __post_init__(self):
        ids = self.train + self.val + self.test
        if len(ids) != len(set(ids)):
            raise ValueError("split lists overlap")

    def all_ids(self) -> list:
        return self.train + self.val + self.test


def make_split(shape_ids, seed: int, ratios=(7, 1, 2)) -> DatasetSplit:
    """Deterministic shuffle then 7:1:2 (by default) partition."""
    ids = list(shape_ids)
    rng = np.random.default_rng([seed, _S_SPLIT])
    rng.shuffle(ids)
    total = sum(ratios)
    n_train = len(ids) * ratios[0] // total
    n_val = len(ids) * ratios[1] // total
    return DatasetSplit(ids[:n_train], ids[n_train : n_train + n_val], ids[n_train + n_val :])


def build_dataset(
    category: str,
    count: int,
    seed: int,
    *,
    points_per_part: int = POINTS_PER_PART,
    lexicon: PromptLexicon | None = None,
):
    """Generate ``count`` shapes (seeds seed..seed+count-1) plus a split."""
    if count < 10:
        raise ValueError("dataset needs at least 10 shapes")
    lexicon = lexicon or default_lexicon()
    shapes = [
        generate_shape(category, s, points_per_part=points_per_part, lexicon=lexicon)
        for s in range(seed, seed + count)
    ]
    split = make_split([s.shape_id for s in shapes], seed)
    return shapes, split, lexicon


def save_shapes_jsonl(path, shapes) -> None:
    """One shape per line: shape_id, category, parts with inline points."""
    with open(path, "w") as f:
        for shape in shapes:
            record = {
                "shape_id": shape.shape_id,
                "category": shape.category,
                "parts": [
                    {
                        "part_type": p.part_type,
                        "prompt": p.prompt,
                        "points": p.cloud.points.tolist(),
                    }
                    for p in shape.parts
                ],
            }
            f.write(json.dumps(record) + "\n")


def save_split_json(path, split: DatasetSplit) -> None:
    with open(path, "w") as f:
        json.dump({"train": split.train, "val": split.val, "test": split.test}, f)


def load_split_json(path) -> DatasetSplit:
    with open(path) as f:
        data = json.load(f)
    return DatasetSplit(data["train"], data["val"], data["test"])


def _resample_part(points: np.ndarray, n: int) -> np.ndarray:
    if points.shape[0] == n:
        return points
    if points.shape[0] > n:
        return points[fps(points, n)]
    reps = np.resize(np.arange(points.shape[0]), n)
    return points[reps]


def load_partnet_prompt(
    path,
    *,
    points_per_part: int = POINTS_PER_PART,
    split_path=None,
    split_seed: int = 0,
    expect_full_category: bool = False,
):
    """Load a part-annotated JSONL dataset.

    Part clouds whose size differs from ``points_per_part`` are
    resampled (FPS down, repetition padding up). The declared split is
    read from ``split_path`` when given; otherwise a deterministic 7:1:2
    split is derived. With ``expect_full_category`` the loader warns
    (not fails) when totals differ from the full-export reference
    counts.
    """
    shapes = []
    part_total = 0
    with open(path) as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as e:
                raise ValueError(f"{path}:{lineno}: malformed JSON ({e.msg})") from None
            try:
                shape_id = rec["shape_id"]
                category = rec["category"]
                raw_parts = rec["parts"]
            except (KeyError, TypeError) as e:
                raise ValueError(f"{path}:{lineno}: missing field {e}") from None
            legal = CATEGORY_PARTS.get(category)
            if legal is None:
                raise ValueError(f"{path}:{lineno}: unknown category {category!r}")
            if not raw_parts:
                raise ValueError(f"{path}:{lineno}: shape {shape_id!r} has no parts")
            parts = []
            for rp in raw_parts:
                pt = rp.get("part_type")
                if pt not in legal:
                    raise ValueError(
                        f"{path}:{lineno}: unknown part_type {pt!r} for category {category!r}"
                    )
                prompt = rp.get("prompt", "")
                if not prompt:
                    raise ValueError(f"{path}:{lineno}: empty prompt for {pt!r}")
                pts = np.asarray(rp["points"], dtype=np.float64)
                if pts.ndim != 2 or pts.shape[1] != 3 or pts.shape[0] < 1:
                    raise ValueError(f"{path}:{lineno}: bad points array for {pt!r}")
                pts = _resample_part(pts, points_per_part)
                parts.append(ShapePart(pt, prompt, PointCloud(pts), {}))
            shapes.append(PartAnnotatedShape(shape_id, category, parts))
            part_total += len(parts)

    if not shapes:
        raise ValueError(f"{path}: empty dataset")
    if expect_full_category:
        category = shapes[0].category
        ref = FULL_EXPORT_COUNTS.get(category)
        if ref and (len(shapes), part_total) != ref:
            warnings.warn(
                f"{category} export has {len(shapes)} shapes / {part_total} parts; "
                f"full reference export is {ref[0]} / {ref[1]}",
                stacklevel=2,
            )
    if split_path is not None:
        split = load_split_json(split_path)
    else:
        split = make_split([s.shape_id for s in shapes], split_seed)
    return shapes, split


def load_shapes_jsonl(path, points_per_part: int = POINTS_PER_PART):
    shapes, _ = load_partnet_prompt(path, points_per_part=points_per_part)
    return shapes
