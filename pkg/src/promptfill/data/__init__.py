from .benchmark import (
    PARTIAL_SIZE,
    BenchmarkInstance,
    load_benchmark_jsonl,
    make_benchmark,
    save_benchmark_jsonl,
    scan_from_direction,
    virtual_scan,
)
from .dataset import (
    DatasetSplit,
    build_dataset,
    load_partnet_prompt,
    load_shapes_jsonl,
    load_split_json,
    make_split,
    save_shapes_jsonl,
    save_split_json,
)
from .lexicon import CATEGORY_PARTS, LexiconEntry, PromptLexicon, default_lexicon
from .shapes import (
    POINTS_PER_PART,
    PartAnnotatedShape,
    ShapePart,
    build_part_points,
    generate_shape,
    layout_of_shape,
    normalization_of_shape,
    sample_part_points,
    validate_shape,
)

__all__ = [
    "BenchmarkInstance",
    "CATEGORY_PARTS",
    "DatasetSplit",
    "LexiconEntry",
    "PARTIAL_SIZE",
    "POINTS_PER_PART",
    "PartAnnotatedShape",
    "PromptLexicon",
    "ShapePart",
    "build_dataset",
    "build_part_points",
    "default_lexicon",
    "generate_shape",
    "layout_of_shape",
    "load_benchmark_jsonl",
    "load_partnet_prompt",
    "load_shapes_jsonl",
    "load_split_json",
    "make_benchmark",
    "make_split",
    "normalization_of_shape",
    "sample_part_points",
    "save_benchmark_jsonl",
    "save_shapes_jsonl",
    "save_split_json",
    "validate_shape",
    "virtual_scan",
]
