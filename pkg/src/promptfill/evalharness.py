"""Evaluation protocols: one-to-one tables, diverse-completion tables,
the ablation grid and embedding export."""
from __future__ import annotations

import csv
import hashlib
import json
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from .completion import (
    CompletionModel,
    CompletionOutput,
    CompletionTrainConfig,
    FusionConfig,
    complete,
    train_completion,
)
from .encoders import EncoderConfig
from .geom import MetricsConfig, PointCloud, chamfer_l2, fscore, mmd, tmd, uhd
from .pretrain import PretrainConfig, embed_records, collect_parts, run_pretraining

CD_TARGETS = ("missing", "full")


def model_completer(model: CompletionModel, store):
    """Completer over a trained model; ignores instance ground truth."""

    def run(instance, prompt: str) -> CompletionOutput:
        return complete(model, store, instance.partial, prompt)

    return run


def oracle_completer():
    """Stub returning the ground-truth missing part verbatim: the metric
    upper bound (CD 0, F-Score 1)."""

    def run(instance, prompt: str) -> CompletionOutput:
        gt = instance.gt_missing
        return CompletionOutput(
            coarse=gt,
            missing=gt,
            full=PointCloud(np.vstack([instance.partial.points, gt.points])),
        )

    return run


def _run_id(*parts) -> str:
    blob = "|".join(str(p) for p in parts).encode()
    return hashlib.sha256(blob).hexdigest()[:12]


@dataclass
class MetricsReport:
    category: str
    mode: str
    protocol: str  # "one_to_one" | "multimodal"
    instance_count: int
    metrics: dict
    scales: dict
    k_completions: int | None = None
    cd_target: str | None = None
    model_id: str = "unknown"
    run_id: str = ""
    footnotes: list = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=2)


def eval_one_to_one(
    instances,
    completer,
    category: str,
    cfg: MetricsConfig = MetricsConfig(),
    cd_target: str = "missing",
    model_id: str = "unknown",
) -> MetricsReport:
    """Complete with the GT prompt; report mean CD-L2 and F-Score@d."""
    if cd_target not in CD_TARGETS:
        raise ValueError(f"cd_target must be one of {CD_TARGETS}")
    cds, f1s = [], []
    mode = instances[0].mode if instances else "?"
    for inst in instances:
        out = completer(inst, inst.gt_prompt)
        if cd_target == "missing":
            pred, gt = out.missing, inst.gt_missing
        else:
            pred = out.full
            gt = PointCloud(np.vstack([inst.partial.points, inst.gt_missing.points]))
        cds.append(chamfer_l2(pred, gt))
        f1s.append(fscore(pred, gt, cfg.fscore_threshold)[2])
    return MetricsReport(
        category=category,
        mode=mode,
        protocol="one_to_one",
        instance_count=len(instances),
        metrics={
            "cd_scaled": float(np.mean(cds)) * cfg.cd_scale,
            "fscore": float(np.mean(f1s)),
        },
        scales={"cd": cfg.cd_scale},
        cd_target=cd_target,
        model_id=model_id,
        run_id=_run_id(model_id, cd_target, len(instances), *(i.shape_id for i in instances)),
    )


def eval_multimodal(
    instances,
    completer,
    category: str,
    lexicon,
    cfg: MetricsConfig = MetricsConfig(),
    k: int | None = None,
    sample: bool = False,
    seed: int = 0,
    model_id: str = "unknown",
) -> MetricsReport:
    """Complete each instance under k distinct prompts for the removed
    part type; TMD measures diversity, MMD best-of-k quality, UHD
    fidelity to the partial input."""
    rng = np.random.default_rng(seed)
    tmds, mmds, uhds = [], [], []
    used_k = []
    skipped = 0
    mode = instances[0].mode if instances else "?"
    for inst in instances:
        phrases = sorted(lexicon.phrases(category, inst.removed_part_type))
        k_i = min(k or cfg.k_completions, len(phrases))
        if k_i < 2:
            warnings.warn(
                f"{inst.shape_id}: <2 prompts for part type {inst.removed_part_type!r}; skipped",
                stacklevel=2,
            )
            skipped += 1
            continue
        if sample:
            phrases = list(rng.choice(phrases, size=k_i, replace=False))
        else:
            phrases = phrases[:k_i]
        outs = [completer(inst, p) for p in phrases]
        missing_clouds = [o.missing for o in outs]
        tmds.append(tmd(missing_clouds))
        mmds.append(mmd(missing_clouds, inst.gt_missing))
        uhds.append(float(np.mean([uhd(inst.partial, o.full) for o in outs])))
        used_k.append(k_i)
    report = MetricsReport(
        category=category,
        mode=mode,
        protocol="multimodal",
        instance_count=len(instances) - skipped,
        metrics={
            "mmd_scaled": float(np.mean(mmds)) * cfg.mmd_scale if mmds else float("nan"),
            "tmd_scaled": float(np.mean(tmds)) * cfg.tmd_scale if tmds else float("nan"),
            "uhd_scaled": float(np.mean(uhds)) * cfg.uhd_scale if uhds else float("nan"),
        },
        scales={"mmd": cfg.mmd_scale, "tmd": cfg.tmd_scale, "uhd": cfg.uhd_scale},
        k_completions=int(min(used_k)) if used_k else 0,
        model_id=model_id,
        run_id=_run_id(model_id, k, sample, seed, *(i.shape_id for i in instances)),
    )
    report.footnotes.append(
        "UHD is 0 by construction when the completer concatenates the partial input into the full cloud"
    )
    return report


def format_one_to_one_table(reports) -> str:
    """Aligned text table, one category block per report (CD, F-Score)."""
    lines = ["Method          " + "".join(f"| {r.category:^16} " for r in reports)]
    lines.append("                " + "| CD      F-Score  " * len(reports))
    row = "this work       "
    for r in reports:
        row += f"| {r.metrics['cd_scaled']:<7.3f} {r.metrics['fscore']:<8.3f} "
    lines.append(row)
    return "\n".join(lines)


def format_multimodal_table(reports) -> str:
    lines = ["Category        | MMD     | TMD     | UHD     | k"]
    for r in reports:
        m = r.metrics
        lines.append(
            f"{r.category:<15} | {m['mmd_scaled']:<7.3f} | {m['tmd_scaled']:<7.3f} "
            f"| {m['uhd_scaled']:<7.3f} | {r.k_completions}"
        )
    return "\n".join(lines)


ABLATION_VARIANTS = {
    "A": {"use_pretrained": False, "fusion_mode": "concat"},
    "B": {"use_pretrained": True, "fusion_mode": "concat"},
    "full": {"use_pretrained": True, "fusion_mode": "attention"},
}


@dataclass
class AblationRow:
    variant: str
    pretrain: bool
    attention: bool
    cd_scaled: float
    tmd_scaled: float
    uhd_scaled: float
    per_seed: list = field(default_factory=list)


def run_ablation(
    shapes,
    split,
    category: str,
    train_instances,
    val_instances,
    enc_cfg: EncoderConfig,
    fusion_base: FusionConfig,
    pretrain_cfg: PretrainConfig,
    train_cfg: CompletionTrainConfig,
    lexicon,
    seeds=(0, 1, 2),
    metrics_cfg: MetricsConfig = MetricsConfig(),
    k_diverse: int = 4,
) -> list[AblationRow]:
    """Train the A/B/full grid under identical budgets and seeds."""
    rows = {name: [] for name in ABLATION_VARIANTS}
    for seed in seeds:
        pre_cfg = PretrainConfig(
            tau=pretrain_cfg.tau, batch=pretrain_cfg.batch, epochs=pretrain_cfg.epochs,
            lr=pretrain_cfg.lr, seed=seed,
        )
        pre = run_pretraining(shapes, split.train, [], enc_cfg, pre_cfg, lexicon)
        pre_arrays = pre.store.arrays()
        for name, flags in ABLATION_VARIANTS.items():
            fus = FusionConfig(
                d_fuse=fusion_base.d_fuse,
                fusion_blocks=fusion_base.fusion_blocks,
                decoder_blocks=fusion_base.decoder_blocks,
                heads=fusion_base.heads,
                n_coarse=fusion_base.n_coarse,
                patch=fusion_base.patch,
                k_query=fusion_base.k_query,
                fusion_mode=flags["fusion_mode"],
                use_pretrained=flags["use_pretrained"],
            )
            t_cfg = CompletionTrainConfig(
                epochs=train_cfg.epochs, lr=train_cfg.lr,
                lambda_coarse=train_cfg.lambda_coarse, seed=seed,
            )
            res = train_completion(
                train_instances, enc_cfg, fus, t_cfg,
                lexicon=lexicon,
                pretrained=(pre.encoders, pre_arrays) if flags["use_pretrained"] else None,
            )
            completer = model_completer(res.model, res.store)
            one = eval_one_to_one(val_instances, completer, category, metrics_cfg)
            multi = eval_multimodal(
                val_instances, completer, category, lexicon, metrics_cfg, k=k_diverse
            )
            rows[name].append(
                {
                    "seed": seed,
                    "cd_scaled": one.metrics["cd_scaled"],
                    "tmd_scaled": multi.metrics["tmd_scaled"],
                    "uhd_scaled": multi.metrics["uhd_scaled"],
                }
            )
    out = []
    for name, flags in ABLATION_VARIANTS.items():
        per_seed = rows[name]
        out.append(
            AblationRow(
                variant=name,
                pretrain=flags["use_pretrained"],
                attention=flags["fusion_mode"] == "attention",
                cd_scaled=float(np.mean([r["cd_scaled"] for r in per_seed])),
                tmd_scaled=float(np.mean([r["tmd_scaled"] for r in per_seed])),
                uhd_scaled=float(np.mean([r["uhd_scaled"] for r in per_seed])),
                per_seed=per_seed,
            )
        )
    return out


def format_ablation_table(rows: list[AblationRow]) -> str:
    lines = ["Model  Pre-train  Attention | CD      TMD     UHD"]
    for r in rows:
        pre = "x" if r.pretrain else " "
        att = "x" if r.attention else " "
        lines.append(
            f"{r.variant:<6} {pre:^9}  {att:^9} | {r.cd_scaled:<7.3f} {r.tmd_scaled:<7.3f} {r.uhd_scaled:<7.3f}"
        )
    return "\n".join(lines)


@dataclass
class ControllabilityResult:
    instance_count: int
    tmd_raw_mean: float  # unscaled TMD between the two prompted completions
    tmd_raw_min: float
    own_prototype_wins: int  # instances where BOTH completions sit closer to their own family prototype
    win_rate: float
    per_instance: list = field(default_factory=list)


def controllability_eval(
    instances,
    shapes_by_id,
    completer,
    prompt_a: str,
    prompt_b: str,
    category: str = "chair",
    part_type: str = "back",
    lexicon=None,
    prototype_points: int = 1024,
) -> ControllabilityResult:
    """Prompt-steering check on instances missing ``part_type``.

    Each instance is completed under two family prompts; diversity is
    the raw TMD between the two predicted missing parts, and adherence
    asks each completion to land closer (chamfer) to its own family's
    prototype than to the other family's. Prototypes are mid-parameter
    parts rebuilt in the instance's own layout and normalization frame.
    """
    from .data import build_part_points, layout_of_shape

    per_instance = []
    wins = 0
    tmds = []
    for inst in instances:
        if inst.removed_part_type != part_type:
            raise ValueError(
                f"{inst.shape_id}: expected instances missing {part_type!r}, got {inst.removed_part_type!r}"
            )
        shape = shapes_by_id[inst.shape_id]
        layout = layout_of_shape(shape)
        protos = {}
        for prompt in (prompt_a, prompt_b):
            raw = build_part_points(
                category, part_type, prompt, layout, prototype_points, seed=0, lexicon=lexicon
            )
            protos[prompt] = (raw - inst.center) / inst.scale
        out_a = completer(inst, prompt_a)
        out_b = completer(inst, prompt_b)
        pair_tmd = tmd([out_a.missing, out_b.missing])
        tmds.append(pair_tmd)
        a_own = chamfer_l2(out_a.missing, protos[prompt_a])
        a_other = chamfer_l2(out_a.missing, protos[prompt_b])
        b_own = chamfer_l2(out_b.missing, protos[prompt_b])
        b_other = chamfer_l2(out_b.missing, protos[prompt_a])
        won = a_own < a_other and b_own < b_other
        wins += won
        per_instance.append(
            {
                "shape_id": inst.shape_id,
                "tmd_raw": pair_tmd,
                "a_own": a_own,
                "a_other": a_other,
                "b_own": b_own,
                "b_other": b_other,
                "won": bool(won),
            }
        )
    return ControllabilityResult(
        instance_count=len(instances),
        tmd_raw_mean=float(np.mean(tmds)) if tmds else float("nan"),
        tmd_raw_min=float(np.min(tmds)) if tmds else float("nan"),
        own_prototype_wins=wins,
        win_rate=wins / len(instances) if instances else float("nan"),
        per_instance=per_instance,
    )


def export_embeddings(shapes, shape_ids, encoders, store, path) -> int:
    """Write one z_P and one z_T row per part; returns the row count."""
    records = collect_parts(shapes, shape_ids, encoders)
    z_p, z_t = embed_records(encoders, store, records)
    z_p = z_p.numpy()
    z_t = z_t.numpy()
    header = ["shape_id", "part_index", "part_type", "prompt", "modality"] + [
        f"e{i}" for i in range(z_p.shape[1])
    ]
    rows = 0
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(header)
        for i, rec in enumerate(records):
            for modality, z in (("point", z_p[i]), ("text", z_t[i])):
                writer.writerow(
                    [rec.shape_id, rec.part_index, rec.part_type, rec.prompt, modality]
                    + [f"{v:.8g}" for v in z.tolist()]
                )
                rows += 1
    return rows
