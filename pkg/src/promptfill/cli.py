"""Command-line entry points for the full pipeline.

Exit codes: 0 success, 2 usage error (argparse), 1 runtime error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np


def _add_gen_data(sub):
    p = sub.add_parser("gen-data", help="generate a synthetic part-annotated dataset")
    p.add_argument("category", choices=["chair", "table", "lamp"])
    p.add_argument("count", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--points-per-part", type=int, default=1024)
    p.add_argument("--out", required=True, help="output prefix: writes <out>.jsonl and <out>.split.json")


def _add_pretrain(sub):
    p = sub.add_parser("pretrain", help="stage-1 contrastive pre-training")
    p.add_argument("data", help="dataset prefix or .jsonl path")
    p.add_argument("--out", required=True, help="checkpoint path")
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--batch", type=int, default=32)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--tau", type=float, default=0.07)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--preset", choices=["desk", "paper"], default="desk")


def _add_train(sub):
    p = sub.add_parser("train", help="stage-2 completion training")
    p.add_argument("bench", help="benchmark .jsonl (training instances)")
    p.add_argument("--data", help="dataset prefix/.jsonl (for the lexicon when no pretrain ckpt)")
    p.add_argument("--pretrain-ckpt")
    p.add_argument("--val-bench")
    p.add_argument("--out", required=True)
    p.add_argument("--epochs", type=int, default=60)
    p.add_argument("--lr", type=float, default=1e-4)
    p.add_argument("--lambda-coarse", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--fusion-mode", choices=["attention", "concat"], default="attention")
    p.add_argument("--no-pretrained", action="store_true")
    p.add_argument("--freeze-encoders", action="store_true")
    p.add_argument("--category", default="chair")
    p.add_argument("--preset", choices=["desk", "paper"], default="desk")


def _add_bench(sub):
    p = sub.add_parser("bench", help="build completion benchmark instances")
    p.add_argument("data", help="dataset prefix or .jsonl path")
    p.add_argument("--mode", choices=["partnet", "partnet_scan"], default="partnet")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--split", choices=["train", "val", "test", "all"], default="test")
    p.add_argument("--out", required=True)


def _add_eval(sub):
    p = sub.add_parser("eval", help="evaluate a checkpoint on a benchmark")
    p.add_argument("bench")
    p.add_argument("ckpt", nargs="?", help="completion checkpoint (omit with --oracle)")
    p.add_argument("--oracle", action="store_true", help="evaluate the gt-returning stub instead")
    p.add_argument("--multimodal", action="store_true")
    p.add_argument("--cd-target", choices=["missing", "full"], default="missing")
    p.add_argument("--k", type=int)
    p.add_argument("--sample", action="store_true", help="sample prompts instead of sorted order")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--category", default=None)
    p.add_argument("--json", dest="json_out", help="also write the report as JSON")


def _add_ablate(sub):
    p = sub.add_parser("ablate", help="train and evaluate the A/B/full ablation grid")
    p.add_argument("data", help="dataset prefix or .jsonl path")
    p.add_argument("--seeds", default="0,1,2")
    p.add_argument("--pretrain-epochs", type=int, default=40)
    p.add_argument("--train-epochs", type=int, default=30)
    p.add_argument("--category", default="chair")
    p.add_argument("--mode", choices=["partnet", "partnet_scan"], default="partnet")
    p.add_argument("--json", dest="json_out")


def _add_complete(sub):
    p = sub.add_parser("complete", help="complete one partial cloud")
    p.add_argument("input", help="partial cloud .xyz")
    p.add_argument("prompt")
    p.add_argument("ckpt")
    p.add_argument("output", help="completed cloud .xyz")


def _add_export_emb(sub):
    p = sub.add_parser("export-emb", help="export joint-space embeddings to CSV")
    p.add_argument("data")
    p.add_argument("ckpt", help="pretrain checkpoint")
    p.add_argument("out")
    p.add_argument("--split", choices=["train", "val", "test", "all"], default="all")


def _add_serve(sub):
    p = sub.add_parser("serve", help="serve completion over HTTP")
    p.add_argument("ckpt")
    p.add_argument("--port", type=int, default=8080)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--shapes", help="benchmark .jsonl with demo instances")


def _add_demo(sub):
    p = sub.add_parser("demo", help="build a small end-to-end demo bundle (data, checkpoints, benchmark)")
    p.add_argument("--out", default="demo")
    p.add_argument("--shapes", type=int, default=48)
    p.add_argument("--pretrain-epochs", type=int, default=40)
    p.add_argument("--train-epochs", type=int, default=40)
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="promptfill", description="prompt-guided point cloud completion"
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for add in (
        _add_gen_data,
        _add_pretrain,
        _add_train,
        _add_bench,
        _add_eval,
        _add_ablate,
        _add_complete,
        _add_export_emb,
        _add_serve,
        _add_demo,
    ):
        add(sub)
    return parser


def _load_dataset(prefix: str):
    from .data import load_partnet_prompt

    data_path = Path(prefix if prefix.endswith(".jsonl") else prefix + ".jsonl")
    split_path = Path(str(data_path)[: -len(".jsonl")] + ".split.json")
    return load_partnet_prompt(data_path, split_path=split_path if split_path.exists() else None)


def _split_ids(split, which: str):
    if which == "all":
        return split.all_ids()
    return getattr(split, which)


def cmd_gen_data(args) -> int:
    from .data import build_dataset, save_shapes_jsonl, save_split_json

    shapes, split, _ = build_dataset(
        args.category, args.count, args.seed, points_per_part=args.points_per_part
    )
    save_shapes_jsonl(args.out + ".jsonl", shapes)
    save_split_json(args.out + ".split.json", split)
    print(f"wrote {len(shapes)} shapes to {args.out}.jsonl (split {len(split.train)}/{len(split.val)}/{len(split.test)})")
    return 0


def cmd_pretrain(args) -> int:
    from .data import default_lexicon
    from .encoders import EncoderConfig
    from .pretrain import (
        PretrainConfig,
        run_pretraining,
        save_pretrain_checkpoint,
        write_history_csv,
    )

    shapes, split = _load_dataset(args.data)
    enc_cfg = EncoderConfig.paper_preset() if args.preset == "paper" else EncoderConfig()
    cfg = PretrainConfig(tau=args.tau, batch=args.batch, epochs=args.epochs, lr=args.lr, seed=args.seed)
    result = run_pretraining(shapes, split.train, split.val, enc_cfg, cfg, default_lexicon())
    save_pretrain_checkpoint(args.out, result, cfg, split.train)
    write_history_csv(args.out + ".history.csv", result.history)
    last = result.history[-1]
    print(f"pretrained {cfg.epochs} epochs; final loss {last[1]:.4f}; checkpoint {args.out}")
    return 0


def cmd_train(args) -> int:
    from .completion import (
        CompletionTrainConfig,
        FusionConfig,
        save_completion_checkpoint,
        train_completion,
        write_completion_history_csv,
    )
    from .data import default_lexicon, load_benchmark_jsonl
    from .encoders import EncoderConfig
    from .pretrain import load_pretrain_checkpoint

    instances = load_benchmark_jsonl(args.bench)
    val_instances = load_benchmark_jsonl(args.val_bench) if args.val_bench else None
    pretrained = None
    if args.pretrain_ckpt:
        enc, store, _ = load_pretrain_checkpoint(args.pretrain_ckpt)
        pretrained = (enc, store.arrays())
        enc_cfg = enc.cfg
    else:
        enc_cfg = EncoderConfig.paper_preset() if args.preset == "paper" else EncoderConfig()
    fus_base = FusionConfig.paper_preset() if args.preset == "paper" else FusionConfig()
    fusion = FusionConfig(
        d_fuse=fus_base.d_fuse,
        fusion_blocks=fus_base.fusion_blocks,
        decoder_blocks=fus_base.decoder_blocks,
        heads=fus_base.heads,
        n_coarse=fus_base.n_coarse,
        patch=fus_base.patch,
        k_query=fus_base.k_query,
        fusion_mode=args.fusion_mode,
        use_pretrained=not args.no_pretrained and pretrained is not None,
        freeze_encoders=args.freeze_encoders,
    )
    cfg = CompletionTrainConfig(
        epochs=args.epochs, lr=args.lr, lambda_coarse=args.lambda_coarse, seed=args.seed
    )
    result = train_completion(
        instances, enc_cfg, fusion, cfg,
        lexicon=default_lexicon(), pretrained=pretrained, val_instances=val_instances,
    )
    save_completion_checkpoint(args.out, result, cfg, provenance={"category": args.category})
    write_completion_history_csv(args.out + ".history.csv", result.history)
    print(f"trained {cfg.epochs} epochs; final train CD {result.history[-1][1]:.5f}; checkpoint {args.out}")
    return 0


def cmd_bench(args) -> int:
    from .data import make_benchmark, save_benchmark_jsonl

    shapes, split = _load_dataset(args.data)
    wanted = set(_split_ids(split, args.split))
    instances = []
    for shape in shapes:
        if shape.shape_id not in wanted or len(shape.parts) < 2:
            continue
        instances.append(make_benchmark(shape, seed=args.seed, mode=args.mode))
    save_benchmark_jsonl(args.out, instances)
    print(f"wrote {len(instances)} {args.mode} instances to {args.out}")
    return 0


def cmd_eval(args) -> int:
    from .completion import load_completion_checkpoint, model_id_of
    from .data import default_lexicon, load_benchmark_jsonl
    from .evalharness import (
        eval_multimodal,
        eval_one_to_one,
        format_multimodal_table,
        format_one_to_one_table,
        model_completer,
        oracle_completer,
    )

    instances = load_benchmark_jsonl(args.bench)
    if args.oracle:
        completer = oracle_completer()
        category = args.category or "chair"
        model_id = "oracle"
    else:
        if not args.ckpt:
            print("eval: a checkpoint is required unless --oracle is given", file=sys.stderr)
            return 2
        model, store, config = load_completion_checkpoint(args.ckpt)
        completer = model_completer(model, store)
        category = args.category or config.get("category", "chair")
        model_id = model_id_of(config)
    if args.multimodal:
        report = eval_multimodal(
            instances, completer, category, default_lexicon(),
            k=args.k, sample=args.sample, seed=args.seed, model_id=model_id,
        )
        print(format_multimodal_table([report]))
    else:
        report = eval_one_to_one(
            instances, completer, category, cd_target=args.cd_target, model_id=model_id
        )
        print(format_one_to_one_table([report]))
    for note in report.footnotes:
        print(f"note: {note}")
    if args.json_out:
        Path(args.json_out).write_text(report.to_json())
    return 0


def cmd_ablate(args) -> int:
    from .completion import CompletionTrainConfig, FusionConfig
    from .data import default_lexicon, make_benchmark
    from .encoders import EncoderConfig
    from .evalharness import format_ablation_table, run_ablation
    from .pretrain import PretrainConfig

    shapes, split = _load_dataset(args.data)
    by_id = {s.shape_id: s for s in shapes}
    train_instances = [
        make_benchmark(by_id[sid], seed=0, mode=args.mode)
        for sid in split.train
        if len(by_id[sid].parts) >= 2
    ]
    val_ids = split.val + split.test
    val_instances = [
        make_benchmark(by_id[sid], seed=0, mode=args.mode)
        for sid in val_ids
        if len(by_id[sid].parts) >= 2
    ]
    seeds = [int(s) for s in args.seeds.split(",") if s != ""]
    rows = run_ablation(
        shapes,
        split,
        args.category,
        train_instances,
        val_instances,
        EncoderConfig(),
        FusionConfig(),
        PretrainConfig(epochs=args.pretrain_epochs),
        CompletionTrainConfig(epochs=args.train_epochs),
        default_lexicon(),
        seeds=seeds,
    )
    print(format_ablation_table(rows))
    if args.json_out:
        Path(args.json_out).write_text(
            json.dumps([row.__dict__ for row in rows], indent=2, sort_keys=True)
        )
    return 0


def cmd_complete(args) -> int:
    from .completion import complete, load_completion_checkpoint
    from .geom import load_xyz, save_xyz

    partial = load_xyz(args.input)
    model, store, _ = load_completion_checkpoint(args.ckpt)
    out = complete(model, store, partial, args.prompt)
    save_xyz(args.output, out.full)
    print(f"wrote {len(out.full)} points ({len(partial)} input + {len(out.missing)} generated) to {args.output}")
    return 0


def cmd_export_emb(args) -> int:
    from .evalharness import export_embeddings
    from .pretrain import load_pretrain_checkpoint

    shapes, split = _load_dataset(args.data)
    enc, store, _ = load_pretrain_checkpoint(args.ckpt)
    rows = export_embeddings(shapes, _split_ids(split, args.split), enc, store, args.out)
    print(f"wrote {rows} embedding rows to {args.out}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import bundle_from_checkpoint, create_app

    port = int(os.environ.get("P2M2_PORT", args.port))
    bundle = bundle_from_checkpoint(args.ckpt, args.shapes)
    app = create_app(bundle)
    uvicorn.run(app, host=args.host, port=port, log_level="warning")
    return 0


def cmd_demo(args) -> int:
    from .completion import (
        CompletionTrainConfig,
        FusionConfig,
        save_completion_checkpoint,
        train_completion,
    )
    from .data import (
        build_dataset,
        make_benchmark,
        save_benchmark_jsonl,
        save_shapes_jsonl,
        save_split_json,
    )
    from .encoders import EncoderConfig
    from .pretrain import PretrainConfig, run_pretraining, save_pretrain_checkpoint

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    print(f"[1/4] generating {args.shapes} chairs")
    shapes, split, lex = build_dataset("chair", args.shapes, args.seed)
    save_shapes_jsonl(out / "chairs.jsonl", shapes)
    save_split_json(out / "chairs.split.json", split)

    print(f"[2/4] pre-training encoders ({args.pretrain_epochs} epochs)")
    pre_cfg = PretrainConfig(epochs=args.pretrain_epochs, seed=args.seed)
    pre = run_pretraining(shapes, split.train, split.val, EncoderConfig(), pre_cfg, lex)
    save_pretrain_checkpoint(out / "pretrain.ckpt", pre, pre_cfg, split.train)

    by_id = {s.shape_id: s for s in shapes}
    train_instances = [make_benchmark(by_id[s], seed=0, mode="partnet") for s in split.train]
    demo_instances = [
        make_benchmark(by_id[s], seed=0, mode="partnet") for s in split.val + split.test
    ]
    save_benchmark_jsonl(out / "bench.jsonl", demo_instances)

    print(f"[3/4] training completion ({args.train_epochs} epochs)")
    t_cfg = CompletionTrainConfig(epochs=args.train_epochs, seed=args.seed)
    res = train_completion(
        train_instances, pre.encoders.cfg, FusionConfig(), t_cfg,
        pretrained=(pre.encoders, pre.store.arrays()),
    )
    save_completion_checkpoint(out / "model.ckpt", res, t_cfg, provenance={"category": "chair"})

    print("[4/4] demo bundle ready:")
    print(f"  serve: promptfill serve {out/'model.ckpt'} --shapes {out/'bench.jsonl'}")
    return 0


_COMMANDS = {
    "gen-data": cmd_gen_data,
    "pretrain": cmd_pretrain,
    "train": cmd_train,
    "bench": cmd_bench,
    "eval": cmd_eval,
    "ablate": cmd_ablate,
    "complete": cmd_complete,
    "export-emb": cmd_export_emb,
    "serve": cmd_serve,
    "demo": cmd_demo,
}


def main(argv=None) -> int:
    import torch

    torch.set_num_threads(1)
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ValueError, OSError, KeyError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
