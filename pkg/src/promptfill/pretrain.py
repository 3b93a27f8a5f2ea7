"""Cross-modal contrastive pre-training of the part/prompt encoders.

Matched (part cloud, prompt) pairs are pulled together in the shared
256-d space by a symmetric InfoNCE loss over in-batch negatives;
retrieval accuracy on held-out parts is the quantitative check that the
two modalities actually aligned.
"""
from __future__ import annotations

import csv
import hashlib
from dataclasses import asdict, dataclass, field

import numpy as np
import torch

from . import nn
from .encoders import (
    EncoderConfig,
    Encoders,
    PointGraph,
    build_vocab,
    prepare_point_graph,
    stack_graphs,
    stack_tokens,
    tokenize,
)

_S_SHUFFLE = 90


@dataclass(frozen=True)
class PretrainConfig:
    tau: float = 0.07
    batch: int = 32
    epochs: int = 200
    lr: float = 1e-3
    seed: int = 0

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError("temperature must be positive")
        if self.batch < 2:
            raise ValueError("contrastive batches need at least 2 pairs")


@dataclass
class PartRecord:
    """One (cloud, prompt) pair plus its cached encoder inputs."""

    shape_id: str
    part_index: int
    part_type: str
    prompt: str
    graph: PointGraph
    token_ids: np.ndarray
    token_mask: np.ndarray


def collect_parts(shapes, shape_ids, enc: Encoders) -> list[PartRecord]:
    by_id = {s.shape_id: s for s in shapes}
    records = []
    for sid in shape_ids:
        shape = by_id[sid]
        for idx, part in enumerate(shape.parts):
            seq = tokenize(part.prompt, enc.vocab, enc.cfg.max_tokens)
            records.append(
                PartRecord(
                    shape_id=sid,
                    part_index=idx,
                    part_type=part.part_type,
                    prompt=part.prompt,
                    graph=prepare_point_graph(part.cloud, enc.cfg),
                    token_ids=seq.ids,
                    token_mask=seq.mask,
                )
            )
    return records


def cosine_sim(a: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
    na = a.norm()
    nb = b.norm()
    if na.item() == 0.0 or nb.item() == 0.0:
        raise ValueError("cosine similarity undefined for zero vectors")
    return (a * b).sum() / (na * nb)


def info_nce(z_p: torch.Tensor, z_t: torch.Tensor, tau: float) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
    """Symmetric InfoNCE over cosine similarities.

    Returns (loss, point->text term, text->point term) where the loss is
    the mean of the two directional terms; each directional term is the
    mean over pairs of -log softmax(s_i/tau) at the matched column.
    """
    if z_p.shape != z_t.shape:
        raise ValueError("embedding batches must have matching shapes")
    norms_p = z_p.norm(dim=1, keepdim=True)
    norms_t = z_t.norm(dim=1, keepdim=True)
    if (norms_p == 0).any() or (norms_t == 0).any():
        raise ValueError("cosine similarity undefined for zero vectors")
    sims = (z_p / norms_p) @ (z_t / norms_t).T / tau
    n = sims.shape[0]
    labels = torch.arange(n)
    log_pt = torch.log_softmax(sims, dim=1)
    log_tp = torch.log_softmax(sims.T, dim=1)
    l_pt = -log_pt[labels, labels].mean()
    l_tp = -log_tp[labels, labels].mean()
    return (l_pt + l_tp) / 2, l_pt, l_tp


def embed_records(enc: Encoders, store: nn.ParamStore, records, batch: int = 64):
    """Project every record into the joint space: (z_P [M,256], z_T [M,256])."""
    zs_p, zs_t = [], []
    with torch.no_grad():
        for i in range(0, len(records), batch):
            chunk = records[i : i + batch]
            graphs = stack_graphs([r.graph for r in chunk])
            ids = torch.from_numpy(np.stack([r.token_ids for r in chunk]))
            mask = torch.from_numpy(np.stack([r.token_mask for r in chunk]))
            _, fp = enc.encode_points(store, graphs)
            _, ft = enc.encode_prompt(store, ids, mask)
            zs_p.append(enc.project(store, fp, "point"))
            zs_t.append(enc.project(store, ft, "text"))
    return torch.cat(zs_p), torch.cat(zs_t)


def retrieval_eval(enc: Encoders, store: nn.ParamStore, records, k: int = 5) -> dict:
    """Cross-modal retrieval accuracy; rank ties resolve to lowest index."""
    if not records:
        raise ValueError("empty evaluation split")
    z_p, z_t = embed_records(enc, store, records)
    zp = (z_p / z_p.norm(dim=1, keepdim=True)).numpy()
    zt = (z_t / z_t.norm(dim=1, keepdim=True)).numpy()
    sims = zt @ zp.T  # rows: text queries, cols: point candidates

    def accuracy(matrix):
        order = np.argsort(-matrix, axis=1, kind="stable")
        ranks = np.argmax(order == np.arange(len(matrix))[:, None], axis=1)
        return float((ranks == 0).mean()), float((ranks < k).mean())

    t2p_top1, t2p_topk = accuracy(sims)
    p2t_top1, p2t_topk = accuracy(sims.T)
    return {
        "count": len(records),
        "k": k,
        "text_to_point_top1": t2p_top1,
        "text_to_point_topk": t2p_topk,
        "point_to_text_top1": p2t_top1,
        "point_to_text_topk": p2t_topk,
    }


def dataset_fingerprint(shape_ids) -> str:
    blob = ",".join(sorted(shape_ids)).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


@dataclass
class PretrainResult:
    store: nn.ParamStore
    encoders: Encoders
    history: list = field(default_factory=list)


def run_pretraining(
    shapes,
    train_ids,
    val_ids,
    encoder_cfg: EncoderConfig,
    cfg: PretrainConfig,
    lexicon,
    eval_every: int = 1,
) -> PretrainResult:
    """Train encoders + projection heads with InfoNCE; deterministic in seed."""
    vocab = build_vocab(lexicon)
    enc = Encoders(encoder_cfg, vocab)
    store = nn.ParamStore()
    enc.init_params(store, nn.seeded_generator(cfg.seed))
    train_records = collect_parts(shapes, train_ids, enc)
    if len(train_records) < cfg.batch:
        raise ValueError(
            f"dataset has {len(train_records)} parts, need at least one batch of {cfg.batch}"
        )
    val_records = collect_parts(shapes, val_ids, enc) if val_ids else []
    state = nn.AdamState(lr=cfg.lr)
    rng = np.random.default_rng([cfg.seed, _S_SHUFFLE])
    history = []
    for epoch in range(cfg.epochs):
        perm = rng.permutation(len(train_records))
        totals, pt_terms, tp_terms = [], [], []
        for start in range(0, len(perm) - cfg.batch + 1, cfg.batch):
            chunk = [train_records[i] for i in perm[start : start + cfg.batch]]
            graphs = stack_graphs([r.graph for r in chunk])
            ids = torch.from_numpy(np.stack([r.token_ids for r in chunk]))
            mask = torch.from_numpy(np.stack([r.token_mask for r in chunk]))
            _, fp = enc.encode_points(store, graphs)
            _, ft = enc.encode_prompt(store, ids, mask)
            z_p = enc.project(store, fp, "point")
            z_t = enc.project(store, ft, "text")
            loss, l_pt, l_tp = info_nce(z_p, z_t, cfg.tau)
            nn.assert_finite(loss, "pretraining loss")
            loss.backward()
            nn.adam_step(store, state)
            totals.append(loss.item())
            pt_terms.append(l_pt.item())
            tp_terms.append(l_tp.item())
        val_top1 = None
        if val_records and (epoch % eval_every == 0 or epoch == cfg.epochs - 1):
            val_top1 = retrieval_eval(enc, store, val_records)["text_to_point_top1"]
        history.append(
            (epoch, float(np.mean(totals)), float(np.mean(pt_terms)), float(np.mean(tp_terms)), val_top1)
        )
    return PretrainResult(store=store, encoders=enc, history=history)


def evaluate_infonce(enc: Encoders, store: nn.ParamStore, records, tau: float, batch: int) -> float:
    """Mean InfoNCE over fixed contiguous batches (no shuffling)."""
    losses = []
    with torch.no_grad():
        for start in range(0, len(records) - batch + 1, batch):
            chunk = records[start : start + batch]
            graphs = stack_graphs([r.graph for r in chunk])
            ids = torch.from_numpy(np.stack([r.token_ids for r in chunk]))
            mask = torch.from_numpy(np.stack([r.token_mask for r in chunk]))
            _, fp = enc.encode_points(store, graphs)
            _, ft = enc.encode_prompt(store, ids, mask)
            loss, _, _ = info_nce(enc.project(store, fp, "point"), enc.project(store, ft, "text"), tau)
            losses.append(loss.item())
    return float(np.mean(losses))


def pretrain_config(enc: Encoders, cfg: PretrainConfig, train_ids, history=None) -> dict:
    config = {
        "kind": "pretrain",
        "pretrain": asdict(cfg),
        "dataset_fingerprint": dataset_fingerprint(train_ids),
    }
    config.update(enc.config_dict())
    if history is not None:
        config["loss_history"] = [list(row) for row in history]
    return config


def save_pretrain_checkpoint(path, result: PretrainResult, cfg: PretrainConfig, train_ids) -> None:
    config = pretrain_config(result.encoders, cfg, train_ids, result.history)
    nn.save_checkpoint(path, config, result.store.arrays())


def load_pretrain_checkpoint(path):
    """-> (Encoders, ParamStore, config dict)."""
    config, arrays = nn.load_checkpoint(path)
    if config.get("kind") != "pretrain":
        raise nn.CheckpointError(f"expected a pretrain checkpoint, got kind={config.get('kind')!r}")
    enc = Encoders(EncoderConfig(**config["encoder"]), config["vocab"])
    store = nn.ParamStore()
    enc.init_params(store, nn.seeded_generator(0))
    if set(store.names()) != set(arrays):
        raise nn.CheckpointError("checkpoint parameters do not match the declared architecture")
    store.load_arrays(arrays)
    return enc, store, config


def write_history_csv(path, rows) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["epoch", "L_total", "L_P2T", "L_T2P", "val_retrieval_top1"])
        for row in rows:
            writer.writerow(["" if v is None else v for v in row])
