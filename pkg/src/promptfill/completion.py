"""Prompt-guided completion network: fuse, predict coarse, decode, fold.

Point and text tokens are fused by self- plus cross-attention (or plain
concatenation in the ablation mode); the pooled multimodal feature
predicts a coarse skeleton of the missing part; per-coarse-point query
proxies attend locally to the fused point tokens (kNN-gated by the FPS
center coordinates) and a shared folding head turns each proxy into a
surface patch. Only the missing part is predicted; the full shape is
the input concatenated with the prediction.
"""
from __future__ import annotations

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
    stack_tokens,
    tokenize,
)
from .geom import PointCloud, as_points, fps, knn

_S_TRAIN_SHUFFLE = 91

FUSION_MODES = ("attention", "concat")


@dataclass(frozen=True)
class FusionConfig:
    d_fuse: int = 256
    fusion_blocks: int = 2
    decoder_blocks: int = 2
    heads: int = 4
    n_coarse: int = 64
    patch: int = 16
    k_query: int = 8
    fusion_mode: str = "attention"
    use_pretrained: bool = True
    freeze_encoders: bool = False

    def __post_init__(self):
        if self.fusion_mode not in FUSION_MODES:
            raise ValueError(f"fusion_mode must be one of {FUSION_MODES}")
        if self.n_coarse < 1 or self.patch < 1:
            raise ValueError("n_coarse and patch must be positive")
        if self.d_fuse % self.heads:
            raise ValueError("d_fuse must be divisible by heads")

    @property
    def missing_size(self) -> int:
        return self.n_coarse * self.patch

    @staticmethod
    def paper_preset() -> "FusionConfig":
        # 1024-wide fused features as in the original network
        return FusionConfig(d_fuse=1024)


@dataclass(frozen=True)
class CompletionOutput:
    coarse: PointCloud
    missing: PointCloud
    full: PointCloud


def _fold_seeds(patch: int) -> torch.Tensor:
    """Fixed 2-D grid of patch seed coordinates in [-0.1, 0.1]^2."""
    side = int(np.ceil(np.sqrt(patch)))
    axis = np.linspace(-0.1, 0.1, side)
    gx, gy = np.meshgrid(axis, axis, indexing="ij")
    grid = np.stack([gx.ravel(), gy.ravel()], axis=1)[:patch]
    return torch.from_numpy(grid.astype(np.float32))


class CompletionModel:
    """All learned pieces of the stage-2 network over one ParamStore."""

    def __init__(self, enc_cfg: EncoderConfig, fusion_cfg: FusionConfig, vocab: list[str]):
        self.enc = Encoders(enc_cfg, vocab)
        self.cfg = fusion_cfg
        self.seeds32 = _fold_seeds(fusion_cfg.patch)

    @property
    def vocab(self) -> list[str]:
        return self.enc.vocab

    def init_params(self, store: nn.ParamStore, gen: torch.Generator) -> None:
        enc_cfg, cfg = self.enc.cfg, self.cfg
        # stage-2 reuses the modality encoders but not the projection heads
        self.enc.init_params(store, gen)
        nn.init_linear(store, "fuse.lift_p", enc_cfg.d_point, cfg.d_fuse, gen)
        nn.init_linear(store, "fuse.lift_t", enc_cfg.d_text, cfg.d_fuse, gen)
        if cfg.fusion_mode == "attention":
            for i in range(cfg.fusion_blocks):
                nn.init_attn_block(store, f"fuse.b{i}.self_p", cfg.d_fuse, gen)
                nn.init_attn_block(store, f"fuse.b{i}.self_t", cfg.d_fuse, gen)
                nn.init_attn_block(store, f"fuse.b{i}.cross", cfg.d_fuse, gen)
        else:
            nn.init_linear(store, "fuse.concat", enc_cfg.d_point + enc_cfg.d_text, cfg.d_fuse, gen)
        nn.init_linear(store, "coarse.fc1", cfg.d_fuse, cfg.d_fuse, gen)
        nn.init_linear(store, "coarse.fc2", cfg.d_fuse, 3 * cfg.n_coarse, gen)
        nn.init_conv1d(store, "query.conv1", 3 + cfg.d_fuse, cfg.d_fuse, gen)
        nn.init_conv1d(store, "query.conv2", cfg.d_fuse, cfg.d_fuse, gen)
        nn.init_conv1d(store, "query.conv3", cfg.d_fuse, cfg.d_fuse, gen)
        for i in range(cfg.decoder_blocks):
            nn.init_attn_block(store, f"dec.b{i}.self", cfg.d_fuse, gen)
            nn.init_attn_block(store, f"dec.b{i}.cross", cfg.d_fuse, gen)
        nn.init_linear(store, "fold.fc1", cfg.d_fuse + 2, 64, gen)
        nn.init_linear(store, "fold.fc2", 64, 64, gen)
        nn.init_linear(store, "fold.fc3", 64, 3, gen)

    def _prune_projection_heads(self, store: nn.ParamStore) -> nn.ParamStore:
        out = nn.ParamStore()
        for name, p in store.items():
            if not name.startswith("proj_"):
                out.add(name, p.detach().clone())
        return out

    def build_store(self, seed: int) -> nn.ParamStore:
        tmp = nn.ParamStore()
        self.init_params(tmp, nn.seeded_generator(seed))
        return self._prune_projection_heads(tmp)

    # ------------------------------------------------------------- forward
    def fuse_features(self, store, point_tokens, text_tokens, text_mask):
        """-> (fused sequence [(m+L), d_fuse], fused point tokens [m, d_fuse], pooled f_M [d_fuse])

        Attention mode runs per-modality self-attention then text->point
        cross-attention and mean-pools the fused sequence. Concat mode
        mean-pools each modality's tokens, concatenates and applies one
        linear layer; the sequence gets no cross-modal mixing.
        """
        cfg = self.cfg
        p = nn.linear(store, "fuse.lift_p", point_tokens)
        t = nn.linear(store, "fuse.lift_t", text_tokens)
        if cfg.fusion_mode == "attention":
            for i in range(cfg.fusion_blocks):
                p = nn.attn_block(store, f"fuse.b{i}.self_p", p, p, p, cfg.heads)
                t = nn.attn_block(store, f"fuse.b{i}.self_t", t, t, t, cfg.heads, key_mask=text_mask)
                p = nn.attn_block(store, f"fuse.b{i}.cross", p, t, t, cfg.heads, key_mask=text_mask)
            seq = torch.cat([p, t], dim=-2)
            valid = torch.cat([torch.ones(p.shape[-2], dtype=torch.bool), text_mask], dim=-1)
            pooled = seq[valid].mean(dim=-2)
        else:
            seq = torch.cat([p, t], dim=-2)
            weights = text_mask.to(text_tokens.dtype)
            text_pool = (text_tokens * weights.unsqueeze(-1)).sum(dim=-2) / weights.sum()
            point_pool = point_tokens.mean(dim=-2)
            pooled = nn.linear(store, "fuse.concat", torch.cat([point_pool, text_pool], dim=-1))
        return seq, p, pooled

    def coarse_from_fused(self, store, f_m: torch.Tensor) -> torch.Tensor:
        h = nn.gelu(nn.linear(store, "coarse.fc1", f_m))
        return nn.linear(store, "coarse.fc2", h).reshape(self.cfg.n_coarse, 3)

    def generate_queries(self, store, f_m: torch.Tensor, coarse: torch.Tensor) -> torch.Tensor:
        x = torch.cat([coarse, f_m.expand(self.cfg.n_coarse, -1)], dim=-1)
        h = nn.gelu(nn.conv1d(store, "query.conv1", x))
        h = nn.gelu(nn.conv1d(store, "query.conv2", h))
        return nn.conv1d(store, "query.conv3", h)

    def decode(self, store, proxies, fused_points, coarse, centers_np) -> torch.Tensor:
        cfg = self.cfg
        if cfg.k_query > centers_np.shape[0]:
            raise ValueError(
                f"k_query={cfg.k_query} exceeds the {centers_np.shape[0]} point tokens"
            )
        gate_idx = knn(coarse.detach().numpy(), centers_np, cfg.k_query)
        gather = torch.from_numpy(gate_idx)
        for i in range(cfg.decoder_blocks):
            proxies = nn.attn_block(store, f"dec.b{i}.self", proxies, proxies, proxies, cfg.heads)
            local_kv = fused_points[gather]  # [M, k_query, d_fuse]
            out = nn.attn_block(
                store, f"dec.b{i}.cross", proxies.unsqueeze(-2), local_kv, local_kv, cfg.heads
            )
            proxies = out.squeeze(-2)
        return proxies

    def fold(self, store, proxies: torch.Tensor, coarse: torch.Tensor) -> torch.Tensor:
        cfg = self.cfg
        seeds = self.seeds32.to(proxies.dtype)
        m, patch = cfg.n_coarse, cfg.patch
        tiled = torch.cat(
            [
                proxies.unsqueeze(1).expand(m, patch, proxies.shape[-1]),
                seeds.unsqueeze(0).expand(m, patch, 2),
            ],
            dim=-1,
        )
        h = nn.gelu(nn.linear(store, "fold.fc1", tiled))
        h = nn.gelu(nn.linear(store, "fold.fc2", h))
        offsets = nn.linear(store, "fold.fc3", h)
        points = coarse.unsqueeze(1) + offsets
        return points.reshape(m * patch, 3)

    def forward(self, store, graph: PointGraph, ids: torch.Tensor, mask: torch.Tensor):
        """-> (coarse [M, 3], missing [M*patch, 3]) as torch tensors."""
        point_tokens, _ = self.enc.encode_points(store, graph)
        text_tokens, _ = self.enc.encode_prompt(store, ids, mask)
        _, fused_points, f_m = self.fuse_features(store, point_tokens, text_tokens, mask)
        coarse = self.coarse_from_fused(store, f_m)
        proxies = self.generate_queries(store, f_m, coarse)
        proxies = self.decode(store, proxies, fused_points, coarse, graph.centers.detach().numpy())
        missing = self.fold(store, proxies, coarse)
        return coarse, missing

    def config_dict(self) -> dict:
        cfg = self.enc.config_dict()
        cfg["fusion"] = asdict(self.cfg)
        return cfg


def complete(model: CompletionModel, store: nn.ParamStore, partial, prompt: str) -> CompletionOutput:
    """Run the full pipeline on one partial cloud; deterministic."""
    partial_pts = as_points(partial)
    graph = prepare_point_graph(partial_pts, model.enc.cfg)
    seq = tokenize(prompt, model.vocab, model.enc.cfg.max_tokens)
    ids, mask = stack_tokens([seq])
    with torch.no_grad():
        coarse, missing = model.forward(store, graph, ids[0], mask[0])
    missing_np = missing.numpy().astype(np.float64)
    return CompletionOutput(
        coarse=PointCloud(coarse.numpy().astype(np.float64)),
        missing=PointCloud(missing_np),
        full=PointCloud(np.vstack([partial_pts, missing_np])),
    )


def chamfer_loss(a: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
    """Differentiable CD-L2 (sum of directional means of squared NN dists)."""
    a2 = (a**2).sum(dim=1, keepdim=True)
    b2 = (b**2).sum(dim=1, keepdim=True)
    d2 = (a2 + b2.T - 2.0 * (a @ b.T)).clamp_min(0.0)
    return d2.min(dim=1).values.mean() + d2.min(dim=0).values.mean()


@dataclass(frozen=True)
class CompletionTrainConfig:
    epochs: int = 60
    lr: float = 1e-4
    lambda_coarse: float = 1.0
    seed: int = 0


@dataclass
class PreparedInstance:
    graph: PointGraph
    ids: torch.Tensor
    mask: torch.Tensor
    gt_missing: torch.Tensor
    coarse_target: torch.Tensor


def prepare_instance(inst, model: CompletionModel) -> PreparedInstance:
    graph = prepare_point_graph(inst.partial, model.enc.cfg)
    seq = tokenize(inst.gt_prompt, model.vocab, model.enc.cfg.max_tokens)
    ids, mask = stack_tokens([seq])
    gt = inst.gt_missing.points
    coarse_target = gt[fps(inst.gt_missing, model.cfg.n_coarse)]
    return PreparedInstance(
        graph=graph,
        ids=ids[0],
        mask=mask[0],
        gt_missing=torch.from_numpy(gt).to(torch.float32),
        coarse_target=torch.from_numpy(coarse_target).to(torch.float32),
    )


@dataclass
class CompletionTrainResult:
    model: CompletionModel
    store: nn.ParamStore
    history: list = field(default_factory=list)


def train_completion(
    instances,
    enc_cfg: EncoderConfig,
    fusion_cfg: FusionConfig,
    train_cfg: CompletionTrainConfig,
    lexicon=None,
    pretrained=None,
    val_instances=None,
) -> CompletionTrainResult:
    """Stage-2 training on benchmark instances with GT teacher prompts.

    ``pretrained`` is the (Encoders, ParamStore) pair or checkpoint
    config+arrays from stage 1; encoder weights are copied in when
    fusion_cfg.use_pretrained is set.
    """
    if not instances:
        raise ValueError("empty training set")
    if pretrained is not None:
        enc_pre, arrays_pre = pretrained
        vocab = enc_pre.vocab
    else:
        if lexicon is None:
            raise ValueError("need a lexicon (or a pretrained checkpoint) for the vocabulary")
        vocab = build_vocab(lexicon)
        arrays_pre = None
    model = CompletionModel(enc_cfg, fusion_cfg, vocab)
    store = model.build_store(train_cfg.seed)
    if fusion_cfg.use_pretrained:
        if arrays_pre is None:
            raise ValueError("use_pretrained requires a stage-1 checkpoint")
        encoder_arrays = {
            k: v for k, v in arrays_pre.items() if k.startswith(("point.", "text."))
        }
        store.load_arrays(encoder_arrays, strict=True)
    if fusion_cfg.freeze_encoders:
        for name, p in store.items():
            if name.startswith(("point.", "text.")):
                p.requires_grad_(False)

    prepared = [prepare_instance(inst, model) for inst in instances]
    prepared_val = [prepare_instance(inst, model) for inst in (val_instances or [])]
    state = nn.AdamState(lr=train_cfg.lr)
    rng = np.random.default_rng([train_cfg.seed, _S_TRAIN_SHUFFLE])
    history = []
    for epoch in range(train_cfg.epochs):
        order = rng.permutation(len(prepared))
        cds, coarse_terms = [], []
        for idx in order:
            item = prepared[idx]
            coarse, missing = model.forward(store, item.graph, item.ids, item.mask)
            cd = chamfer_loss(missing, item.gt_missing)
            coarse_cd = chamfer_loss(coarse, item.coarse_target)
            loss = cd + train_cfg.lambda_coarse * coarse_cd
            nn.assert_finite(loss, "completion loss")
            loss.backward()
            nn.adam_step(store, state)
            cds.append(cd.item())
            coarse_terms.append(coarse_cd.item())
        val_cd = None
        if prepared_val:
            val_cd = evaluate_cd(model, store, prepared_val)
        history.append((epoch, float(np.mean(cds)), val_cd, float(np.mean(coarse_terms))))
    return CompletionTrainResult(model=model, store=store, history=history)


def evaluate_cd(model: CompletionModel, store: nn.ParamStore, prepared) -> float:
    cds = []
    with torch.no_grad():
        for item in prepared:
            _, missing = model.forward(store, item.graph, item.ids, item.mask)
            cds.append(chamfer_loss(missing, item.gt_missing).item())
    return float(np.mean(cds))


def completion_config(model: CompletionModel, train_cfg, provenance: dict | None = None, history=None) -> dict:
    config = {"kind": "completion", "train": asdict(train_cfg)}
    config.update(model.config_dict())
    if provenance:
        config.update(provenance)
    if history is not None:
        config["loss_history"] = [list(r) for r in history]
    return config


def save_completion_checkpoint(path, result: CompletionTrainResult, train_cfg, provenance=None) -> None:
    nn.save_checkpoint(
        path,
        completion_config(result.model, train_cfg, provenance, result.history),
        result.store.arrays(),
    )


def load_completion_checkpoint(path):
    """-> (CompletionModel, ParamStore, config dict)."""
    config, arrays = nn.load_checkpoint(path)
    if config.get("kind") != "completion":
        raise nn.CheckpointError(
            f"expected a completion checkpoint, got kind={config.get('kind')!r}"
        )
    model = CompletionModel(
        EncoderConfig(**config["encoder"]),
        FusionConfig(**config["fusion"]),
        config["vocab"],
    )
    store = model.build_store(0)
    if set(store.names()) != set(arrays):
        raise nn.CheckpointError("checkpoint parameters do not match the declared architecture")
    store.load_arrays(arrays)
    return model, store, config


def model_id_of(config: dict) -> str:
    return config.get("fingerprint", hashlib.sha256(b"unfingerprinted").hexdigest()[:16])


def write_completion_history_csv(path, rows) -> None:
    import csv

    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["epoch", "train_cd", "val_cd", "coarse_term"])
        for row in rows:
            writer.writerow(["" if v is None else v for v in row])
