"""Point and prompt encoders plus the shared-space projection heads.

The point encoder gathers local edge features around FPS centers
(shared pointwise MLP, max-pooled over neighbors) and relates the
centers with self-attention. The prompt encoder is a small trainable
token transformer over the closed lexicon vocabulary. Projection heads
map both pooled features into the joint 256-d embedding space.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np
import torch

from . import nn
from .geom import PointCloud, as_points, fps, knn

PAD, UNK = "<pad>", "<unk>"
PAD_ID, UNK_ID = 0, 1


@dataclass(frozen=True)
class EncoderConfig:
    d_point: int = 128
    d_text: int = 96
    d_embed: int = 256
    n_centers: int = 64
    k_local: int = 16
    text_layers: int = 2
    text_heads: int = 4
    point_heads: int = 4
    max_tokens: int = 8

    def __post_init__(self):
        if self.d_embed != 256:
            raise ValueError("joint embedding space is fixed at 256 dims")
        if self.k_local < 1 or self.n_centers < 1:
            raise ValueError("n_centers and k_local must be positive")

    @staticmethod
    def paper_preset() -> "EncoderConfig":
        # 768-d text features as in the original pre-trained language model
        return EncoderConfig(d_text=768)


def build_vocab(lexicon) -> list[str]:
    """PAD, UNK, then the lexicon's words sorted; index = token id."""
    return [PAD, UNK] + lexicon.vocabulary()


def save_vocab_json(path, vocab: list[str]) -> None:
    with open(path, "w") as f:
        json.dump(vocab, f)


def load_vocab_json(path) -> list[str]:
    with open(path) as f:
        vocab = json.load(f)
    if not isinstance(vocab, list) or vocab[:2] != [PAD, UNK]:
        raise ValueError(f"{path}: not a vocabulary file")
    return vocab


@dataclass(frozen=True)
class TokenSequence:
    ids: np.ndarray  # (max_tokens,) int64
    mask: np.ndarray  # (max_tokens,) bool, True = real token

    def __post_init__(self):
        if not self.mask.any():
            raise ValueError("token sequence needs at least one non-pad token")


def tokenize(prompt: str, vocab: list[str], max_tokens: int = 8) -> TokenSequence:
    """Lowercase whitespace tokenization with UNK mapping and padding."""
    if not prompt or not prompt.strip():
        raise ValueError("empty prompt")
    index = {tok: i for i, tok in enumerate(vocab)}
    words = prompt.lower().split()[:max_tokens]
    ids = np.full(max_tokens, PAD_ID, dtype=np.int64)
    mask = np.zeros(max_tokens, dtype=bool)
    for i, w in enumerate(words):
        ids[i] = index.get(w, UNK_ID)
        mask[i] = True
    return TokenSequence(ids, mask)


def has_oov(prompt: str, vocab: list[str], max_tokens: int = 8) -> bool:
    seq = tokenize(prompt, vocab, max_tokens)
    return bool((seq.ids == UNK_ID).any())


@dataclass(frozen=True)
class PointGraph:
    """Geometry-only inputs to the point encoder, cacheable per cloud."""

    centers: torch.Tensor  # [n_centers, 3]
    edges: torch.Tensor  # [n_centers, k_local, 6]


def prepare_point_graph(pc, cfg: EncoderConfig, dtype=torch.float32) -> PointGraph:
    pts = as_points(pc)
    if pts.shape[0] < cfg.n_centers:
        raise ValueError(
            f"cloud has {pts.shape[0]} points, need at least n_centers={cfg.n_centers}"
        )
    if cfg.k_local > pts.shape[0]:
        raise ValueError("k_local exceeds cloud size")
    center_idx = fps(PointCloud(pts), cfg.n_centers)
    centers = pts[center_idx]
    neighbor_idx = knn(centers, pts, cfg.k_local)
    neighbors = pts[neighbor_idx]  # [m, k, 3]
    rel = neighbors - centers[:, None, :]
    anchor = np.broadcast_to(centers[:, None, :], rel.shape)
    edges = np.concatenate([anchor, rel], axis=2)
    return PointGraph(
        centers=torch.from_numpy(np.ascontiguousarray(centers)).to(dtype),
        edges=torch.from_numpy(np.ascontiguousarray(edges)).to(dtype),
    )


def stack_graphs(graphs: list[PointGraph]) -> PointGraph:
    return PointGraph(
        centers=torch.stack([g.centers for g in graphs]),
        edges=torch.stack([g.edges for g in graphs]),
    )


def stack_tokens(seqs: list[TokenSequence]) -> tuple[torch.Tensor, torch.Tensor]:
    ids = torch.from_numpy(np.stack([s.ids for s in seqs]))
    mask = torch.from_numpy(np.stack([s.mask for s in seqs]))
    return ids, mask


class Encoders:
    """f_P, f_T and the projection heads g_P, g_T over one ParamStore."""

    def __init__(self, cfg: EncoderConfig, vocab: list[str]):
        self.cfg = cfg
        self.vocab = vocab

    # ---------------------------------------------------------------- init
    def init_params(self, store: nn.ParamStore, gen: torch.Generator) -> None:
        cfg = self.cfg
        nn.init_linear(store, "point.edge1", 6, cfg.d_point, gen)
        nn.init_linear(store, "point.edge2", cfg.d_point, cfg.d_point, gen)
        nn.init_attn_block(store, "point.attn", cfg.d_point, gen)
        nn.init_ffn_block(store, "point.ffn", cfg.d_point, gen)
        nn.init_embedding(store, "text.tok", len(self.vocab), cfg.d_text, gen)
        nn.init_embedding(store, "text.pos", cfg.max_tokens, cfg.d_text, gen)
        for i in range(cfg.text_layers):
            nn.init_attn_block(store, f"text.layer{i}.attn", cfg.d_text, gen)
            nn.init_ffn_block(store, f"text.layer{i}.ffn", cfg.d_text, gen)
        nn.init_linear(store, "proj_point.fc1", cfg.d_point, cfg.d_embed, gen)
        nn.init_linear(store, "proj_point.fc2", cfg.d_embed, cfg.d_embed, gen)
        nn.init_linear(store, "proj_text.fc1", cfg.d_text, cfg.d_embed, gen)
        nn.init_linear(store, "proj_text.fc2", cfg.d_embed, cfg.d_embed, gen)

    # ------------------------------------------------------------- forward
    def encode_points(self, store: nn.ParamStore, graph: PointGraph):
        """-> (center tokens [..., n_centers, d_point], pooled [..., d_point])"""
        h = nn.relu(nn.linear(store, "point.edge1", graph.edges))
        h = nn.relu(nn.linear(store, "point.edge2", h))
        local = h.amax(dim=-2)  # max over neighbors
        tokens = nn.attn_block(store, "point.attn", local, local, local, self.cfg.point_heads)
        tokens = nn.ffn_block(store, "point.ffn", tokens)
        pooled = tokens.amax(dim=-2)  # max over centers
        return tokens, pooled

    def encode_prompt(self, store: nn.ParamStore, ids: torch.Tensor, mask: torch.Tensor):
        """-> (token features [..., L, d_text], masked mean pooled [..., d_text])"""
        x = nn.embedding(store, "text.tok", ids) + nn.embedding(store, "text.pos", torch.arange(ids.shape[-1]))
        for i in range(self.cfg.text_layers):
            x = nn.attn_block(store, f"text.layer{i}.attn", x, x, x, self.cfg.text_heads, key_mask=mask)
            x = nn.ffn_block(store, f"text.layer{i}.ffn", x)
        weights = mask.to(x.dtype)
        denom = weights.sum(dim=-1, keepdim=True)
        pooled = (x * weights.unsqueeze(-1)).sum(dim=-2) / denom
        return x, pooled

    def project(self, store: nn.ParamStore, pooled: torch.Tensor, which: str) -> torch.Tensor:
        if which not in ("point", "text"):
            raise ValueError("which must be 'point' or 'text'")
        prefix = f"proj_{which}"
        h = nn.gelu(nn.linear(store, f"{prefix}.fc1", pooled))
        return nn.linear(store, f"{prefix}.fc2", h)

    def config_dict(self) -> dict:
        return {"encoder": asdict(self.cfg), "vocab": self.vocab}
