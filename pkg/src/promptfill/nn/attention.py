"""Multi-head attention and transformer block helpers."""
from __future__ import annotations

import torch

from .core import ParamStore, gelu, init_layer_norm, init_linear, layer_norm, linear, softmax

_NEG = -1e9


def init_mha(store: ParamStore, prefix: str, d: int, gen) -> None:
    for proj in ("q", "k", "v", "o"):
        init_linear(store, f"{prefix}.{proj}", d, d, gen)


def multi_head_attention(
    store: ParamStore,
    prefix: str,
    q: torch.Tensor,
    k: torch.Tensor,
    v: torch.Tensor,
    heads: int,
    key_mask: torch.Tensor | None = None,
) -> torch.Tensor:
    """Scaled dot-product attention with ``heads`` heads.

    Accepts [n, d] or batched [..., n, d] inputs; the key mask (True =
    attend) broadcasts over the key axis. Self-attention is the q=k=v
    case.
    """
    d = q.shape[-1]
    if d % heads != 0:
        raise ValueError(f"width {d} not divisible by {heads} heads")
    if k.shape[-1] != d or v.shape[-1] != d:
        raise ValueError("q/k/v width mismatch")
    if k.shape[-2] != v.shape[-2]:
        raise ValueError("k/v length mismatch")
    dh = d // heads
    qp = linear(store, f"{prefix}.q", q)
    kp = linear(store, f"{prefix}.k", k)
    vp = linear(store, f"{prefix}.v", v)
    qh = qp.reshape(*qp.shape[:-1], heads, dh).transpose(-3, -2)  # [..., h, nq, dh]
    kh = kp.reshape(*kp.shape[:-1], heads, dh).transpose(-3, -2)
    vh = vp.reshape(*vp.shape[:-1], heads, dh).transpose(-3, -2)
    scores = qh @ kh.transpose(-1, -2) / (dh**0.5)  # [..., h, nq, nk]
    if key_mask is not None:
        mask = key_mask.unsqueeze(-2)  # broadcast over queries
        while mask.dim() < scores.dim():
            mask = mask.unsqueeze(-3)
        scores = scores.masked_fill(~mask, _NEG)
    attn = softmax(scores, axis=-1)
    out = attn @ vh  # [..., h, nq, dh]
    out = out.transpose(-3, -2).reshape(*q.shape[:-1], d)
    return linear(store, f"{prefix}.o", out)


def init_attn_block(store: ParamStore, prefix: str, d: int, gen) -> None:
    """Attention sublayer with residual + layer norm."""
    init_mha(store, f"{prefix}.attn", d, gen)
    init_layer_norm(store, f"{prefix}.ln", d)


def attn_block(
    store: ParamStore,
    prefix: str,
    q: torch.Tensor,
    k: torch.Tensor,
    v: torch.Tensor,
    heads: int,
    key_mask: torch.Tensor | None = None,
) -> torch.Tensor:
    out = multi_head_attention(store, f"{prefix}.attn", q, k, v, heads, key_mask)
    return layer_norm(store, f"{prefix}.ln", q + out)


def init_ffn_block(store: ParamStore, prefix: str, d: int, gen, hidden_mult: int = 2) -> None:
    init_linear(store, f"{prefix}.up", d, hidden_mult * d, gen)
    init_linear(store, f"{prefix}.down", hidden_mult * d, d, gen)
    init_layer_norm(store, f"{prefix}.ln", d)


def ffn_block(store: ParamStore, prefix: str, x: torch.Tensor) -> torch.Tensor:
    h = linear(store, f"{prefix}.down", gelu(linear(store, f"{prefix}.up", x)))
    return layer_norm(store, f"{prefix}.ln", x + h)
