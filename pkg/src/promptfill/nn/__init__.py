from .adam import AdamState, adam_step
from .attention import (
    attn_block,
    ffn_block,
    init_attn_block,
    init_ffn_block,
    init_mha,
    multi_head_attention,
)
from .checkpoint import (
    CheckpointError,
    config_fingerprint,
    load_checkpoint,
    save_checkpoint,
)
from .core import (
    ParamStore,
    conv1d,
    init_conv1d,
    assert_finite,
    embedding,
    gelu,
    init_embedding,
    init_layer_norm,
    init_linear,
    layer_norm,
    linear,
    relu,
    seeded_generator,
    softmax,
)
from .gradcheck import grad_check

__all__ = [
    "AdamState",
    "CheckpointError",
    "ParamStore",
    "adam_step",
    "assert_finite",
    "conv1d",
    "attn_block",
    "config_fingerprint",
    "embedding",
    "ffn_block",
    "gelu",
    "grad_check",
    "init_attn_block",
    "init_conv1d",
    "init_embedding",
    "init_ffn_block",
    "init_layer_norm",
    "init_linear",
    "init_mha",
    "layer_norm",
    "linear",
    "load_checkpoint",
    "multi_head_attention",
    "relu",
    "save_checkpoint",
    "seeded_generator",
    "softmax",
]
