"""Adam optimizer over a ParamStore."""
from __future__ import annotations

import torch

from .core import ParamStore


class AdamState:
    """First/second moment buffers plus step count for one ParamStore."""

    def __init__(self, lr: float = 1e-3, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m: dict[str, torch.Tensor] = {}
        self.v: dict[str, torch.Tensor] = {}


def adam_step(store: ParamStore, state: AdamState) -> None:
    """One bias-corrected Adam update; gradients are zeroed afterwards.

    Parameters with requires_grad=False (frozen) are skipped entirely.
    """
    live = [(n, p) for n, p in store.items() if p.requires_grad]
    for name, p in live:
        if p.grad is None:
            raise ValueError(f"parameter {name!r} has no gradient")
    grads = [p.grad for _, p in live]
    # one fused check; find the culprit only on failure
    total = torch.stack([g.sum() for g in grads]).sum()
    if not torch.isfinite(total):
        bad = [name for name, p in live if not torch.isfinite(p.grad).all()]
        if bad:
            raise FloatingPointError(f"non-finite gradient for {bad[0]!r}")
        # finite grads whose sum overflowed: proceed with the update
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    bc1 = 1 - b1**state.t
    bc2 = 1 - b2**state.t
    for name, p in live:
        if name not in state.m:
            state.m[name] = torch.zeros_like(p)
            state.v[name] = torch.zeros_like(p)
            state._scratch = None  # shapes changed, rebuild
    ms = [state.m[n] for n, _ in live]
    vs = [state.v[n] for n, _ in live]
    params = [p for _, p in live]
    scratch = getattr(state, "_scratch", None)
    if scratch is None or len(scratch) != len(vs):
        scratch = [torch.empty_like(v) for v in vs]
        state._scratch = scratch
    with torch.no_grad():
        torch._foreach_mul_(ms, b1)
        torch._foreach_add_(ms, grads, alpha=1 - b1)
        torch._foreach_mul_(vs, b2)
        torch._foreach_addcmul_(vs, grads, grads, value=1 - b2)
        # p -= lr/bc1 * m / (sqrt(v/bc2) + eps), without fresh allocations
        torch._foreach_copy_(scratch, vs)
        torch._foreach_sqrt_(scratch)
        torch._foreach_div_(scratch, bc2**0.5)
        torch._foreach_add_(scratch, state.eps)
        torch._foreach_addcdiv_(params, ms, scratch, value=-state.lr / bc1)
    store.zero_grads()
