"""Finite-difference gradient oracle for reverse-mode derivatives."""
from __future__ import annotations

import numpy as np
import torch

from .core import ParamStore


def grad_check(
    scalar_fn,
    store: ParamStore,
    probes: int = 50,
    step: float = 1e-5,
    seed: int = 0,
) -> float:
    """Compare reverse-mode gradients against central differences.

    ``scalar_fn`` re-evaluates the objective from the store's current
    values. Probed entries are drawn round-robin across top-level
    parameter groups so every submodule is covered. Returns the max of
    |g_ad - g_fd| / max(1, |g_fd|); requires a float64 store.
    """
    for name, p in store.items():
        if p.dtype != torch.float64:
            raise ValueError(f"grad_check requires 64-bit parameters ({name} is {p.dtype})")
    loss = scalar_fn()
    if loss.numel() != 1:
        raise ValueError("objective must be scalar")
    store.zero_grads()
    loss.backward()
    ad_grads = {n: (p.grad.detach().clone() if p.grad is not None else torch.zeros_like(p)) for n, p in store.items()}
    store.zero_grads()

    rng = np.random.default_rng(seed)
    groups: dict[str, list[str]] = {}
    for name in store.names():
        groups.setdefault(name.split(".", 1)[0], []).append(name)
    group_names = sorted(groups)
    targets = []
    for i in range(probes):
        group = groups[group_names[i % len(group_names)]]
        name = group[int(rng.integers(len(group)))]
        flat_idx = int(rng.integers(store[name].numel()))
        targets.append((name, flat_idx))

    max_rel = 0.0
    with torch.no_grad():
        for name, flat_idx in targets:
            p = store[name]
            flat = p.view(-1)
            orig = flat[flat_idx].item()
            flat[flat_idx] = orig + step
            f_plus = float(scalar_fn().item())
            flat[flat_idx] = orig - step
            f_minus = float(scalar_fn().item())
            flat[flat_idx] = orig
            g_fd = (f_plus - f_minus) / (2 * step)
            g_ad = ad_grads[name].view(-1)[flat_idx].item()
            rel = abs(g_ad - g_fd) / max(1.0, abs(g_fd))
            max_rel = max(max_rel, rel)
    return max_rel
