"""Parameter store and functional layers over torch tensors.

Models are written functionally: every learned tensor lives in a flat,
name-keyed ParamStore (lexicographic iteration order), and layers are
free functions reading parameters by prefix. This keeps checkpoint
serialization, optimizer stepping and gradient probing trivial and
exactly reproducible.
"""
from __future__ import annotations

import numpy as np
import torch


def seeded_generator(seed: int) -> torch.Generator:
    gen = torch.Generator()
    gen.manual_seed(int(seed))
    return gen


def assert_finite(t: torch.Tensor, what: str) -> None:
    if not torch.isfinite(t).all():
        raise FloatingPointError(f"non-finite values in {what}")


class ParamStore:
    """name -> tensor map; all entries require grad, iteration is sorted."""

    def __init__(self):
        self._params: dict[str, torch.Tensor] = {}

    def add(self, name: str, tensor: torch.Tensor) -> torch.Tensor:
        if name in self._params:
            raise ValueError(f"duplicate parameter {name!r}")
        assert_finite(tensor, name)
        tensor.requires_grad_(True)
        self._params[name] = tensor
        return tensor

    def __getitem__(self, name: str) -> torch.Tensor:
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __len__(self) -> int:
        return len(self._params)

    def names(self) -> list[str]:
        return sorted(self._params)

    def items(self):
        return [(n, self._params[n]) for n in self.names()]

    def num_values(self) -> int:
        return sum(p.numel() for p in self._params.values())

    def zero_grads(self) -> None:
        for p in self._params.values():
            p.grad = None

    def to_dtype(self, dtype) -> "ParamStore":
        out = ParamStore()
        for n in self.names():
            out.add(n, self._params[n].detach().clone().to(dtype))
        return out

    def arrays(self) -> dict[str, np.ndarray]:
        return {n: p.detach().numpy().astype(np.float32) for n, p in self.items()}

    def load_arrays(self, arrays: dict, strict: bool = True) -> None:
        """Overwrite matching parameters in place from float32 arrays."""
        for name, arr in arrays.items():
            if name not in self._params:
                if strict:
                    raise KeyError(f"unexpected parameter {name!r}")
                continue
            p = self._params[name]
            if tuple(arr.shape) != tuple(p.shape):
                raise ValueError(f"shape mismatch for {name!r}: {arr.shape} vs {tuple(p.shape)}")
            with torch.no_grad():
                p.copy_(torch.from_numpy(np.ascontiguousarray(arr)).to(p.dtype))


# ------------------------------------------------------------------ layers

def init_linear(store: ParamStore, prefix: str, d_in: int, d_out: int, gen) -> None:
    bound = 1.0 / np.sqrt(d_in)
    w = torch.empty(d_in, d_out).uniform_(-bound, bound, generator=gen)
    store.add(f"{prefix}.w", w)
    store.add(f"{prefix}.b", torch.zeros(d_out))


def linear(store: ParamStore, prefix: str, x: torch.Tensor) -> torch.Tensor:
    return x @ store[f"{prefix}.w"] + store[f"{prefix}.b"]


def init_layer_norm(store: ParamStore, prefix: str, d: int) -> None:
    store.add(f"{prefix}.gain", torch.ones(d))
    store.add(f"{prefix}.bias", torch.zeros(d))


def layer_norm(store: ParamStore, prefix: str, x: torch.Tensor) -> torch.Tensor:
    return torch.nn.functional.layer_norm(
        x, x.shape[-1:], store[f"{prefix}.gain"], store[f"{prefix}.bias"], eps=1e-5
    )


def init_embedding(store: ParamStore, prefix: str, vocab: int, d: int, gen) -> None:
    bound = 1.0 / np.sqrt(d)
    store.add(f"{prefix}.table", torch.empty(vocab, d).uniform_(-bound, bound, generator=gen))


def embedding(store: ParamStore, prefix: str, ids: torch.Tensor) -> torch.Tensor:
    return store[f"{prefix}.table"][ids]


def init_conv1d(store: ParamStore, prefix: str, c_in: int, c_out: int, gen) -> None:
    """Kernel-1 1-D convolution parameters."""
    bound = 1.0 / np.sqrt(c_in)
    w = torch.empty(c_out, c_in, 1).uniform_(-bound, bound, generator=gen)
    store.add(f"{prefix}.w", w)
    store.add(f"{prefix}.b", torch.zeros(c_out))


def conv1d(store: ParamStore, prefix: str, x: torch.Tensor) -> torch.Tensor:
    """Kernel-1 convolution along the sequence axis of [..., n, c_in]."""
    w = store[f"{prefix}.w"]
    b = store[f"{prefix}.b"]
    xt = x.transpose(-1, -2)
    if xt.dim() == 2:
        return torch.nn.functional.conv1d(xt.unsqueeze(0), w, b).squeeze(0).transpose(-1, -2)
    return torch.nn.functional.conv1d(xt, w, b).transpose(-1, -2)


def softmax(x: torch.Tensor, axis: int) -> torch.Tensor:
    """Max-subtraction stabilized softmax along ``axis``."""
    shifted = x - x.max(dim=axis, keepdim=True).values
    e = torch.exp(shifted)
    return e / e.sum(dim=axis, keepdim=True)


def gelu(x: torch.Tensor) -> torch.Tensor:
    return torch.nn.functional.gelu(x)


def relu(x: torch.Tensor) -> torch.Tensor:
    return torch.relu(x)
