"""Classifier head: (Linear -> BatchNorm -> ReLU -> Dropout) x 2 -> Linear.

Pure numpy with hand-written backward passes.  Hidden widths default to
64 and 32, dropout to 0.25, batchnorm eps/momentum to 1e-5/0.1.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class MLPSpec:
    in_dim: int
    out_dim: int
    hidden: tuple[int, ...] = (64, 32)
    dropout: float = 0.25
    bn_eps: float = 1e-5
    bn_momentum: float = 0.1

    def __post_init__(self):
        if self.in_dim < 1:
            raise ValueError("in_dim must be >= 1")
        if self.out_dim < 2:
            raise ValueError("out_dim must be >= 2")

    @property
    def widths(self) -> tuple[int, ...]:
        return (self.in_dim, *self.hidden, self.out_dim)


@dataclass
class MLPParams:
    learn: dict[str, np.ndarray]
    running: dict[str, np.ndarray] = field(default_factory=dict)

    def copy(self) -> "MLPParams":
        return MLPParams({k: v.copy() for k, v in self.learn.items()}, {k: v.copy() for k, v in self.running.items()})


def param_count(spec: MLPSpec) -> int:
    """Learnable parameters: affine weights and biases plus batchnorm scale/shift."""
    w = spec.widths
    total = sum(w[i] * w[i + 1] + w[i + 1] for i in range(len(w) - 1))
    return total + sum(2 * h for h in spec.hidden)


def init_params(spec: MLPSpec, seed: int | None = None) -> MLPParams:
    """Uniform fan-in init, ``U(-1/sqrt(fan_in), 1/sqrt(fan_in))``, for weights and biases."""
    rng = np.random.default_rng(seed)
    learn, running = {}, {}
    w = spec.widths
    for i in range(len(w) - 1):
        bound = 1.0 / np.sqrt(w[i])
        learn[f"W{i}"] = rng.uniform(-bound, bound, size=(w[i], w[i + 1]))
        learn[f"b{i}"] = rng.uniform(-bound, bound, size=w[i + 1])
    for i, h in enumerate(spec.hidden):
        learn[f"gamma{i}"] = np.ones(h)
        learn[f"beta{i}"] = np.zeros(h)
        running[f"mean{i}"] = np.zeros(h)
        running[f"var{i}"] = np.ones(h)
    return MLPParams(learn, running)


def forward(spec: MLPSpec, params: MLPParams, x: np.ndarray, mode: str = "train", seed=None, update_running: bool = True):
    """Returns ``(logits, cache)``.

    ``seed`` (an int or a ``numpy`` Generator) drives the dropout masks in
    train mode.  Train mode uses batch statistics and, unless
    ``update_running`` is False, folds them into the running estimates.
    """
    if mode not in ("train", "eval"):
        raise ValueError(f"mode must be 'train' or 'eval', got {mode!r}")
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[1] != spec.in_dim:
        raise ValueError(f"expected input of width {spec.in_dim}, got shape {x.shape}")
    train = mode == "train"
    if train and x.shape[0] < 2:
        raise ValueError("batchnorm undefined for a train-mode batch of size 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    p = params.learn
    keep = 1.0 - spec.dropout
    layers = []
    h = x
    for i in range(len(spec.hidden)):
        z = h @ p[f"W{i}"] + p[f"b{i}"]
        if train:
            mu = z.mean(axis=0)
            var = z.var(axis=0)
            if update_running:
                m = spec.bn_momentum
                unbiased = var * len(z) / (len(z) - 1)
                params.running[f"mean{i}"] = (1 - m) * params.running[f"mean{i}"] + m * mu
                params.running[f"var{i}"] = (1 - m) * params.running[f"var{i}"] + m * unbiased
        else:
            mu, var = params.running[f"mean{i}"], params.running[f"var{i}"]
        inv_std = 1.0 / np.sqrt(var + spec.bn_eps)
        zhat = (z - mu) * inv_std
        y = p[f"gamma{i}"] * zhat + p[f"beta{i}"]
        a = np.maximum(y, 0.0)
        if train and spec.dropout > 0:
            mask = (rng.random(a.shape) < keep) / keep
        else:
            mask = None
        out = a * mask if mask is not None else a
        layers.append({"h_in": h, "zhat": zhat, "inv_std": inv_std, "y": y, "mask": mask})
        h = out
    last = len(spec.hidden)
    logits = h @ p[f"W{last}"] + p[f"b{last}"]
    cache = {"spec": spec, "params": params, "layers": layers, "h_last": h, "train": train}
    return logits, cache


def backward(cache: dict, dlogits: np.ndarray) -> tuple[dict[str, np.ndarray], np.ndarray]:
    """Gradients of every learnable array and of the input, given dLoss/dlogits."""
    spec: MLPSpec = cache["spec"]
    p = cache["params"].learn
    grads = {}
    last = len(spec.hidden)
    grads[f"W{last}"] = cache["h_last"].T @ dlogits
    grads[f"b{last}"] = dlogits.sum(axis=0)
    dh = dlogits @ p[f"W{last}"].T
    for i in reversed(range(len(spec.hidden))):
        lay = cache["layers"][i]
        if lay["mask"] is not None:
            dh = dh * lay["mask"]
        dy = dh * (lay["y"] > 0)
        grads[f"gamma{i}"] = (dy * lay["zhat"]).sum(axis=0)
        grads[f"beta{i}"] = dy.sum(axis=0)
        dzhat = dy * p[f"gamma{i}"]
        if cache["train"]:
            # batch statistics depend on z, so the mean/var terms feed back
            m = len(dzhat)
            dz = lay["inv_std"] / m * (m * dzhat - dzhat.sum(axis=0) - lay["zhat"] * (dzhat * lay["zhat"]).sum(axis=0))
        else:
            dz = dzhat * lay["inv_std"]
        grads[f"W{i}"] = lay["h_in"].T @ dz
        grads[f"b{i}"] = dz.sum(axis=0)
        dh = dz @ p[f"W{i}"].T
    return grads, dh


def cross_entropy(logits: np.ndarray, labels: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean softmax cross-entropy and its gradient with respect to the logits."""
    labels = np.asarray(labels, dtype=int)
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_probs = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    m = len(labels)
    loss = -float(log_probs[np.arange(m), labels].mean())
    dlogits = np.exp(log_probs)
    dlogits[np.arange(m), labels] -= 1.0
    return loss, dlogits / m


def predict(spec: MLPSpec, params: MLPParams, x: np.ndarray) -> np.ndarray:
    logits, _ = forward(spec, params, x, mode="eval")
    return logits.argmax(axis=1)


def save_checkpoint(path, spec: MLPSpec, params: MLPParams) -> None:
    data = {
        "spec": {"in_dim": spec.in_dim, "out_dim": spec.out_dim, "hidden": list(spec.hidden),
                 "dropout": spec.dropout, "bn_eps": spec.bn_eps, "bn_momentum": spec.bn_momentum},
        "learn": {k: {"shape": list(v.shape), "data": v.ravel().tolist()} for k, v in params.learn.items()},
        "running": {k: v.tolist() for k, v in params.running.items()},
    }
    Path(path).write_text(json.dumps(data))


def load_checkpoint(path) -> tuple[MLPSpec, MLPParams]:
    data = json.loads(Path(path).read_text())
    s = data["spec"]
    spec = MLPSpec(s["in_dim"], s["out_dim"], tuple(s["hidden"]), s["dropout"], s["bn_eps"], s["bn_momentum"])
    learn = {k: np.asarray(v["data"], dtype=float).reshape(v["shape"]) for k, v in data["learn"].items()}
    running = {k: np.asarray(v, dtype=float) for k, v in data["running"].items()}
    return spec, MLPParams(learn, running)
