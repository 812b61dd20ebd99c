"""AdamW and the circuit-fitting loops.

A circuit fit drives the data-register distribution of the ansatz towards
the squared amplitudes of each input's own k-term approximation.  The loss
is the batch mean of ``||P_circuit(x_i) - P_target_i||_2``.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import ansatz, tensornet

DEFAULT_LR = 0.05
DEFAULT_DECAY = 0.99
DEFAULT_ITERS = 300
DEFAULT_RUNS = 5
DEFAULT_SAMPLE_SIZE = 20


class DivergenceError(FloatingPointError):
    pass


class AdamW:
    """AdamW with decoupled weight decay and a per-epoch exponential lr schedule.

    Parameters are updated in place.  ``step`` accepts either one array or a
    mapping of named arrays; moment buffers are keyed by name.
    """

    def __init__(self, lr=DEFAULT_LR, betas=(0.9, 0.999), eps=1e-8, weight_decay=0.01, decay=DEFAULT_DECAY):
        self.lr0 = lr
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.weight_decay = weight_decay
        self.decay = decay
        self.epoch = 0
        self.t = 0
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}

    @property
    def lr(self) -> float:
        return self.lr0 * self.decay**self.epoch

    def end_epoch(self) -> None:
        self.epoch += 1

    def step(self, params, grads) -> None:
        if isinstance(params, np.ndarray):
            params, grads = {"": params}, {"": grads}
        for name, g in grads.items():
            if not np.all(np.isfinite(g)):
                raise DivergenceError(f"divergence: non-finite gradient for {name or 'params'}")
        self.t += 1
        lr = self.lr
        bc1 = 1 - self.beta1**self.t
        bc2 = 1 - self.beta2**self.t
        for name, p in params.items():
            g = grads[name]
            if name not in self.m:
                self.m[name] = np.zeros_like(p)
                self.v[name] = np.zeros_like(p)
            m, v = self.m[name], self.v[name]
            m *= self.beta1
            m += (1 - self.beta1) * g
            v *= self.beta2
            v += (1 - self.beta2) * g * g
            if self.weight_decay:
                p *= 1 - lr * self.weight_decay
            p -= (lr / bc1) * m / (np.sqrt(v / bc2) + self.eps)


def adamw_step(state: AdamW, params: np.ndarray, grads: np.ndarray) -> np.ndarray:
    """Functional form: returns the updated copy of ``params``."""
    out = np.array(params, dtype=float)
    state.step(out, np.asarray(grads, dtype=float))
    return out


def circuit_loss(spec: ansatz.CircuitSpec, params: np.ndarray, xs: np.ndarray, targets: np.ndarray) -> float:
    probs, _ = ansatz.forward(spec, params, np.atleast_2d(xs))
    return float(np.mean(np.linalg.norm(probs - np.atleast_2d(targets), axis=1)))


def circuit_loss_and_grad(spec, params, xs, targets) -> tuple[float, np.ndarray]:
    xs, targets = np.atleast_2d(xs), np.atleast_2d(targets)
    probs, _ = ansatz.forward(spec, params, xs)
    diff = probs - targets
    norms = np.linalg.norm(diff, axis=1)
    safe = np.where(norms > 0, norms, 1.0)
    upstream = np.where(norms[:, None] > 0, diff / safe[:, None], 0.0) / len(xs)
    return float(norms.mean()), ansatz.gradient(spec, params, xs, upstream)


def targets_for(xs: np.ndarray, k: int) -> np.ndarray:
    """Each vector's own k-term target distribution."""
    return np.array([tensornet.target_probabilities(tensornet.truncate_to_k(tensornet.decompose(x), k)) for x in xs])


@dataclass
class FitReport:
    run: int
    seed: int
    loss_history: list[float]
    best_loss: float
    best_params: np.ndarray
    baseline_loss: float  # loss with every angle at zero
    sample_indices: list[int] = field(default_factory=list)

    def running_best(self) -> np.ndarray:
        return np.minimum.accumulate(self.loss_history)


def _optimize(spec, xs, targets, iters, seed, lr, decay, weight_decay) -> tuple[list[float], float, np.ndarray]:
    params = ansatz.init_params(spec, seed)
    opt = AdamW(lr=lr, weight_decay=weight_decay, decay=decay)
    history = []
    best_loss, best_params = np.inf, params.copy()
    for _ in range(iters):
        loss, grad = circuit_loss_and_grad(spec, params, xs, targets)
        history.append(loss)
        if loss < best_loss:
            best_loss, best_params = loss, params.copy()
        opt.step(params, grad)
        opt.end_epoch()
    return history, best_loss, best_params


def fit_sample(
    sample: Sequence[np.ndarray],
    k: int,
    iters: int = DEFAULT_ITERS,
    runs: int = DEFAULT_RUNS,
    seed: int = 0,
    seeds: Sequence[int] | None = None,
    lr: float = DEFAULT_LR,
    decay: float = DEFAULT_DECAY,
    weight_decay: float = 0.01,
) -> list[FitReport]:
    """Fit one circuit to a whole sample, ``runs`` times from different inits.

    ``k`` is shared by every vector (normally taken from the sample's mean
    vector); each vector's target is its own decomposition cut to ``k`` terms.
    """
    if iters < 1:
        raise ValueError("iters must be >= 1")
    xs = np.atleast_2d(np.asarray(sample, dtype=float))
    if len(xs) == 0:
        raise ValueError("empty sample")
    spec = ansatz.build_spec(int(np.log2(xs.shape[1])), k)
    targets = targets_for(xs, k)
    baseline = circuit_loss(spec, np.zeros(spec.num_params), xs, targets)
    if seeds is None:
        seeds = [seed + r for r in range(runs)]
    reports = []
    for r, s in enumerate(seeds):
        history, best, best_params = _optimize(spec, xs, targets, iters, s, lr, decay, weight_decay)
        reports.append(FitReport(r, s, history, best, best_params, baseline))
    return reports


def fit_single(x: np.ndarray, k: int | None = None, gamma: float = 0.3, **kwargs) -> list[FitReport]:
    """Fit the circuit to one vector.  ``k`` defaults to the vector's own
    threshold count at ``gamma``."""
    x = np.asarray(x, dtype=float)
    if k is None:
        k = tensornet.truncate(tensornet.decompose(x), gamma).k
    return fit_sample(x[None, :], k, **kwargs)


def fit_random_samples(
    vectors: np.ndarray,
    k: int,
    sample_size: int = DEFAULT_SAMPLE_SIZE,
    runs: int = DEFAULT_RUNS,
    seed: int = 0,
    single: bool = False,
    **kwargs,
) -> list[FitReport]:
    """One fit per run, each on a freshly drawn random sample.

    With ``single`` each run fits one vector picked at random from its sample.
    """
    vectors = np.asarray(vectors, dtype=float)
    rng = np.random.default_rng(seed)
    reports = []
    for r in range(runs):
        idx = rng.choice(len(vectors), size=min(sample_size, len(vectors)), replace=False)
        if single:
            idx = idx[[rng.integers(len(idx))]]
        rep = fit_sample(vectors[idx], k, runs=1, seeds=[seed + r], **kwargs)[0]
        rep.run = r
        rep.sample_indices = [int(i) for i in idx]
        reports.append(rep)
    return reports


def mean_best(reports: Sequence[FitReport]) -> float:
    return float(np.mean([r.best_loss for r in reports]))


def write_reports(reports: Sequence[FitReport], out_dir, header: Mapping | None = None) -> dict:
    """Per-run loss CSVs plus ``summary.json``; returns the summary."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    head = "# " + json.dumps(dict(header or {}), sort_keys=True) + "\n"
    for rep in reports:
        with open(out / f"run{rep.run}_loss.csv", "w", newline="") as fh:
            fh.write(head)
            w = csv.writer(fh)
            w.writerow(["iteration", "loss"])
            for i, loss in enumerate(rep.loss_history):
                w.writerow([i, repr(loss)])
    summary = {
        "config": dict(header or {}),
        "mean_best": mean_best(reports),
        "per_run_best": [r.best_loss for r in reports],
        "baseline_loss": [r.baseline_loss for r in reports],
        "seeds": [r.seed for r in reports],
        "sample_indices": [r.sample_indices for r in reports],
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2))
    return summary
