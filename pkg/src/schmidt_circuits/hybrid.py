"""Cross-validated classification experiments.

Three modes share one training loop:

* ``classical-original``: MLP head on the normalized ``2**n``-dim vectors.
* ``classical-reduced``: MLP head on each vector's k-term approximation.
* ``hybrid``: circuit marginals (``n`` numbers) feed the MLP head; circuit
  angles and head weights are updated together by one AdamW step.
"""
from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import ansatz, dataio, mlphead, tensornet
from .training import DEFAULT_DECAY, DEFAULT_LR, AdamW

MODES = ("classical-original", "classical-reduced", "hybrid")


@dataclass
class ExperimentConfig:
    dataset: str
    mode: str = "hybrid"
    gamma: float = 0.3
    k: int | None = None
    max_samples: int = 1000
    folds: int = 5
    epochs: int = 100
    batch_size: int = 32
    seed: int = 0
    lr: float = DEFAULT_LR
    decay: float = DEFAULT_DECAY
    weight_decay: float = 0.01
    freeze_quantum: bool = False
    renormalize_reduced: bool = True
    scaling: str = "none"
    data: dataio.Dataset | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.folds < 2:
            raise ValueError("folds must be >= 2")

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("data")
        return d


@dataclass
class FoldReport:
    fold: int
    k: int
    train_loss: list[float]
    val_acc: list[float]
    final_acc: float
    quantum_params: int
    classical_params: int

    @property
    def total_params(self) -> int:
        return self.quantum_params + self.classical_params


def stratified_folds(labels: np.ndarray, folds: int, seed: int | None = 0) -> list[tuple[np.ndarray, np.ndarray]]:
    """Shuffled stratified k-fold split as ``(train_idx, val_idx)`` pairs."""
    from sklearn.model_selection import StratifiedKFold

    labels = np.asarray(labels)
    classes, counts = np.unique(labels, return_counts=True)
    small = classes[counts < folds]
    if len(small):
        raise ValueError(f"classes {small.tolist()} have fewer than {folds} members")
    skf = StratifiedKFold(n_splits=folds, shuffle=True, random_state=seed)
    return [(tr, va) for tr, va in skf.split(np.zeros(len(labels)), labels)]


def _num_classes(config: ExperimentConfig) -> int:
    if config.data is not None:
        return config.data.num_classes
    info = dataio.KNOWN.get(config.dataset)
    if info is None or info.classes is None:
        raise ValueError(f"class count unknown for {config.dataset!r}")
    return info.classes


def _num_qubits(config: ExperimentConfig) -> int:
    if config.data is not None:
        return config.data.n
    info = dataio.KNOWN.get(config.dataset)
    if info is None:
        raise ValueError(f"unknown dataset {config.dataset!r}; known: {', '.join(sorted(dataio.KNOWN))}")
    return info.qubits


def default_k(config: ExperimentConfig) -> int | None:
    if config.k is not None:
        return config.k
    info = dataio.KNOWN.get(config.dataset)
    return info.k if info is not None and config.data is None else None


def select_k(vectors: np.ndarray, gamma: float = 0.3, k_max: int | None = None) -> tuple[int, tensornet.TruncationResult]:
    """Term count from thresholding the mean vector's decomposition."""
    d = tensornet.decompose(tensornet.mean_vector(vectors))
    t = tensornet.truncate(d, gamma, k_max)
    return t.k, t


def count_parameters(config: ExperimentConfig, k: int | None = None) -> tuple[int, int, int]:
    """(quantum, classical, total) learnable parameter counts."""
    n, classes = _num_qubits(config), _num_classes(config)
    if config.mode == "hybrid":
        k = k if k is not None else default_k(config)
        if k is None:
            raise ValueError("k must be given for datasets without a registered default")
        quantum = ansatz.build_spec(n, k).num_params
        classical = mlphead.param_count(mlphead.MLPSpec(n, classes))
    else:
        quantum = 0
        classical = mlphead.param_count(mlphead.MLPSpec(2**n, classes))
    return quantum, classical, quantum + classical


def hybrid_loss_and_grads(
    qspec: ansatz.CircuitSpec,
    theta: np.ndarray,
    mspec: mlphead.MLPSpec,
    mparams: mlphead.MLPParams,
    x: np.ndarray,
    y: np.ndarray,
    seed=None,
    update_running: bool = True,
) -> tuple[float, np.ndarray, dict[str, np.ndarray]]:
    """Train-mode cross-entropy of the joint model and its gradients for both parts."""
    _, marg = ansatz.forward(qspec, theta, x)
    logits, cache = mlphead.forward(mspec, mparams, marg, "train", seed, update_running)
    loss, dlogits = mlphead.cross_entropy(logits, y)
    grads, dmarg = mlphead.backward(cache, dlogits)
    gtheta = ansatz.gradient(qspec, theta, x, dmarg, wrt="marginals")
    return loss, gtheta, grads


def _batches(m: int, batch_size: int, rng: np.random.Generator):
    order = rng.permutation(m)
    for start in range(0, m, batch_size):
        idx = order[start : start + batch_size]
        if len(idx) >= 2:  # batchnorm needs two rows
            yield idx


def _train_fold(config, fold, k, x_tr, y_tr, x_va, y_va, classes, n) -> FoldReport:
    rng = np.random.default_rng([config.seed, fold])
    init_seed = int(rng.integers(2**31))
    hybrid = config.mode == "hybrid"
    if hybrid:
        qspec = ansatz.build_spec(n, k)
        theta = ansatz.init_params(qspec, init_seed)
        in_dim = n
    else:
        in_dim = x_tr.shape[1]
    mspec = mlphead.MLPSpec(in_dim, classes)
    mparams = mlphead.init_params(mspec, init_seed + 1)
    opt = AdamW(lr=config.lr, weight_decay=config.weight_decay, decay=config.decay)

    def features(x):
        return ansatz.forward(qspec, theta, x)[1] if hybrid else x

    train_loss, val_acc = [], []
    for _ in range(config.epochs):
        total, seen = 0.0, 0
        for idx in _batches(len(x_tr), config.batch_size, rng):
            xb, yb = x_tr[idx], y_tr[idx]
            if hybrid:
                loss, gtheta, grads = hybrid_loss_and_grads(qspec, theta, mspec, mparams, xb, yb, rng)
                params = dict(mparams.learn)
                if not config.freeze_quantum:
                    params["theta"], grads["theta"] = theta, gtheta
            else:
                logits, cache = mlphead.forward(mspec, mparams, xb, "train", rng)
                loss, dlogits = mlphead.cross_entropy(logits, yb)
                grads, _ = mlphead.backward(cache, dlogits)
                params = mparams.learn
            opt.step(params, grads)
            total += loss * len(idx)
            seen += len(idx)
        opt.end_epoch()
        train_loss.append(total / max(seen, 1))
        pred = mlphead.predict(mspec, mparams, features(x_va))
        val_acc.append(float(np.mean(pred == y_va)))
    quantum = qspec.num_params if hybrid else 0
    return FoldReport(fold, k, train_loss, val_acc, val_acc[-1], quantum, mlphead.param_count(mspec))


def run(config: ExperimentConfig) -> list[FoldReport]:
    """Stratified k-fold cross validation of the configured mode."""
    ds = config.data if config.data is not None else dataio.load_dataset(config.dataset)
    if ds.regression:
        raise ValueError(f"{ds.name} is a regression dataset; only classification is supported here")
    if config.max_samples < config.folds * ds.num_classes:
        raise ValueError("max_samples must be at least folds * classes")
    ds = dataio.subsample(ds, config.max_samples, config.seed, stratify=True)
    vectors, kept = dataio.to_vectors(ds, scaling=config.scaling)
    labels = ds.labels[kept]
    reduced_cache: dict[int, np.ndarray] = {}

    reports = []
    for fold, (tr, va) in enumerate(stratified_folds(labels, config.folds, config.seed)):
        k = default_k(config)
        if k is None:
            k, _ = select_k(vectors[tr], config.gamma)
        if config.mode == "classical-reduced":
            if k not in reduced_cache:
                reduced_cache[k] = np.array(
                    [tensornet.reduced_vector(v, k, config.renormalize_reduced) for v in vectors]
                )
            x = reduced_cache[k]
        else:
            x = vectors
        reports.append(
            _train_fold(config, fold, k, x[tr], labels[tr], x[va], labels[va], ds.num_classes, ds.n)
        )
    return reports


def run_classical(config: ExperimentConfig) -> list[FoldReport]:
    if config.mode == "hybrid":
        raise ValueError("run_classical needs a classical mode")
    return run(config)


def run_hybrid(config: ExperimentConfig) -> list[FoldReport]:
    if config.mode != "hybrid":
        raise ValueError("run_hybrid needs mode='hybrid'")
    return run(config)


def summarize(reports: Sequence[FoldReport]) -> dict:
    acc = np.array([r.final_acc for r in reports])
    return {
        "mean_acc": float(acc.mean()),
        "std_acc": float(acc.std()),  # population std over folds
        "fold_acc": acc.tolist(),
    }


def write_results(reports: Sequence[FoldReport], config: ExperimentConfig, out_dir) -> dict:
    """``summary.json`` and ``curves.csv`` (one row per fold and epoch)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cfg = config.to_dict()
    q, c = reports[0].quantum_params, reports[0].classical_params
    summary = {
        "config": cfg,
        "per_fold": [asdict(r) for r in reports],
        **summarize(reports),
        "param_counts": {"quantum": q, "classical": c, "total": q + c},
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2))
    with open(out / "curves.csv", "w", newline="") as fh:
        fh.write("# " + json.dumps(cfg, sort_keys=True) + "\n")
        w = csv.writer(fh)
        w.writerow(["fold", "epoch", "train_loss", "val_acc"])
        for r in reports:
            for e, (loss, acc) in enumerate(zip(r.train_loss, r.val_acc)):
                w.writerow([r.fold, e, repr(loss), repr(acc)])
    return summary
