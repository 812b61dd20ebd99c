"""Dataset loading, amplitude preparation, sampling and synthetic data.

Small classification sets (iris, wine, breast_cancer, ionosphere) ship with
the package.  Everything else is read from ``$SC_DATA_DIR/<name>.csv``; see
``scripts/fetch_datasets.py`` for producing those files.
"""
from __future__ import annotations

import csv
import os
import re
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .tensornet import num_qubits

DATA_DIR_ENV = "SC_DATA_DIR"
BUNDLED_DIR = Path(__file__).parent / "data"
BUNDLED = ("iris", "wine", "breast_cancer", "ionosphere")


@dataclass(frozen=True)
class DatasetInfo:
    qubits: int
    k_options: tuple[int, ...]
    classes: int | None = None
    regression: bool = False
    features: tuple[int, ...] | None = None  # column subset when d > 2**qubits

    @property
    def k(self) -> int:
        return self.k_options[0]


# Qubit and term counts per dataset; where two k values are listed the first is the default.
KNOWN: dict[str, DatasetInfo] = {
    "iris": DatasetInfo(2, (1,), classes=3),
    "california_housing": DatasetInfo(3, (1,), regression=True),
    # 10 raw features cannot fit 3 qubits; the first 8 columns are kept
    "diabetes": DatasetInfo(3, (3, 2), regression=True, features=tuple(range(8))),
    "wine": DatasetInfo(4, (1,), classes=3),
    "breast_cancer": DatasetInfo(5, (2,), classes=2),
    "ionosphere": DatasetInfo(6, (1, 2), classes=2),
    "covtype": DatasetInfo(6, (3,), classes=7),
    "digits": DatasetInfo(6, (2,), classes=10),
}

FETCH_HINT = (
    "Dataset file not found. Write it as '<name>.csv' (header row, label column 'label') "
    f"into the directory named by ${DATA_DIR_ENV}, e.g. with `python scripts/fetch_datasets.py <name>`."
)


@dataclass(frozen=True)
class Dataset:
    name: str
    features: np.ndarray  # (samples, d) raw values
    labels: np.ndarray  # int classes, or float targets for regression sets
    n: int
    class_names: tuple[str, ...] = ()
    feature_names: tuple[str, ...] = field(default=())

    def __post_init__(self):
        if self.features.ndim != 2:
            raise ValueError("features must be a 2-D array")
        if self.features.shape[1] > 2**self.n:
            raise ValueError(f"{self.features.shape[1]} features do not fit in {self.n} qubits")
        if not np.all(np.isfinite(self.features)):
            raise ValueError("non-finite feature values")
        if len(self.labels) != len(self.features):
            raise ValueError("labels and features differ in length")

    @property
    def regression(self) -> bool:
        return not self.class_names

    @property
    def num_classes(self) -> int:
        return len(self.class_names)

    def __len__(self) -> int:
        return len(self.features)

    def take(self, idx: Sequence[int]) -> "Dataset":
        idx = np.asarray(idx, dtype=int)
        return replace(self, features=self.features[idx], labels=self.labels[idx])


def data_dir() -> Path | None:
    value = os.environ.get(DATA_DIR_ENV)
    return Path(value) if value else None


def _factorize(raw: list[str]) -> tuple[np.ndarray, tuple[str, ...]]:
    try:
        keys = sorted(set(raw), key=float)
    except ValueError:
        keys = sorted(set(raw))
    lookup = {k: i for i, k in enumerate(keys)}
    return np.array([lookup[v] for v in raw], dtype=int), tuple(keys)


def load_csv(
    path,
    label_column: str = "label",
    n_override: int | None = None,
    name: str | None = None,
    feature_columns: Sequence[int] | None = None,
    regression: bool = False,
) -> Dataset:
    """Read a numeric CSV with a header row.

    Args:
        label_column: header name of the class (or regression target) column.
        n_override: qubit count; defaults to the known value for ``name`` or
            ``ceil(log2 d)``.
        feature_columns: indices (among the non-label columns) to keep.
        regression: keep labels as floats instead of factorizing them.
    """
    path = Path(path)
    name = name or path.stem
    with open(path, newline="", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    skip = 0
    while skip < len(lines) and lines[skip].startswith("#"):  # config comment lines
        skip += 1
    if skip == len(lines):
        raise ValueError(f"{path}: no header row")
    reader = csv.reader(lines[skip:])
    header = next(reader)
    if label_column not in header:
        raise ValueError(f"{path}: label column {label_column!r} missing (columns: {header})")
    li = header.index(label_column)
    feat_names = [h for i, h in enumerate(header) if i != li]
    rows, raw_labels = [], []
    for r, row in enumerate(reader, start=skip + 2):
        if not row:
            continue
        if len(row) != len(header):
            raise ValueError(f"{path}: row {r} has {len(row)} cells, expected {len(header)}")
        values = []
        for c, cell in enumerate(row):
            if c == li:
                continue
            try:
                values.append(float(cell))
            except ValueError:
                raise ValueError(f"{path}: non-numeric value {cell!r} at row {r}, column {header[c]!r}") from None
        rows.append(values)
        raw_labels.append(row[li].strip())
    features = np.array(rows, dtype=float).reshape(len(rows), len(feat_names))
    if feature_columns is not None:
        features = features[:, list(feature_columns)]
        feat_names = [feat_names[i] for i in feature_columns]
    if regression:
        labels, classes = np.array([float(v) for v in raw_labels]), ()
    else:
        labels, classes = _factorize(raw_labels)
    n = n_override if n_override is not None else num_qubits(features.shape[1])
    return Dataset(name, features, labels, n, classes, tuple(feat_names))


def load_dataset(name_or_path: str, n_override: int | None = None, label_column: str = "label") -> Dataset:
    """Load a known dataset by name, or any CSV by path.

    Known names use their registered qubit count and feature subset.  Files in
    ``$SC_DATA_DIR`` take precedence over the bundled copies.  ``randomN``
    generates the default synthetic set on ``N`` qubits.
    """
    synthetic = re.fullmatch(r"random(\d+)", name_or_path)
    if synthetic:
        return make_classification(SyntheticSpec(n=int(synthetic.group(1))))
    info = KNOWN.get(name_or_path)
    if info is None:
        path = Path(name_or_path)
        if not path.is_file():
            raise FileNotFoundError(
                f"unknown dataset {name_or_path!r}; known names: {', '.join(sorted(KNOWN))}, or give a CSV path"
            )
        return load_csv(path, label_column, n_override)
    path = None
    root = data_dir()
    if root is not None and (root / f"{name_or_path}.csv").is_file():
        path = root / f"{name_or_path}.csv"
    elif name_or_path in BUNDLED:
        path = BUNDLED_DIR / f"{name_or_path}.csv"
    if path is None:
        raise FileNotFoundError(f"{name_or_path}: {FETCH_HINT}")
    if info.features is not None:
        warnings.warn(
            f"{name_or_path}: keeping feature columns {list(info.features)} to fit {info.qubits} qubits; "
            "the column choice is a guess",
            stacklevel=2,
        )
    return load_csv(
        path,
        label_column,
        n_override if n_override is not None else info.qubits,
        name=name_or_path,
        feature_columns=info.features,
        regression=info.regression,
    )


def write_csv(path, features: np.ndarray, labels: np.ndarray, feature_names: Sequence[str] | None = None) -> None:
    features = np.asarray(features, dtype=float)
    names = list(feature_names) if feature_names is not None else [f"f{i}" for i in range(features.shape[1])]
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(names + ["label"])
        for row, y in zip(features, labels):
            w.writerow([repr(float(v)) for v in row] + [y.item() if hasattr(y, "item") else y])


SCALINGS = ("none", "zscore", "minmax")


def scale_features(x: np.ndarray, scaling: str = "none") -> np.ndarray:
    """Optional per-column scaling applied before padding and normalization."""
    if scaling == "none":
        return x
    if scaling == "zscore":
        std = x.std(axis=0)
        return (x - x.mean(axis=0)) / np.where(std > 0, std, 1.0)
    if scaling == "minmax":
        span = x.max(axis=0) - x.min(axis=0)
        return (x - x.min(axis=0)) / np.where(span > 0, span, 1.0)
    raise ValueError(f"scaling must be one of {SCALINGS}, got {scaling!r}")


def to_vectors(ds: Dataset, scaling: str = "none") -> tuple[np.ndarray, np.ndarray]:
    """Zero-pad every sample to ``2**n`` entries and normalize it.

    Returns ``(vectors, kept)`` where ``kept`` indexes the rows that survived;
    zero-norm rows are dropped with a warning naming them.
    """
    x = scale_features(ds.features, scaling)
    dim = 2**ds.n
    padded = np.zeros((len(x), dim))
    padded[:, : x.shape[1]] = x
    norms = np.linalg.norm(padded, axis=1)
    kept = np.flatnonzero(norms > 0)
    if len(kept) < len(x):
        bad = np.flatnonzero(norms == 0).tolist()
        warnings.warn(f"{ds.name}: dropping zero-norm samples at rows {bad}", stacklevel=2)
    return padded[kept] / norms[kept, None], kept


def subsample(ds: Dataset, max_count: int, seed: int | None = 0, stratify: bool = False) -> Dataset:
    """Random subset without replacement, in original row order."""
    if max_count < 1:
        raise ValueError("max_count must be >= 1")
    if max_count >= len(ds):
        return ds
    rng = np.random.default_rng(seed)
    if not stratify or ds.regression:
        return ds.take(np.sort(rng.choice(len(ds), size=max_count, replace=False)))
    # largest-remainder quotas keep every class within one sample of its share
    classes, counts = np.unique(ds.labels, return_counts=True)
    share = counts * max_count / len(ds)
    quota = np.floor(share).astype(int)
    spare = max_count - quota.sum()
    order = np.lexsort((rng.random(len(classes)), -(share - quota)))
    quota[order[:spare]] += 1
    chosen = [
        rng.choice(np.flatnonzero(ds.labels == c), size=q, replace=False) for c, q in zip(classes, quota)
    ]
    return ds.take(np.sort(np.concatenate(chosen)))


@dataclass(frozen=True)
class SyntheticSpec:
    n: int
    classes: int = 2
    informative: int = 2
    separation: float = 1.0
    samples: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.classes < 2:
            raise ValueError("classes must be >= 2")
        if self.informative > 2**self.n:
            raise ValueError("more informative features than features")
        if self.classes > 2**self.informative:
            raise ValueError("need classes <= 2**informative for distinct hypercube vertices")


def make_classification(spec: SyntheticSpec) -> Dataset:
    """One Gaussian cluster per class at a hypercube vertex of the
    informative subspace; the remaining features are pure noise."""
    from sklearn.datasets import make_classification as _make

    x, y = _make(
        n_samples=spec.samples,
        n_features=2**spec.n,
        n_informative=spec.informative,
        n_redundant=0,
        n_repeated=0,
        n_classes=spec.classes,
        n_clusters_per_class=1,
        class_sep=spec.separation,
        flip_y=0.0,
        random_state=spec.seed,
    )
    return Dataset(
        f"random{spec.n}",
        x,
        y.astype(int),
        spec.n,
        tuple(str(c) for c in range(spec.classes)),
        tuple(f"f{i}" for i in range(x.shape[1])),
    )
