"""Recursive Schmidt decomposition of real vectors.

A unit vector of length ``2**n`` is split one qubit at a time: reshape to a
``2 x 2**(n-1)`` matrix, take its SVD, and recurse on every right singular
vector until only two-dimensional factors remain.  The result is a sum of
product states ``sum_i s_i t_i1 (x) t_i2 (x) ... (x) t_in`` whose product
states are mutually orthonormal, so truncating to the ``k`` largest
coefficients gives the best ``k``-term approximation in that basis.

Data vectors are plain 1-D ``numpy`` arrays throughout; qubit 0 is the most
significant bit of the amplitude index.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import reduce
from typing import Sequence

import numpy as np

ZERO_SV_TOL = 1e-12
UNIT_NORM_TOL = 1e-9
_SIGN_TOL = 1e-14


def num_qubits(length: int) -> int:
    """Smallest ``n >= 1`` with ``2**n >= length``."""
    if length < 1:
        raise ValueError("empty vector")
    return max(1, math.ceil(math.log2(length)))


def normalize(raw: Sequence[float], n: int | None = None) -> np.ndarray:
    """Zero-pad ``raw`` to ``2**n`` entries and scale it to unit L2 norm."""
    raw = np.asarray(raw, dtype=float).ravel()
    if n is None:
        n = num_qubits(raw.size)
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    dim = 2**n
    if raw.size > dim:
        raise ValueError(f"vector of length {raw.size} does not fit in {n} qubits")
    norm = np.linalg.norm(raw)
    if norm == 0.0:
        raise ValueError("zero vector")
    out = np.zeros(dim)
    out[: raw.size] = raw / norm
    return out


def mean_vector(samples: Sequence[np.ndarray]) -> np.ndarray:
    """Sum of the samples rescaled to unit norm."""
    if len(samples) == 0:
        raise ValueError("mean of an empty sample")
    stacked = np.asarray(samples, dtype=float)
    if stacked.ndim != 2:
        raise ValueError("samples must all have the same length")
    total = stacked.sum(axis=0)
    norm = np.linalg.norm(total)
    if norm == 0.0:
        raise ValueError("degenerate mean")
    return total / norm


@dataclass(frozen=True)
class TensorTerm:
    coeff: float
    factors: tuple[np.ndarray, ...]

    def product_state(self) -> np.ndarray:
        return reduce(np.kron, self.factors)


@dataclass(frozen=True)
class TensorDecomposition:
    n: int
    terms: tuple[TensorTerm, ...]

    @property
    def coeffs(self) -> np.ndarray:
        return np.array([t.coeff for t in self.terms])

    def __len__(self) -> int:
        return len(self.terms)


@dataclass(frozen=True)
class TruncationResult:
    kept: TensorDecomposition
    dropped: TensorDecomposition
    gamma: float
    delta_psi: float

    @property
    def k(self) -> int:
        return len(self.kept)


def _canonical_sign(u: np.ndarray) -> float:
    """+1 or -1 so that ``sign * u`` has a nonnegative first nonzero entry."""
    for value in u:
        if abs(value) > _SIGN_TOL:
            return 1.0 if value > 0 else -1.0
    return 1.0


def _split(v: np.ndarray) -> list[tuple[float, list[np.ndarray]]]:
    if v.size == 2:
        return [(1.0, [v.copy()])]
    mat = v.reshape(2, -1)
    u, s, vt = np.linalg.svd(mat, full_matrices=False)
    out = []
    for i, sigma in enumerate(s):
        if sigma < ZERO_SV_TOL:
            continue
        sign = _canonical_sign(u[:, i])
        left = sign * u[:, i]
        right = sign * vt[i]
        for c, child in _split(right):
            out.append((float(sigma) * c, [left] + child))
    return out


def decompose(v: np.ndarray) -> TensorDecomposition:
    """Full recursive Schmidt decomposition of a unit vector.

    Raises:
        ValueError: if ``v`` is not unit-norm or its length is not a power of two.
    """
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.size < 2 or v.size & (v.size - 1):
        raise ValueError(f"length must be 2**n with n >= 1, got {v.shape}")
    if abs(np.linalg.norm(v) - 1.0) > UNIT_NORM_TOL:
        raise ValueError("decompose expects a unit-norm vector")
    raw = _split(v)
    # Stable sort keeps SVD order among equal coefficients.
    raw.sort(key=lambda item: -item[0])
    terms = tuple(TensorTerm(c, tuple(f)) for c, f in raw)
    return TensorDecomposition(n=int(math.log2(v.size)), terms=terms)


def reconstruct(d: TensorDecomposition) -> np.ndarray:
    out = np.zeros(2**d.n)
    for term in d.terms:
        out += term.coeff * term.product_state()
    return out


def truncate(d: TensorDecomposition, gamma: float = 0.3, k_max: int | None = None) -> TruncationResult:
    """Keep terms whose coefficient is at least ``gamma``.

    At most ``k_max`` terms survive and at least one (the largest) always does.
    """
    if gamma < 0:
        raise ValueError("gamma must be >= 0")
    if k_max is None:
        k_max = 2**d.n
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    k = sum(1 for t in d.terms if t.coeff >= gamma)
    k = max(1, min(k, k_max))
    return truncate_to_k(d, k, gamma=gamma)


def truncate_to_k(d: TensorDecomposition, k: int, gamma: float = float("nan")) -> TruncationResult:
    """Keep exactly the ``k`` largest terms (fewer if the decomposition is shorter)."""
    if k < 1:
        raise ValueError("k must be >= 1")
    kept = TensorDecomposition(d.n, d.terms[:k])
    dropped = TensorDecomposition(d.n, d.terms[k:])
    delta = float(np.linalg.norm(reconstruct(d) - reconstruct(kept)))
    return TruncationResult(kept=kept, dropped=dropped, gamma=gamma, delta_psi=delta)


def target_probabilities(t: TruncationResult) -> np.ndarray:
    """Squared amplitudes of the kept approximation, renormalized to sum to one."""
    amps = reconstruct(t.kept)
    p = amps**2
    total = p.sum()
    if total <= 0.0:
        raise ValueError("truncated reconstruction is the zero vector")
    return p / total


def reduced_vector(v: np.ndarray, k: int, renormalize: bool = True) -> np.ndarray:
    """k-term approximation of ``v`` as a dense vector."""
    approx = reconstruct(truncate_to_k(decompose(v), k).kept)
    if renormalize:
        approx = approx / np.linalg.norm(approx)
    return approx


def gram_matrix(d: TensorDecomposition) -> np.ndarray:
    phis = np.array([t.product_state() for t in d.terms])
    return phis @ phis.T


def to_dict(t: TruncationResult, full: TensorDecomposition | None = None) -> dict:
    """JSON-ready export.  ``terms`` lists the full decomposition when given."""
    source = full if full is not None else t.kept
    return {
        "n": source.n,
        "terms": [
            {"coeff": float(term.coeff), "factors": [[float(a), float(b)] for a, b in term.factors]}
            for term in source.terms
        ],
        "gamma": t.gamma,
        "k": t.k,
        "delta_psi": t.delta_psi,
    }


def from_dict(data: dict) -> TensorDecomposition:
    terms = tuple(
        TensorTerm(float(term["coeff"]), tuple(np.asarray(f, dtype=float) for f in term["factors"]))
        for term in data["terms"]
    )
    return TensorDecomposition(n=int(data["n"]), terms=terms)


def dumps(t: TruncationResult, full: TensorDecomposition | None = None, **extra) -> str:
    # float repr round-trips exactly (at most 17 significant digits)
    return json.dumps({**to_dict(t, full), **extra}, indent=2)
