"""Block-encoding circuit ansatz for k-term product-state combinations.

The circuit has ``a = ceil(log2 k)`` ancilla qubits and ``n`` data qubits.
Two ancilla layers (an Ry on every ancilla qubit, then a chain of controlled
Ry gates ``j -> j+1``) prepare the term weights; term ``i`` then applies a
product of data-qubit Ry rotations controlled on ancilla basis state ``i``.
Only the data register is measured.

Flat parameter layout::

    [layer1 Ry (a), layer1 CRy (a-1), layer2 Ry (a), layer2 CRy (a-1),
     term 0 (n), term 1 (n), ..., term k-1 (n)]
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from . import statevec as sv

ANCILLA_LAYERS = 2
INIT_RANGE = math.pi / 8


@dataclass(frozen=True)
class Gate:
    target: int
    controls: tuple[tuple[int, int], ...]
    param: int


@dataclass(frozen=True)
class CircuitSpec:
    n: int
    k: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not 1 <= self.k:
            raise ValueError("k must be >= 1")
        if self.k > 2**self.n:
            raise ValueError("k exceeds decomposition size")

    @property
    def a(self) -> int:
        return math.ceil(math.log2(self.k)) if self.k > 1 else 0

    @property
    def layers(self) -> int:
        return ANCILLA_LAYERS

    @property
    def ancilla_params_per_layer(self) -> int:
        return self.a + max(self.a - 1, 0)

    @property
    def num_ancilla_params(self) -> int:
        return self.layers * self.ancilla_params_per_layer

    @property
    def num_params(self) -> int:
        return self.num_ancilla_params + self.k * self.n

    def term_slice(self, i: int) -> slice:
        start = self.num_ancilla_params + i * self.n
        return slice(start, start + self.n)

    @cached_property
    def gates(self) -> tuple[Gate, ...]:
        """Gate sequence in application order, each bound to one parameter."""
        a, n = self.a, self.n
        out = []
        p = 0
        for _ in range(self.layers):
            for q in range(a):
                out.append(Gate(q, (), p))
                p += 1
            for q in range(a - 1):
                out.append(Gate(q + 1, ((q, 1),), p))
                p += 1
        for i in range(self.k):
            controls = tuple((q, (i >> (a - 1 - q)) & 1) for q in range(a))
            for j in range(n):
                out.append(Gate(a + j, controls, p))
                p += 1
        assert p == self.num_params
        return tuple(out)


def build_spec(n: int, k: int) -> CircuitSpec:
    return CircuitSpec(n, k)


def init_params(spec: CircuitSpec, seed: int | None = None) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return rng.uniform(-INIT_RANGE, INIT_RANGE, size=spec.num_params)


def _check(spec: CircuitSpec, params: np.ndarray, x: np.ndarray) -> None:
    if params.shape != (spec.num_params,):
        raise ValueError(f"expected {spec.num_params} parameters, got shape {params.shape}")
    if x.shape[-1] != 2**spec.n:
        raise ValueError(f"expected data length {2**spec.n}, got {x.shape[-1]}")


def run(spec: CircuitSpec, params: np.ndarray, x: np.ndarray) -> sv.StateVector:
    """Final statevector for one input or a ``(batch, 2**n)`` array of inputs."""
    params = np.asarray(params, dtype=float)
    x = np.asarray(x, dtype=float)
    _check(spec, params, x)
    state = sv.prepare(x, spec.a)
    for g in spec.gates:
        sv.rotate(state, g.target, params[g.param], g.controls)
    return state


def forward(spec: CircuitSpec, params: np.ndarray, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Data-register probabilities (length ``2**n``) and per-qubit marginals (length ``n``)."""
    state = run(spec, params, x)
    probs = sv.data_probabilities(state)
    return probs, sv.marginals_from_probabilities(probs)


def gradient(
    spec: CircuitSpec,
    params: np.ndarray,
    x: np.ndarray,
    upstream: np.ndarray,
    wrt: str = "probs",
) -> np.ndarray:
    """Gradient of a scalar loss with respect to all circuit angles.

    Args:
        upstream: dLoss/dprobs (last axis ``2**n``) or dLoss/dmarginals (last
            axis ``n``), matching ``x``'s batch shape.  Batched gradients are
            summed over the batch.
        wrt: ``"probs"`` or ``"marginals"``.

    Uses adjoint back-propagation: the final state is un-computed gate by
    gate while the adjoint vector is carried backwards alongside it.
    """
    params = np.asarray(params, dtype=float)
    upstream = np.asarray(upstream, dtype=float)
    if wrt == "marginals":
        upstream = upstream @ sv.bit_table(spec.n).T
    elif wrt != "probs":
        raise ValueError(f"wrt must be 'probs' or 'marginals', got {wrt!r}")
    if upstream.shape[-1] != 2**spec.n:
        raise ValueError("upstream length does not match the data register")

    psi = run(spec, params, x)
    lam_amps = 2.0 * psi.amps * np.tile(upstream, 2**spec.a)
    lam = sv.StateVector(lam_amps, spec.n, spec.a)

    grad = np.zeros(spec.num_params)
    for g in reversed(spec.gates):
        theta = params[g.param]
        sv.rotate_adjoint(psi, g.target, theta, g.controls)
        grad[g.param] += sv.rotate_derivative_overlap(lam, psi, g.target, theta, g.controls)
        sv.rotate_adjoint(lam, g.target, theta, g.controls)
    return grad


def save_checkpoint(path, spec: CircuitSpec, params, seed=None, loss_history=(), **extra) -> None:
    data = {
        "n": spec.n,
        "k": spec.k,
        "a": spec.a,
        "params": [float(p) for p in params],
        "seed": seed,
        "loss_history": [float(v) for v in loss_history],
        **extra,
    }
    Path(path).write_text(json.dumps(data, indent=2))


def load_checkpoint(path) -> tuple[CircuitSpec, np.ndarray, dict]:
    data = json.loads(Path(path).read_text())
    spec = CircuitSpec(int(data["n"]), int(data["k"]))
    params = np.asarray(data["params"], dtype=float)
    if params.shape != (spec.num_params,):
        raise ValueError("checkpoint parameter count does not match its circuit")
    return spec, params, data
