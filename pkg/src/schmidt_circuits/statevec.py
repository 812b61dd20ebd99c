"""Real statevector simulator for Ry-family circuits.

Register layout: ``a`` ancilla qubits followed by ``n`` data qubits.  Qubit
``0`` is the most significant bit of the amplitude index, so the full index
is ``ancilla_value * 2**n + data_index``.  Data qubit ``j`` is register qubit
``a + j``.

A :class:`StateVector` may carry a leading batch axis; every gate acts on all
batch rows at once.  Gates mutate the state in place and return it.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

MAX_QUBITS = 20


def ry_matrix(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -s], [s, c]])


@dataclass
class StateVector:
    amps: np.ndarray  # shape (2**(n+a),) or (batch, 2**(n+a))
    n: int
    a: int = 0

    def __post_init__(self):
        # gates write through reshaped views, which needs contiguous storage
        self.amps = np.ascontiguousarray(self.amps, dtype=float)
        if self.n < 1 or self.a < 0:
            raise ValueError(f"invalid register sizes n={self.n}, a={self.a}")
        if self.n + self.a > MAX_QUBITS:
            raise ValueError(f"n + a = {self.n + self.a} exceeds the {MAX_QUBITS}-qubit cap")
        if self.amps.shape[-1] != 2 ** (self.n + self.a):
            raise ValueError(f"expected {2 ** (self.n + self.a)} amplitudes, got {self.amps.shape[-1]}")

    @property
    def num_qubits(self) -> int:
        return self.n + self.a

    @property
    def batched(self) -> bool:
        return self.amps.ndim == 2

    def data_qubit(self, j: int) -> int:
        return self.a + j

    def norm(self) -> np.ndarray:
        return np.linalg.norm(self.amps, axis=-1)

    def copy(self) -> "StateVector":
        return StateVector(self.amps.copy(), self.n, self.a)

    def tensor(self) -> np.ndarray:
        """View of the amplitudes as ``(batch, 2, 2, ..., 2)``."""
        return self.amps.reshape((-1,) + (2,) * self.num_qubits)


def prepare(x: np.ndarray, a: int = 0) -> StateVector:
    """``|0...0>_ancilla (x) |x>_data`` for one vector or a batch of rows."""
    x = np.asarray(x, dtype=float)
    dim = x.shape[-1]
    n = int(np.log2(dim))
    if dim != 2**n or n < 1:
        raise ValueError(f"data length must be a power of two >= 2, got {dim}")
    amps = np.zeros(x.shape[:-1] + (dim * 2**a,))
    amps[..., :dim] = x
    return StateVector(amps, n, a)


def _check_qubit(s: StateVector, q: int) -> None:
    if not 0 <= q < s.num_qubits:
        raise ValueError(f"qubit {q} out of range for a {s.num_qubits}-qubit register")


def _pair(s: StateVector, target: int, controls: Sequence[tuple[int, int]]):
    """Views onto the target=0 and target=1 halves of the controlled subspace."""
    t = s.tensor()
    idx = [slice(None)] * (s.num_qubits + 1)
    for q, bit in controls:
        idx[q + 1] = bit
    idx[target + 1] = 0
    lo = t[tuple(idx)]
    idx[target + 1] = 1
    hi = t[tuple(idx)]
    return lo, hi


def rotate(s: StateVector, target: int, theta: float, controls: Sequence[tuple[int, int]] = ()) -> StateVector:
    """Ry(theta) on ``target`` restricted to the subspace fixed by ``controls``.

    ``controls`` is a sequence of ``(qubit, required_bit)`` pairs.
    """
    c, sn = np.cos(theta / 2), np.sin(theta / 2)
    lo, hi = _pair(s, target, controls)
    new_lo = c * lo - sn * hi
    hi *= c
    hi += sn * lo
    lo[...] = new_lo
    return s


def rotate_adjoint(s: StateVector, target: int, theta: float, controls: Sequence[tuple[int, int]] = ()) -> StateVector:
    """Inverse (transpose) of :func:`rotate`."""
    return rotate(s, target, -theta, controls)


def rotate_derivative_overlap(
    bra: StateVector, ket: StateVector, target: int, theta: float, controls: Sequence[tuple[int, int]] = ()
) -> float:
    """``<bra| dG/dtheta |ket>`` summed over the batch, G the controlled Ry."""
    c, sn = np.cos(theta / 2), np.sin(theta / 2)
    k0, k1 = _pair(ket, target, controls)
    b0, b1 = _pair(bra, target, controls)
    d0 = -0.5 * (sn * k0 + c * k1)
    d1 = 0.5 * (c * k0 - sn * k1)
    return float(np.sum(b0 * d0) + np.sum(b1 * d1))


def ancilla_controls(s: StateVector, ancilla_value: int) -> list[tuple[int, int]]:
    if not 0 <= ancilla_value < 2**s.a:
        raise ValueError(f"ancilla value {ancilla_value} out of range for {s.a} ancilla qubits")
    return [(q, (ancilla_value >> (s.a - 1 - q)) & 1) for q in range(s.a)]


def apply_ry(s: StateVector, q: int, theta: float) -> StateVector:
    _check_qubit(s, q)
    return rotate(s, q, theta)


def apply_cry(s: StateVector, control: int, target: int, theta: float) -> StateVector:
    _check_qubit(s, control)
    _check_qubit(s, target)
    if control == target:
        raise ValueError("control and target must differ")
    return rotate(s, target, theta, [(control, 1)])


def apply_term_controlled(s: StateVector, ancilla_value: int, thetas: Sequence[float]) -> StateVector:
    """Ry(thetas[0]) (x) ... (x) Ry(thetas[n-1]) on the data register, active
    only where the ancilla register holds ``ancilla_value``."""
    if len(thetas) != s.n:
        raise ValueError(f"expected {s.n} angles, got {len(thetas)}")
    controls = ancilla_controls(s, ancilla_value)
    for j, theta in enumerate(thetas):
        rotate(s, s.data_qubit(j), theta, controls)
    return s


def data_probabilities(s: StateVector) -> np.ndarray:
    """Outcome distribution of the data register, ancilla traced out."""
    p = s.amps**2
    return p.reshape(p.shape[:-1] + (2**s.a, 2**s.n)).sum(axis=-2)


def bit_table(n: int) -> np.ndarray:
    """``(2**n, n)`` 0/1 matrix; row b holds the bits of b, qubit 0 first."""
    idx = np.arange(2**n)
    return ((idx[:, None] >> (n - 1 - np.arange(n))[None, :]) & 1).astype(float)


def marginals_from_probabilities(p: np.ndarray) -> np.ndarray:
    n = int(np.log2(p.shape[-1]))
    return p @ bit_table(n)


def qubit_marginals(s: StateVector) -> np.ndarray:
    """P(data qubit j = 1) for each j."""
    return marginals_from_probabilities(data_probabilities(s))
