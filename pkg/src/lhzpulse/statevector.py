"""Dense state-vector kernels (qubit 0 = most significant bit)."""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .pauli_algebra import DENSE_MAX_QUBITS, PAULI, CapacityError, CouplingOp, RotationOp


def check_capacity(n: int) -> None:
    if n > DENSE_MAX_QUBITS:
        raise CapacityError(f"{n} qubits exceeds dense limit of {DENSE_MAX_QUBITS}")


def bit_table(n: int) -> np.ndarray:
    """``(2**n, n)`` array of basis-state bits."""
    idx = np.arange(1 << n, dtype=np.int64)
    return (idx[:, None] >> np.arange(n - 1, -1, -1)) & 1


def z_products(n: int, groups: Sequence[Sequence[int]]) -> np.ndarray:
    """``(len(groups), 2**n)`` eigenvalues of each ``prod_{q in g} Z_q``."""
    bits = bit_table(n)
    out = np.empty((len(groups), 1 << n))
    for k, g in enumerate(groups):
        out[k] = 1 - 2 * (bits[:, list(g)].sum(axis=1) % 2)
    return out


def apply_1q(psi: np.ndarray, n: int, q: int, m: np.ndarray) -> np.ndarray:
    t = psi.reshape((1 << q, 2, -1))
    return np.einsum("ab,ibj->iaj", m, t).reshape(-1)


def apply_product(psi: np.ndarray, n: int, mats: Sequence[np.ndarray]) -> np.ndarray:
    """Apply ``mats[0] (x) mats[1] (x) ...`` (one 2x2 per qubit)."""
    t = psi.reshape((2,) * n)
    for q, m in enumerate(mats):
        t = np.tensordot(m, t, axes=([1], [q]))
        t = np.moveaxis(t, 0, q)
    return t.reshape(-1)


def rotation_matrix(axis: str, angle: float) -> np.ndarray:
    return math.cos(angle) * PAULI["I"] + 1j * math.sin(angle) * PAULI[axis]


def coupling_phases(op: CouplingOp, n: int) -> np.ndarray:
    zz = z_products(n, op.pairs).sum(axis=0)
    return np.exp(-1j * op.theta * zz)


def apply_op(psi: np.ndarray, op, n: int) -> np.ndarray:
    if isinstance(op, RotationOp):
        m = rotation_matrix(op.axis, op.angle)
        for q in sorted(op.qubits):
            psi = apply_1q(psi, n, q, m)
        return psi
    if isinstance(op, CouplingOp):
        return psi * coupling_phases(op, n)
    raise TypeError(f"not a pulse op: {op!r}")


def random_state(n: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return v / np.linalg.norm(v)
