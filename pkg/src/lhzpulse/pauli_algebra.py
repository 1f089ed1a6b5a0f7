"""Symbolic Pauli-sum Hamiltonians and their conjugation by pulses.

Qubit ordering convention used throughout the package: qubit 0 is the
leftmost tensor factor, so basis index ``k`` has bit ``(k >> (n - 1 - q)) & 1``
for qubit ``q`` and ``Z_q`` has eigenvalue ``+1`` on bit value 0.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence, Union

import numpy as np

AXES = ("X", "Y", "Z")
MERGE_TOL = 1e-12
DENSE_MAX_QUBITS = 13

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


class CapacityError(ValueError):
    """Requested size exceeds what the dense routines can hold."""


def levi_civita(a: str, b: str, c: str) -> int:
    idx = (AXES.index(a), AXES.index(b), AXES.index(c))
    if len(set(idx)) < 3:
        return 0
    return 1 if idx in ((0, 1, 2), (1, 2, 0), (2, 0, 1)) else -1


def _third_axis(a: str, b: str) -> str:
    (c,) = set(AXES) - {a, b}
    return c


def _check_coeff(coeff) -> float:
    if isinstance(coeff, complex) or np.iscomplexobj(coeff):
        if np.imag(coeff) != 0:
            raise TypeError(f"complex coefficient {coeff!r} not allowed")
        coeff = np.real(coeff)
    coeff = float(coeff)
    if not math.isfinite(coeff):
        raise ValueError(f"non-finite coefficient {coeff!r}")
    return coeff


@dataclass(frozen=True)
class PauliTerm:
    """A real coefficient times a tensor product of single-qubit Paulis.

    ``ops`` is stored as a tuple of ``(qubit, axis)`` sorted by qubit; identity
    factors are implicit.
    """

    ops: tuple[tuple[int, str], ...]
    coeff: float = 1.0

    def __post_init__(self):
        ops = self.ops.items() if isinstance(self.ops, Mapping) else self.ops
        ops = tuple(sorted((int(q), str(a).upper()) for q, a in ops))
        qubits = [q for q, _ in ops]
        if len(set(qubits)) != len(qubits):
            raise ValueError(f"qubit index repeated in {ops}")
        for q, a in ops:
            if q < 0:
                raise ValueError(f"negative qubit index {q}")
            if a not in AXES:
                raise ValueError(f"unknown axis {a!r}")
        coeff = _check_coeff(self.coeff)
        if coeff == 0.0:
            raise ValueError("stored terms must have nonzero coefficient")
        object.__setattr__(self, "ops", ops)
        object.__setattr__(self, "coeff", coeff)

    @property
    def qubits(self) -> tuple[int, ...]:
        return tuple(q for q, _ in self.ops)

    @property
    def axes(self) -> tuple[str, ...]:
        return tuple(a for _, a in self.ops)

    @property
    def weight(self) -> int:
        return len(self.ops)

    def sort_key(self):
        qs = self.qubits
        return (qs[0] if qs else -1, qs, self.axes)

    def label(self, names: Sequence[str] | None = None) -> str:
        if not self.ops:
            return "I"
        if names is None:
            return " ".join(f"{a}{q}" for q, a in self.ops)
        return " ".join(f"{a}_{names[q]}" for q, a in self.ops)

    def __str__(self):
        return f"{self.coeff!r} {self.label()}"


def _merge(pieces: Iterable[tuple[tuple[tuple[int, str], ...], float]]):
    acc: dict[tuple[tuple[int, str], ...], float] = {}
    for ops, c in pieces:
        acc[ops] = acc.get(ops, 0.0) + c
    return [PauliTerm(ops, c) for ops, c in acc.items() if abs(c) >= MERGE_TOL]


@dataclass(frozen=True)
class PauliSum:
    """Canonically merged and ordered sum of :class:`PauliTerm`."""

    terms: tuple[PauliTerm, ...]
    nqubits: int

    def __post_init__(self):
        terms = _merge((t.ops, t.coeff) for t in self.terms)
        terms.sort(key=PauliTerm.sort_key)
        for t in terms:
            for q in t.qubits:
                if q >= self.nqubits:
                    raise IndexError(f"qubit {q} out of range for {self.nqubits} qubits")
        object.__setattr__(self, "terms", tuple(terms))

    @classmethod
    def from_list(cls, items, nqubits: int) -> "PauliSum":
        """Build from ``[(coeff, {qubit: axis}), ...]`` or ``[(coeff, "Z0 Z1"), ...]``."""
        terms = []
        for coeff, ops in items:
            if isinstance(ops, str):
                ops = _parse_ops(ops)
            terms.append(PauliTerm(ops, coeff))
        return cls(tuple(terms), nqubits)

    def __len__(self):
        return len(self.terms)

    def __iter__(self):
        return iter(self.terms)

    def __str__(self):
        return to_text(self)

    def op_maps(self) -> list[tuple[tuple[int, str], ...]]:
        return [t.ops for t in self.terms]

    def coeff_of(self, ops) -> float:
        ops = PauliTerm(ops).ops
        for t in self.terms:
            if t.ops == ops:
                return t.coeff
        return 0.0

    def frobenius_weight(self) -> float:
        return float(sum(t.coeff**2 for t in self.terms))

    def scaled(self, factor: float) -> "PauliSum":
        if factor == 0:
            return PauliSum((), self.nqubits)
        return PauliSum(tuple(PauliTerm(t.ops, t.coeff * factor) for t in self.terms), self.nqubits)

    def __add__(self, other: "PauliSum") -> "PauliSum":
        return PauliSum(self.terms + other.terms, max(self.nqubits, other.nqubits))

    def pretty(self, names: Sequence[str] | None = None) -> str:
        parts = []
        for t in self.terms:
            sign = "-" if t.coeff < 0 else "+"
            mag = abs(t.coeff)
            mag_s = "" if math.isclose(mag, 1.0, abs_tol=1e-12) else f"{mag:g} "
            parts.append(f"{sign} {mag_s}{t.label(names)}")
        return " ".join(parts) if parts else "0"


@dataclass(frozen=True)
class RotationOp:
    """Simultaneous rotation ``exp(+i * angle * sum_q sigma^axis_q)``.

    The sign follows the pulse notation ``R^axis(angle) = exp(i angle axis)``
    so that pulse listings can be copied verbatim.
    """

    axis: str
    angle: float
    qubits: frozenset[int] = field(default_factory=frozenset)

    def __post_init__(self):
        axis = str(self.axis).upper()
        if axis not in AXES:
            raise ValueError(f"unknown axis {self.axis!r}")
        if not math.isfinite(self.angle):
            raise ValueError("rotation angle must be finite")
        qubits = frozenset(int(q) for q in self.qubits)
        if not qubits:
            raise ValueError("rotation must act on at least one qubit")
        object.__setattr__(self, "axis", axis)
        object.__setattr__(self, "angle", float(self.angle))
        object.__setattr__(self, "qubits", qubits)

    def inverse(self) -> "RotationOp":
        return RotationOp(self.axis, -self.angle, self.qubits)

    def support(self) -> frozenset[int]:
        return self.qubits


@dataclass(frozen=True)
class CouplingOp:
    """Free ZZ evolution ``exp(-i * theta * sum_pairs Z_i Z_j)`` with ``theta = J tau``.

    Pairs keep the order they were given in; the first member is the one
    that is flipped when the evolution has to be run backwards.
    """

    pairs: tuple[tuple[int, int], ...]
    theta: float

    def __post_init__(self):
        pairs = tuple((int(i), int(j)) for i, j in self.pairs)
        if not pairs:
            raise ValueError("coupling needs at least one pair")
        for i, j in pairs:
            if i == j:
                raise ValueError(f"pair ({i},{j}) must join two distinct qubits")
        if not math.isfinite(self.theta):
            raise ValueError("coupling angle must be finite")
        object.__setattr__(self, "pairs", pairs)
        object.__setattr__(self, "theta", float(self.theta))

    def inverse(self) -> "CouplingOp":
        return CouplingOp(self.pairs, -self.theta)

    def support(self) -> frozenset[int]:
        return frozenset(q for p in self.pairs for q in p)


Op = Union[RotationOp, CouplingOp]


def _check_support(h: PauliSum, op: Op):
    bad = [q for q in op.support() if q < 0 or q >= h.nqubits]
    if bad:
        raise IndexError(f"op acts on qubits {sorted(bad)} outside 0..{h.nqubits - 1}")


def _rotate_one(pieces, qubit: int, axis: str, angle: float):
    # R sigma^b R^dag with R = exp(i angle sigma^a): cos(2a) b - eps_abc sin(2a) c
    c2, s2 = math.cos(2 * angle), math.sin(2 * angle)
    out = []
    for ops, coeff in pieces:
        d = dict(ops)
        b = d.get(qubit)
        if b is None or b == axis:
            out.append((ops, coeff))
            continue
        g = _third_axis(axis, b)
        out.append((ops, coeff * c2))
        d[qubit] = g
        out.append((tuple(sorted(d.items())), -levi_civita(axis, b, g) * s2 * coeff))
    return [(o, c) for o, c in out if abs(c) >= MERGE_TOL]


def _couple_one(pieces, i: int, j: int, theta: float):
    c2, s2 = math.cos(2 * theta), math.sin(2 * theta)
    out = []
    for ops, coeff in pieces:
        d = dict(ops)
        ai, aj = d.get(i), d.get(j)
        flip_i = ai in ("X", "Y")
        flip_j = aj in ("X", "Y")
        if flip_i == flip_j:
            out.append((ops, coeff))
            continue
        w, p, aw, ap = (j, i, aj, ai) if flip_j else (i, j, ai, aj)
        # X_w -> cos X_w + sin Y_w Z_p ; Y_w -> cos Y_w - sin X_w Z_p
        sign = 1.0 if aw == "X" else -1.0
        out.append((ops, coeff * c2))
        d[w] = "Y" if aw == "X" else "X"
        if ap == "Z":
            del d[p]
        else:
            d[p] = "Z"
        out.append((tuple(sorted(d.items())), sign * s2 * coeff))
    return [(o, c) for o, c in out if abs(c) >= MERGE_TOL]


def conjugate_by_rotation(h: PauliSum, r: RotationOp) -> PauliSum:
    """Return ``R h R^dag`` for ``R = exp(i angle sum sigma^axis)``."""
    _check_support(h, r)
    pieces = [(t.ops, t.coeff) for t in h.terms]
    for q in sorted(r.qubits):
        pieces = _rotate_one(pieces, q, r.axis, r.angle)
    return PauliSum(tuple(PauliTerm(o, c) for o, c in pieces), h.nqubits)


def conjugate_by_coupling(h: PauliSum, c: CouplingOp, order: Sequence[int] | None = None) -> PauliSum:
    """Return ``U h U^dag`` for ``U = exp(-i theta sum Z_i Z_j)``.

    ``order`` permutes the pair application order; the pairs commute so the
    result must not depend on it.
    """
    _check_support(h, c)
    pairs = c.pairs if order is None else [c.pairs[k] for k in order]
    pieces = [(t.ops, t.coeff) for t in h.terms]
    for i, j in pairs:
        pieces = _couple_one(pieces, i, j, c.theta)
    return PauliSum(tuple(PauliTerm(o, cc) for o, cc in pieces), h.nqubits)


def conjugate(h: PauliSum, op: Op) -> PauliSum:
    if isinstance(op, RotationOp):
        return conjugate_by_rotation(h, op)
    if isinstance(op, CouplingOp):
        return conjugate_by_coupling(h, op)
    raise TypeError(f"not a pulse op: {op!r}")


def apply_sequence(h_ini: PauliSum, seq: Sequence[Op]) -> PauliSum:
    """Fold conjugations left to right: ``seq[0]`` acts on ``h_ini`` first."""
    h = h_ini
    for op in seq:
        h = conjugate(h, op)
    return h


class Comparison(enum.Enum):
    EQUAL = "equal"
    EQUAL_UP_TO_TERM_SIGNS = "equal_up_to_term_signs"
    DIFFERENT = "different"

    @property
    def ok(self) -> bool:
        return self is not Comparison.DIFFERENT


def equal_up_to_sign(a: PauliSum, b: PauliSum, atol: float = 1e-9) -> Comparison:
    if a.nqubits != b.nqubits:
        raise ValueError(f"qubit counts differ: {a.nqubits} vs {b.nqubits}")
    if a.op_maps() != b.op_maps():
        return Comparison.DIFFERENT
    same = True
    for ta, tb in zip(a.terms, b.terms):
        if abs(ta.coeff - tb.coeff) <= atol:
            continue
        if abs(ta.coeff + tb.coeff) <= atol:
            same = False
            continue
        return Comparison.DIFFERENT
    return Comparison.EQUAL if same else Comparison.EQUAL_UP_TO_TERM_SIGNS


def residual_terms(result: PauliSum, target: PauliSum) -> tuple[list[PauliTerm], list[PauliTerm]]:
    """Terms of ``result`` missing from ``target`` and vice versa (by operator string)."""
    ra = {t.ops for t in result.terms}
    tb = {t.ops for t in target.terms}
    extra = [t for t in result.terms if t.ops not in tb]
    missing = [t for t in target.terms if t.ops not in ra]
    return extra, missing


# --- dense realisation -------------------------------------------------------


def _masks(term: PauliTerm, n: int) -> tuple[int, int, int]:
    xmask = zmask = ny = 0
    for q, a in term.ops:
        bit = 1 << (n - 1 - q)
        if a in ("X", "Y"):
            xmask |= bit
        if a in ("Z", "Y"):
            zmask |= bit
        if a == "Y":
            ny += 1
    return xmask, zmask, ny


def _popcount_parity(arr: np.ndarray) -> np.ndarray:
    parity = np.zeros_like(arr)
    a = arr.copy()
    while np.any(a):
        parity ^= a & 1
        a >>= 1
    return parity


def _term_action(term: PauliTerm, n: int):
    """Column ``k`` of the Pauli string is ``phase[k] * e_{k ^ xmask}``."""
    xmask, zmask, ny = _masks(term, n)
    idx = np.arange(1 << n, dtype=np.int64)
    # P|k> = i^ny (-1)^{popcount(k & zmask)} |k ^ xmask>
    phase = (1j**ny) * (1 - 2 * _popcount_parity(idx & zmask))
    return xmask, phase


def to_matrix(h: PauliSum, nqubits: int | None = None) -> np.ndarray:
    n = h.nqubits if nqubits is None else int(nqubits)
    if n > DENSE_MAX_QUBITS:
        raise CapacityError(f"{n} qubits exceeds dense limit of {DENSE_MAX_QUBITS}")
    if n < h.nqubits and any(q >= n for t in h.terms for q in t.qubits):
        raise IndexError("nqubits smaller than the operator support")
    dim = 1 << n
    m = np.zeros((dim, dim), dtype=complex)
    cols = np.arange(dim)
    for t in h.terms:
        xmask, phase = _term_action(t, n)
        m[cols ^ xmask, cols] += t.coeff * phase
    return m


def diagonal(h: PauliSum, nqubits: int | None = None) -> np.ndarray:
    """Diagonal of a Z-only Pauli sum as a real vector over basis states."""
    n = h.nqubits if nqubits is None else int(nqubits)
    out = np.zeros(1 << n)
    for t in h.terms:
        if any(a != "Z" for a in t.axes):
            raise ValueError("diagonal() needs Z-only terms")
        _, phase = _term_action(t, n)
        out += t.coeff * phase.real
    return out


def matvec(h: PauliSum, nqubits: int | None = None) -> Callable[[np.ndarray], np.ndarray]:
    """Matrix-free action of ``h`` on state vectors."""
    n = h.nqubits if nqubits is None else int(nqubits)
    actions = [(_term_action(t, n), t.coeff) for t in h.terms]
    dim = 1 << n
    cols = np.arange(dim)

    def apply(psi: np.ndarray) -> np.ndarray:
        out = np.zeros(dim, dtype=complex)
        for (xmask, phase), coeff in actions:
            out[cols ^ xmask] += coeff * phase * psi
        return out

    return apply


# --- text format -------------------------------------------------------------


def _parse_ops(tokens: str | Sequence[str]) -> dict[int, str]:
    if isinstance(tokens, str):
        tokens = tokens.split()
    ops: dict[int, str] = {}
    for tok in tokens:
        axis, idx = tok[0].upper(), tok[1:]
        if axis not in AXES or not idx.isdigit():
            raise ValueError(f"bad Pauli factor {tok!r}")
        q = int(idx)
        if q in ops:
            raise ValueError(f"duplicate qubit index {q} in {' '.join(tokens)!r}")
        ops[q] = axis
    return ops


def to_text(h: PauliSum) -> str:
    lines = [f"# nqubits={h.nqubits}"]
    lines += [f"{t.coeff!r} {t.label()}" for t in h.terms]
    return "\n".join(lines) + "\n"


def from_text(text: str, nqubits: int | None = None) -> PauliSum:
    terms = []
    declared = None
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line.lstrip("#").strip()
            if body.startswith("nqubits="):
                declared = int(body.split("=", 1)[1])
            continue
        coeff, *tokens = line.split()
        terms.append(PauliTerm(_parse_ops(tokens), float(coeff)))
    n = nqubits if nqubits is not None else declared
    if n is None:
        n = 1 + max((q for t in terms for q in t.qubits), default=-1)
    return PauliSum(tuple(terms), n)
