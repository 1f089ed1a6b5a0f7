"""LHZ parity encoding of all-to-all Ising problems.

Each physical qubit carries the relative orientation of one logical pair
(bit 0 = parallel, bit 1 = antiparallel).  Physical qubits are ordered row by
row along the triangle, ``(i, i+1)`` pairs first, then ``(i, i+2)`` and so
on; the ``(i, i+1)`` row is the open boundary and closes with three-body
constraints.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .pauli_algebra import CapacityError, PauliSum, PauliTerm

GROUND_TRUTH_MAX = 20
ENERGY_TOL = 1e-9


@dataclass(frozen=True)
class LogicalProblem:
    """``E(s) = sum_{i<j} J_ij s_i s_j + sum_i h_i s_i`` over ``s_i = +-1``."""

    n_logical: int
    couplings: Mapping[tuple[int, int], float]
    fields: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.n_logical < 2:
            raise ValueError("need at least two logical spins")
        clean = {}
        for (i, j), v in dict(self.couplings).items():
            i, j = int(i), int(j)
            if i == j or not (0 <= i < self.n_logical and 0 <= j < self.n_logical):
                raise ValueError(f"bad coupling index ({i},{j})")
            if not np.isfinite(v):
                raise ValueError(f"non-finite coupling J[{i},{j}]")
            key = (min(i, j), max(i, j))
            clean[key] = clean.get(key, 0.0) + float(v)
        object.__setattr__(self, "couplings", clean)
        if self.fields is not None:
            fields = tuple(float(x) for x in self.fields)
            if len(fields) != self.n_logical or not all(np.isfinite(fields)):
                raise ValueError("fields must be finite, one per logical spin")
            object.__setattr__(self, "fields", fields if any(fields) else None)

    def J(self, i: int, j: int) -> float:
        return self.couplings.get((min(i, j), max(i, j)), 0.0)

    def coupling_matrix(self) -> np.ndarray:
        m = np.zeros((self.n_logical, self.n_logical))
        for (i, j), v in self.couplings.items():
            m[i, j] = m[j, i] = v
        return m

    def energy(self, spins: Sequence[int]) -> float:
        s = np.asarray(spins, dtype=float)
        e = 0.5 * s @ self.coupling_matrix() @ s
        if self.fields is not None:
            e += float(np.dot(self.fields, s))
        return float(e)


@dataclass(frozen=True)
class LhzLayout:
    """Physical qubit layout shared by the encoder and the pulse compiler.

    ``plaquettes`` are the constraint terms that enter the Hamiltonian;
    ``checks`` are the parity checks on data qubits used for decoding (they
    coincide with ``plaquettes`` unless ancillas were introduced).
    """

    n_physical: int
    labels: tuple[str, ...]
    plaquettes: tuple[tuple[int, ...], ...]
    pair_of: tuple[tuple[int, int] | None, ...] = ()
    checks: tuple[tuple[int, ...], ...] | None = None
    blocks: tuple[tuple[int, ...], ...] = ()
    ancillas: tuple[int, ...] = ()
    couplings: tuple[tuple[int, int], ...] = ()
    n_logical: int | None = None
    field_spin: int | None = None
    plaquette_ancilla: tuple[int | None, ...] = field(default=(), compare=False)

    def __post_init__(self):
        if len(self.labels) != self.n_physical:
            raise ValueError("one label per physical qubit required")
        for plaq in self.plaquettes:
            if len(set(plaq)) != len(plaq) or len(plaq) not in (3, 4):
                raise ValueError(f"plaquette {plaq} must have 3 or 4 distinct members")
            if any(not 0 <= q < self.n_physical for q in plaq):
                raise IndexError(f"plaquette {plaq} out of range")
        if self.checks is None:
            object.__setattr__(self, "checks", self.plaquettes)

    @property
    def n_data(self) -> int:
        return self.n_physical - len(self.ancillas)

    @property
    def data_qubits(self) -> tuple[int, ...]:
        anc = set(self.ancillas)
        return tuple(q for q in range(self.n_physical) if q not in anc)

    def index(self, label: str) -> int:
        return self.labels.index(label)

    def constraint_sum(self, lam: float = 1.0) -> PauliSum:
        terms = tuple(PauliTerm({q: "Z" for q in plaq}, -lam) for plaq in self.plaquettes)
        return PauliSum(terms, self.n_physical)


@dataclass(frozen=True)
class AnnealHamiltonian:
    """Pieces of ``sum_i [A X_i + B h_i Z_i] - lam sum_plaquettes Z..Z``."""

    h_fields: np.ndarray
    constraint_sum: PauliSum
    lam: float = 1.0

    def __post_init__(self):
        if self.lam <= 0:
            raise ValueError("constraint strength must be positive")
        h = np.asarray(self.h_fields, dtype=float)
        h.setflags(write=False)
        object.__setattr__(self, "h_fields", h)
        if len(h) != self.constraint_sum.nqubits:
            raise ValueError("h_fields length must equal the physical qubit count")
        for t in self.constraint_sum.terms:
            if t.weight not in (3, 4) or set(t.axes) != {"Z"}:
                raise ValueError(f"constraint term {t} is not a 3/4-body Z product")

    @property
    def n_physical(self) -> int:
        return len(self.h_fields)

    def problem_sum(self) -> PauliSum:
        terms = tuple(PauliTerm({q: "Z"}, h) for q, h in enumerate(self.h_fields) if h != 0)
        return PauliSum(terms, self.n_physical)

    def final_hamiltonian(self, lam: float | None = None) -> PauliSum:
        """Problem part plus constraints at strength ``lam`` (default: stored)."""
        scale = 1.0 if lam is None else lam / self.lam
        return self.problem_sum() + self.constraint_sum.scaled(scale)


def _pair_label(i: int, j: int, n: int) -> str:
    return f"q{i}{j}" if n <= 10 else f"q{i}_{j}"


def lhz_layout(n_logical: int) -> LhzLayout:
    """Standard LHZ triangle for ``n_logical`` spins with boundary 3-body checks."""
    if n_logical < 2:
        raise ValueError("need at least two logical spins")
    pairs = [(i, i + d) for d in range(1, n_logical) for i in range(n_logical - d)]
    index = {p: k for k, p in enumerate(pairs)}
    plaquettes: list[tuple[int, ...]] = []
    blocks: list[tuple[int, ...]] = []
    for d in range(1, n_logical - 1):
        block = []
        for i in range(n_logical - d - 1):
            j = i + d
            if d == 1:
                plaq = (index[(i, j)], index[(i + 1, j + 1)], index[(i, j + 1)])
            else:
                # up, down, left, right neighbours of the plaquette centre
                plaq = (index[(i, j + 1)], index[(i + 1, j)], index[(i, j)], index[(i + 1, j + 1)])
            block.append(len(plaquettes))
            plaquettes.append(plaq)
        blocks.append(tuple(block))
    return LhzLayout(
        n_physical=len(pairs),
        labels=tuple(_pair_label(i, j, n_logical) for i, j in pairs),
        plaquettes=tuple(plaquettes),
        pair_of=tuple(pairs),
        blocks=tuple(blocks),
        n_logical=n_logical,
    )


def encode(p: LogicalProblem) -> tuple[LhzLayout, AnnealHamiltonian]:
    """Map a logical problem onto the LHZ layout.

    Logical fields are absorbed by one extra reference spin pinned to +1, so
    a problem with fields occupies the layout of ``n_logical + 1`` spins.
    """
    n = p.n_logical
    couplings = dict(p.couplings)
    field_spin = None
    if p.fields is not None:
        field_spin = n
        for i, h in enumerate(p.fields):
            couplings[(i, n)] = h
        n += 1
    layout = lhz_layout(n)
    if field_spin is not None:
        layout = replace(layout, field_spin=field_spin)
    h = np.array([couplings.get(pair, 0.0) for pair in layout.pair_of])
    return layout, AnnealHamiltonian(h, layout.constraint_sum())


def three_body_replace(layout: LhzLayout) -> LhzLayout:
    """Split each 4-body plaquette ``Z1Z2Z3Z4`` into ``Z1Z2Za + Z3Z4Za``."""
    if not any(len(p) == 4 for p in layout.plaquettes):
        return layout
    n = layout.n_physical
    labels = list(layout.labels)
    pair_of = list(layout.pair_of) if layout.pair_of else [None] * n
    plaquettes: list[tuple[int, ...]] = []
    ancillas = list(layout.ancillas)
    owner: list[int | None] = []
    for k, plaq in enumerate(layout.plaquettes):
        if len(plaq) == 3:
            plaquettes.append(plaq)
            owner.append(None)
            continue
        a = n
        n += 1
        labels.append(f"anc{k}")
        pair_of.append(None)
        ancillas.append(a)
        plaquettes += [(plaq[0], plaq[1], a), (plaq[2], plaq[3], a)]
        owner += [a, a]
    return replace(
        layout,
        n_physical=n,
        labels=tuple(labels),
        plaquettes=tuple(plaquettes),
        pair_of=tuple(pair_of),
        checks=layout.checks,
        ancillas=tuple(ancillas),
        blocks=(),
        plaquette_ancilla=tuple(owner),
    )


def encode_spins(spins: Sequence[int], layout: LhzLayout) -> tuple[int, ...]:
    """Physical bitstring (ancillas included) encoding a logical configuration."""
    s = list(spins)
    if layout.field_spin is not None and len(s) == layout.field_spin:
        s.append(1)
    bits = [0] * layout.n_physical
    for q, pair in enumerate(layout.pair_of):
        if pair is not None:
            i, j = pair
            bits[q] = 0 if s[i] == s[j] else 1
    for plaq in layout.plaquettes:
        a = plaq[-1]
        if a in layout.ancillas:
            bits[a] = bits[plaq[0]] ^ bits[plaq[1]]
    return tuple(bits)


@dataclass(frozen=True)
class DecodeResult:
    spins: tuple[int, ...] | None
    violated: tuple[int, ...] = ()

    @property
    def ok(self) -> bool:
        return self.spins is not None


def violated_checks(bits: Sequence[int], layout: LhzLayout) -> tuple[int, ...]:
    return tuple(k for k, chk in enumerate(layout.checks) if sum(bits[q] for q in chk) % 2)


def decode(config: Sequence[int], layout: LhzLayout) -> DecodeResult:
    """Recover logical spins (gauge: spin 0, or the field spin, set to +1)."""
    bits = [int(b) for b in config]
    if len(bits) == layout.n_data and layout.ancillas:
        full = [0] * layout.n_physical
        for q, b in zip(layout.data_qubits, bits):
            full[q] = b
        bits = full
    elif len(bits) != layout.n_physical:
        raise ValueError(f"config has {len(bits)} bits, layout expects {layout.n_data} data qubits")
    if any(b not in (0, 1) for b in bits):
        raise ValueError("config must be a 0/1 bitstring")
    if layout.n_logical is None:
        raise ValueError("layout carries no logical pair assignment")
    bad = violated_checks(bits, layout)
    if bad:
        return DecodeResult(None, bad)
    n = layout.n_logical
    ref = layout.field_spin if layout.field_spin is not None else 0
    where = {pair: q for q, pair in enumerate(layout.pair_of) if pair is not None}
    spins = [0] * n
    spins[ref] = 1
    for j in range(n):
        if j != ref:
            q = where[(min(ref, j), max(ref, j))]
            spins[j] = -1 if bits[q] else 1
    for (i, j), q in where.items():
        if (spins[i] != spins[j]) != bool(bits[q]):
            raise AssertionError("parity checks passed but pair bits are inconsistent")
    if layout.field_spin is not None:
        spins = spins[: layout.field_spin] + spins[layout.field_spin + 1 :]
    return DecodeResult(tuple(spins))


def ground_truth(p: LogicalProblem) -> tuple[float, list[tuple[int, ...]]]:
    """Exhaustive minimum energy and every degenerate minimiser."""
    n = p.n_logical
    if n > GROUND_TRUTH_MAX:
        raise CapacityError(f"{n} logical spins exceeds brute-force limit {GROUND_TRUTH_MAX}")
    jm = p.coupling_matrix()
    h = np.zeros(n) if p.fields is None else np.asarray(p.fields)
    best = np.inf
    found: list[np.ndarray] = []
    chunk = 1 << min(n, 16)
    for start in range(0, 1 << n, chunk):
        idx = np.arange(start, min(start + chunk, 1 << n), dtype=np.int64)
        s = 1 - 2 * ((idx[:, None] >> np.arange(n - 1, -1, -1)) & 1)
        e = 0.5 * np.einsum("ki,ij,kj->k", s, jm, s) + s @ h
        emin = e.min()
        if emin < best - ENERGY_TOL:
            best = emin
            found = [s[e <= emin + ENERGY_TOL]]
        elif emin <= best + ENERGY_TOL:
            found.append(s[e <= best + ENERGY_TOL])
    configs = [tuple(int(x) for x in row) for block in found for row in block]
    return float(best), configs


def ground_bitstrings(p: LogicalProblem, layout: LhzLayout) -> list[tuple[int, ...]]:
    """Distinct physical encodings of all logical ground states."""
    _, configs = ground_truth(p)
    seen = {}
    for s in configs:
        seen.setdefault(encode_spins(s, layout), None)
    return list(seen)


def bits_to_index(bits: Sequence[int]) -> int:
    k = 0
    for b in bits:
        k = (k << 1) | int(b)
    return k


def index_to_bits(k: int, n: int) -> tuple[int, ...]:
    return tuple((k >> (n - 1 - q)) & 1 for q in range(n))


def constraint_satisfying_count(layout: LhzLayout) -> int:
    n = layout.n_data
    data = layout.data_qubits
    pos = {q: k for k, q in enumerate(data)}
    count = 0
    for bits in itertools.product((0, 1), repeat=n):
        if all(sum(bits[pos[q]] for q in chk) % 2 == 0 for chk in layout.checks):
            count += 1
    return count


# --- problem files -----------------------------------------------------------


def random_problem(n_logical: int, seed: int, low: float = -1.0, high: float = 1.0) -> LogicalProblem:
    """Seeded instance: couplings uniform on ``[low, high]`` in ``i<j`` order."""
    rng = np.random.default_rng(np.uint64(seed))
    pairs = list(itertools.combinations(range(n_logical), 2))
    values = rng.uniform(low, high, size=len(pairs))
    return LogicalProblem(n_logical, {p: float(v) for p, v in zip(pairs, values)})


def problem_to_text(p: LogicalProblem) -> str:
    lines = [f"n={p.n_logical}"]
    lines += [f"J {i} {j} {v!r}" for (i, j), v in sorted(p.couplings.items())]
    if p.fields is not None:
        lines += [f"h {i} {v!r}" for i, v in enumerate(p.fields) if v != 0]
    return "\n".join(lines) + "\n"


def problem_from_text(text: str) -> LogicalProblem:
    n = None
    couplings: dict[tuple[int, int], float] = {}
    fields: dict[int, float] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("n="):
            n = int(line[2:])
            continue
        tok = line.split()
        if tok[0] == "J" and len(tok) == 4:
            key = (int(tok[1]), int(tok[2]))
            if key in couplings or key[::-1] in couplings:
                raise ValueError(f"line {lineno}: duplicate coupling {key}")
            couplings[key] = float(tok[3])
        elif tok[0] == "h" and len(tok) == 3:
            fields[int(tok[1])] = float(tok[2])
        else:
            raise ValueError(f"line {lineno}: cannot parse {raw!r}")
    if n is None:
        raise ValueError("missing header n=<N>")
    field_vec = None
    if fields:
        if any(not 0 <= i < n for i in fields):
            raise ValueError("field index out of range")
        field_vec = tuple(fields.get(i, 0.0) for i in range(n))
    return LogicalProblem(n, couplings, field_vec)


def write_problem(p: LogicalProblem, path: str | Path) -> None:
    Path(path).write_text(problem_to_text(p))


def read_problem(path: str | Path) -> LogicalProblem:
    return problem_from_text(Path(path).read_text())
