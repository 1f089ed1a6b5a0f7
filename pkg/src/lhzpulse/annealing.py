"""Split-step annealing of LHZ-encoded problems on dense state vectors.

Each sub-step applies ``exp(-i tau_sq sum_k [A(t) X_k + B(t) h_k Z_k])``
exactly (it factorises over qubits).  The plaquette constraints are diagonal
and are applied either once per lump of ``N_S`` sub-steps with total phase
``J_tau_M`` ("lumped") or after every sub-step with phase ``J_tau_M / N_S``
("per_step").
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.special import jv

from .lhz_mapping import AnnealHamiltonian, LhzLayout, LogicalProblem, bits_to_index, ground_bitstrings
from .pauli_algebra import diagonal
from .statevector import apply_product, check_capacity

SCHEDULES = ("I", "II", "III")
BACKENDS = ("exact_split", "chebyshev")
SCHEMES = ("lumped", "per_step")


class SpectralBoundError(RuntimeError):
    """Power iteration did not settle on a spectral radius."""


def _raw_delta(kind: str, t):
    if kind == "I":
        return 1.0 - t
    if kind == "II":
        return 1.0 - np.exp(-t)
    if kind == "III":
        return 1.0 / np.sqrt(t + 1.0)
    raise ValueError(f"unknown schedule {kind!r}; expected one of {SCHEDULES}")


@dataclass(frozen=True)
class ScheduleSpec:
    """Transverse weight ``A = Delta`` and problem weight ``B = 1 - Delta``.

    ``Delta`` is mapped affinely so that ``A(0) = 1`` and ``A(1) = 0`` for
    every kind.
    """

    kind: str = "II"

    def __post_init__(self):
        if self.kind not in SCHEDULES:
            raise ValueError(f"unknown schedule {self.kind!r}; expected one of {SCHEDULES}")

    def A(self, t):
        d0, d1 = _raw_delta(self.kind, 0.0), _raw_delta(self.kind, 1.0)
        return (_raw_delta(self.kind, np.asarray(t, dtype=float)) - d1) / (d0 - d1)

    def B(self, t):
        return 1.0 - self.A(t)


@dataclass(frozen=True)
class RunConfig:
    N: int = 100_000
    N_S: int = 50
    tau_sq: float = math.pi / 200
    J_tau_M: float = math.pi / 2
    seed: int = 0
    schedule: str = "II"
    backend: str = "exact_split"
    scheme: str = "lumped"
    constraint_sign: int = 1  # +1: kick phase favours even plaquette parity
    cheb_eps: float = 1e-12

    def __post_init__(self):
        if self.N < 1 or self.N_S < 1:
            raise ValueError("N and N_S must be positive")
        if self.N % self.N_S:
            raise ValueError(f"N={self.N} is not divisible by N_S={self.N_S}")
        if not self.tau_sq > 0:
            raise ValueError("tau_sq must be positive")
        if not math.isfinite(self.J_tau_M):
            raise ValueError("J_tau_M must be finite")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 bits")
        ScheduleSpec(self.schedule)
        if self.backend not in BACKENDS:
            raise ValueError(f"backend must be one of {BACKENDS}")
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}")
        if self.constraint_sign not in (1, -1):
            raise ValueError("constraint_sign must be +1 or -1")

    @property
    def n_lumps(self) -> int:
        return self.N // self.N_S

    @property
    def tau_mb(self) -> float:
        return self.J_tau_M / self.N_S


def initial_state(n: int) -> np.ndarray:
    """``|->^n``, the ground state of ``+sum X_i``."""
    check_capacity(n)
    idx = np.arange(1 << n)
    parity = np.zeros(1 << n, dtype=np.int64)
    for q in range(n):
        parity ^= (idx >> q) & 1
    return (1 - 2 * parity).astype(complex) / math.sqrt(1 << n)


def single_qubit_unitaries(A, B, h: np.ndarray, tau: float) -> np.ndarray:
    """``exp(-i tau (A X + B h_k Z))`` for every time sample and qubit: ``(T, n, 2, 2)``."""
    A = np.atleast_1d(np.asarray(A, dtype=float))[:, None]
    B = np.atleast_1d(np.asarray(B, dtype=float))[:, None]
    bx = A * np.ones_like(h)[None, :]
    bz = B * h[None, :]
    r = np.hypot(bx, bz)
    c = np.cos(tau * r)
    s = np.where(r > 0, np.sin(tau * r) / np.where(r > 0, r, 1.0), tau)
    u = np.empty(r.shape + (2, 2), dtype=complex)
    u[..., 0, 0] = c - 1j * s * bz
    u[..., 1, 1] = c + 1j * s * bz
    u[..., 0, 1] = -1j * s * bx
    u[..., 1, 0] = -1j * s * bx
    return u


def constraint_diagonal(ham: AnnealHamiltonian, sign: int = 1) -> np.ndarray:
    """Diagonal of the unit-strength many-body term (``-sum P`` for ``sign=+1``)."""
    return sign * diagonal(ham.constraint_sum) / ham.lam


def many_body_phases(ham: AnnealHamiltonian, phase: float, sign: int = 1) -> np.ndarray:
    return np.exp(-1j * phase * constraint_diagonal(ham, sign))


def step_unit(psi: np.ndarray, t_l: float, cfg: RunConfig, ham: AnnealHamiltonian) -> np.ndarray:
    """One sub-step: single-qubit factor at ``t_l`` then the many-body factor."""
    n = ham.n_physical
    sched = ScheduleSpec(cfg.schedule)
    u = single_qubit_unitaries(sched.A(t_l), sched.B(t_l), ham.h_fields, cfg.tau_sq)[0]
    psi = apply_product(psi, n, u)
    return psi * many_body_phases(ham, cfg.tau_mb, cfg.constraint_sign)


# --- Chebyshev propagation ---------------------------------------------------------


def estimate_spectral_radius(
    matvec: Callable[[np.ndarray], np.ndarray], dim: int, tol: float = 1e-8, maxiter: int = 5000, seed: int = 1
) -> float:
    rng = np.random.default_rng(seed)
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    v /= np.linalg.norm(v)
    prev = 0.0
    for _ in range(maxiter):
        w = matvec(v)
        est = float(np.linalg.norm(w))
        if est == 0.0:
            return 0.0
        if abs(est - prev) <= tol * est:
            return est
        prev = est
        v = w / est
    raise SpectralBoundError(f"power iteration did not converge in {maxiter} iterations")


def chebyshev_propagate(
    psi: np.ndarray,
    matvec: Callable[[np.ndarray], np.ndarray],
    t: float,
    eps: float = 1e-12,
    bounds: tuple[float, float] | None = None,
    margin: float = 0.05,
) -> np.ndarray:
    """``exp(-i H t) psi`` from a Chebyshev series with Bessel coefficients."""
    if t == 0:
        return np.array(psi, dtype=complex, copy=True)
    if bounds is None:
        r = estimate_spectral_radius(matvec, len(psi))
        bounds = (-r, r)
    lo, hi = bounds
    center = 0.5 * (hi + lo)
    half = max(0.5 * (hi - lo), 1e-300) * (1.0 + margin)
    x = half * t

    def scaled(v):
        return (matvec(v) - center * v) / half

    kmax = int(x) + 8
    while abs(jv(kmax, x)) >= eps:
        kmax += 8
    coeffs = jv(np.arange(kmax + 1), x) * (-1j) ** np.arange(kmax + 1)
    coeffs[1:] *= 2
    # drop the tail once past the Bessel peak
    keep = kmax + 1
    while keep > max(int(x) + 1, 1) and abs(coeffs[keep - 1]) < eps:
        keep -= 1
    phi_prev = np.asarray(psi, dtype=complex)
    out = coeffs[0] * phi_prev
    if keep > 1:
        phi = scaled(phi_prev)
        out = out + coeffs[1] * phi
        for k in range(2, keep):
            phi_prev, phi = phi, 2 * scaled(phi) - phi_prev
            out = out + coeffs[k] * phi
    return np.exp(-1j * center * t) * out


def single_qubit_matvec(A: float, B: float, h: np.ndarray):
    """Matrix-free ``sum_k A X_k + B h_k Z_k`` and its exact spectral radius."""
    n = len(h)
    idx = np.arange(1 << n)
    flips = [idx ^ (1 << (n - 1 - q)) for q in range(n)]
    bits = (idx[:, None] >> np.arange(n - 1, -1, -1)) & 1
    zdiag = (1 - 2 * bits) @ h

    def apply(v):
        out = B * zdiag * v
        for f in flips:
            out = out + A * v[f]
        return out

    radius = float(np.sum(np.hypot(A, B * h)))
    return apply, radius


# --- trajectories ------------------------------------------------------------


def ground_indices(problem: LogicalProblem, layout: LhzLayout) -> np.ndarray:
    return np.array(sorted(bits_to_index(b) for b in ground_bitstrings(problem, layout)), dtype=np.int64)


def success_probability(psi: np.ndarray, problem: LogicalProblem, layout: LhzLayout) -> float:
    """Weight of ``psi`` on the physical encodings of the logical ground states."""
    if len(psi) != 1 << layout.n_physical:
        raise ValueError(f"state has {len(psi)} amplitudes, layout needs 2**{layout.n_physical}")
    return float(np.sum(np.abs(psi[ground_indices(problem, layout)]) ** 2))


@dataclass
class Trajectory:
    t: np.ndarray
    success: np.ndarray
    norm_error: np.ndarray
    final_state: np.ndarray
    config: RunConfig
    metadata: dict = field(default_factory=dict)

    @property
    def final_success(self) -> float:
        return float(self.success[-1])


def instance_hash(ham: AnnealHamiltonian, targets: np.ndarray) -> str:
    m = hashlib.sha256()
    m.update(np.ascontiguousarray(ham.h_fields, dtype="<f8").tobytes())
    for t in ham.constraint_sum.terms:
        m.update(str(t).encode())
    m.update(np.ascontiguousarray(targets, dtype="<i8").tobytes())
    return m.hexdigest()[:16]


def _lump_products(u: np.ndarray, n_lumps: int, n_s: int) -> np.ndarray:
    u = u.reshape((n_lumps, n_s) + u.shape[1:])
    prod = u[:, 0]
    for s in range(1, n_s):
        prod = u[:, s] @ prod
    return prod


def simulate(cfg: RunConfig, ham: AnnealHamiltonian, targets: Sequence[int], psi0: np.ndarray | None = None) -> Trajectory:
    """Evolve from ``psi0`` (default ``|->^n``), recording success once per lump."""
    n = ham.n_physical
    check_capacity(n)
    targets = np.asarray(targets, dtype=np.int64)
    sched = ScheduleSpec(cfg.schedule)
    t_grid = np.arange(cfg.N) / cfg.N
    A, B = sched.A(t_grid), sched.B(t_grid)
    mb = constraint_diagonal(ham, cfg.constraint_sign)
    kick_phase = cfg.J_tau_M if cfg.scheme == "lumped" else cfg.tau_mb
    kick = np.exp(-1j * kick_phase * mb)
    psi = initial_state(n) if psi0 is None else np.array(psi0, dtype=complex)

    ts = np.arange(1, cfg.n_lumps + 1) * cfg.N_S / cfg.N
    success = np.empty(cfg.n_lumps)
    norm_err = np.empty(cfg.n_lumps)

    if cfg.backend == "exact_split":
        u = single_qubit_unitaries(A, B, ham.h_fields, cfg.tau_sq)
        if cfg.scheme == "lumped":
            lumps = _lump_products(u, cfg.n_lumps, cfg.N_S)
        for j in range(cfg.n_lumps):
            if cfg.scheme == "lumped":
                psi = apply_product(psi, n, lumps[j]) * kick
            else:
                for l in range(j * cfg.N_S, (j + 1) * cfg.N_S):
                    psi = apply_product(psi, n, u[l]) * kick
            success[j] = np.sum(np.abs(psi[targets]) ** 2)
            norm_err[j] = abs(np.linalg.norm(psi) - 1.0)
    else:
        for j in range(cfg.n_lumps):
            for l in range(j * cfg.N_S, (j + 1) * cfg.N_S):
                op, radius = single_qubit_matvec(A[l], B[l], ham.h_fields)
                psi = chebyshev_propagate(psi, op, cfg.tau_sq, cfg.cheb_eps, (-radius, radius))
                if cfg.scheme == "per_step":
                    psi = psi * kick
            if cfg.scheme == "lumped":
                psi = psi * kick
            success[j] = np.sum(np.abs(psi[targets]) ** 2)
            norm_err[j] = abs(np.linalg.norm(psi) - 1.0)

    meta = {
        "initial_state": "|->^n (ground state of +sum X_i)" if psi0 is None else "user supplied",
        "basis_order": "qubit 0 is the most significant bit; bit 0 <-> Z=+1 (parallel pair)",
        "schedule_map": "A=(D(t)-D(1))/(D(0)-D(1)), B=1-A",
        "time_grid": "t_l=l/N, left endpoint",
        "substep_order": "single-qubit factor then many-body factor",
        "constraint_sign": f"{cfg.constraint_sign:+d} (kick exp(-i phase * sign * -sum P))",
        "instance_hash": instance_hash(ham, targets),
        "n_physical": n,
        "n_targets": len(targets),
        **{f"cfg.{k}": v for k, v in asdict(cfg).items()},
    }
    return Trajectory(ts, success, norm_err, psi, cfg, meta)


def run_lumped(cfg: RunConfig, ham: AnnealHamiltonian, problem: LogicalProblem, layout: LhzLayout) -> Trajectory:
    return simulate(cfg, ham, ground_indices(problem, layout))


# --- output files --------------------------------------------------------------

TRAJECTORY_SCHEMA = "lhzpulse.trajectory/1"
TRAJECTORY_COLUMNS = ("t", "success_prob", "norm_error", "schedule", "N", "N_S", "J_tau_M", "seed")


def trajectory_csv(traj: Trajectory) -> str:
    c = traj.config
    lines = [f"# schema={TRAJECTORY_SCHEMA}", ",".join(TRAJECTORY_COLUMNS)]
    for t, p, e in zip(traj.t, traj.success, traj.norm_error):
        lines.append(f"{float(t)!r},{float(p)!r},{float(e)!r},{c.schedule},{c.N},{c.N_S},{c.J_tau_M!r},{c.seed}")
    return "\n".join(lines) + "\n"


def read_trajectory_csv(text: str) -> list[dict]:
    lines = text.splitlines()
    if not lines or lines[0].strip() != f"# schema={TRAJECTORY_SCHEMA}":
        raise ValueError(f"expected schema line '# schema={TRAJECTORY_SCHEMA}'")
    if tuple(lines[1].split(",")) != TRAJECTORY_COLUMNS:
        raise ValueError(f"unexpected columns {lines[1]!r}")
    rows = []
    for line in lines[2:]:
        if not line.strip():
            continue
        vals = line.split(",")
        rows.append(
            {
                "t": float(vals[0]),
                "success_prob": float(vals[1]),
                "norm_error": float(vals[2]),
                "schedule": vals[3],
                "N": int(vals[4]),
                "N_S": int(vals[5]),
                "J_tau_M": float(vals[6]),
                "seed": int(vals[7]),
            }
        )
    return rows


def metadata_text(traj: Trajectory, extra: dict | None = None) -> str:
    meta = dict(traj.metadata)
    meta["final_success"] = repr(traj.final_success)
    meta["max_norm_error"] = repr(float(np.max(traj.norm_error)))
    if extra:
        meta.update(extra)
    return "".join(f"{k}={v}\n" for k, v in meta.items())
