import math
import random

import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given
from hypothesis import strategies as st

from lhzpulse.annealing import (
    RunConfig,
    ScheduleSpec,
    SpectralBoundError,
    chebyshev_propagate,
    constraint_diagonal,
    estimate_spectral_radius,
    initial_state,
    many_body_phases,
    metadata_text,
    read_trajectory_csv,
    run_lumped,
    simulate,
    single_qubit_matvec,
    single_qubit_unitaries,
    step_unit,
    success_probability,
    trajectory_csv,
)
from lhzpulse.lhz_mapping import AnnealHamiltonian, bits_to_index, encode, ground_bitstrings, random_problem
from lhzpulse.pauli_algebra import PauliSum, PauliTerm, diagonal
from test_pauli_algebra import kron_string


def dense_sq(A, B, h):
    n = len(h)
    return sum(A * kron_string({q: "X"}, n) + B * h[q] * kron_string({q: "Z"}, n) for q in range(n))


def dense_mb(ham, sign=1):
    n = ham.n_physical
    out = np.zeros((2**n, 2**n), dtype=complex)
    for t in ham.constraint_sum.terms:
        out += sign * t.coeff / ham.lam * kron_string(dict(t.ops), n)
    return out


def oracle_run(cfg, ham):
    """Plain dense time stepping with matrix exponentials."""
    sched = ScheduleSpec(cfg.schedule)
    n = ham.n_physical
    psi = np.linalg.eigh(sum(kron_string({q: "X"}, n) for q in range(n)))[1][:, 0]
    mb = dense_mb(ham, cfg.constraint_sign)
    phase = cfg.J_tau_M if cfg.scheme == "lumped" else cfg.J_tau_M / cfg.N_S
    kick = sla.expm(-1j * phase * mb)
    for l in range(cfg.N):
        t = l / cfg.N
        psi = sla.expm(-1j * cfg.tau_sq * dense_sq(sched.A(t), sched.B(t), ham.h_fields)) @ psi
        if cfg.scheme == "per_step" or (l + 1) % cfg.N_S == 0:
            psi = kick @ psi
    return psi


@pytest.fixture(scope="module")
def six():
    p = random_problem(4, 1)
    lay, ham = encode(p)
    return p, lay, ham


# --- schedules ------------------------------------------------------------------


@pytest.mark.parametrize("kind", ["I", "II", "III"])
def test_schedule_endpoints(kind):
    s = ScheduleSpec(kind)
    assert s.A(0.0) == pytest.approx(1.0, abs=1e-15)
    assert s.A(1.0) == pytest.approx(0.0, abs=1e-15)
    assert s.B(1.0) == 1.0 - s.A(1.0)
    t = np.linspace(0, 1, 101)
    assert np.all(np.diff(s.A(t)) < 0)


def test_final_generator_is_pure_field():
    h = np.array([0.3, -0.7])
    u = single_qubit_unitaries(ScheduleSpec("III").A(1.0), ScheduleSpec("III").B(1.0), h, 0.4)[0]
    for q in range(2):
        assert u[q][0, 1] == 0 and u[q][1, 0] == 0


def test_schedule_ii_front_loads_the_field():
    t = np.linspace(0.05, 0.95, 19)
    assert np.all(ScheduleSpec("II").B(t) > ScheduleSpec("I").B(t))


def test_unknown_schedule():
    with pytest.raises(ValueError):
        ScheduleSpec("IV")


# --- kernels --------------------------------------------------------------------


def test_initial_state_is_transverse_ground_state():
    n = 5
    hx = sum(kron_string({q: "X"}, n) for q in range(n))
    psi = initial_state(n)
    np.testing.assert_allclose(hx @ psi, -n * psi, atol=1e-12)


@given(st.floats(0, 1), st.floats(0, 1), st.lists(st.floats(-1, 1), min_size=1, max_size=4), st.floats(0.001, 1.0))
def test_single_qubit_factor_matches_expm(A, B, h, tau):
    h = np.array(h)
    u = single_qubit_unitaries(A, B, h, tau)[0]
    for q, hq in enumerate(h):
        np.testing.assert_allclose(u[q], sla.expm(-1j * tau * (A * kron_string({0: "X"}, 1) + B * hq * kron_string({0: "Z"}, 1))), atol=1e-12)


def test_step_unit_matches_dense(six):
    _, _, ham = six
    cfg = RunConfig(N=100, N_S=10, schedule="I")
    psi = initial_state(6)
    out = step_unit(psi, 0.3, cfg, ham)
    s = ScheduleSpec("I")
    ref = sla.expm(-1j * cfg.tau_mb * dense_mb(ham)) @ sla.expm(-1j * cfg.tau_sq * dense_sq(s.A(0.3), s.B(0.3), ham.h_fields)) @ psi
    np.testing.assert_allclose(out, ref, atol=1e-12)


@pytest.mark.parametrize("scheme", ["lumped", "per_step"])
@pytest.mark.parametrize("schedule", ["I", "III"])
def test_simulate_matches_dense_oracle(six, scheme, schedule):
    _, _, ham = six
    cfg = RunConfig(N=40, N_S=8, tau_sq=0.05, J_tau_M=0.9, schedule=schedule, scheme=scheme)
    traj = simulate(cfg, ham, [0])
    ref = oracle_run(cfg, ham)
    # the oracle's eigenvector may differ by a global phase
    phase = np.vdot(ref, traj.final_state)
    assert abs(abs(phase) - 1) < 1e-10
    np.testing.assert_allclose(traj.final_state, phase * ref, atol=1e-10)


def test_kick_commutation_is_order_free(six):
    _, lay, ham = six
    terms = list(ham.constraint_sum.terms)
    random.Random(0).shuffle(terms)
    shuffled = AnnealHamiltonian(ham.h_fields, PauliSum(tuple(reversed(terms)), ham.n_physical))
    assert many_body_phases(ham, 0.7).tobytes() == many_body_phases(shuffled, 0.7).tobytes()


def test_quarter_period_kick_is_a_z_string(six):
    """At phase pi/2 the kick is a global phase times the product of all plaquettes."""
    _, lay, ham = six
    kick = many_body_phases(ham, math.pi / 2)
    odd = np.zeros(ham.n_physical, dtype=int)
    for plaq in lay.plaquettes:
        odd[list(plaq)] ^= 1
    string = PauliSum((PauliTerm({q: "Z" for q in np.flatnonzero(odd)}),), ham.n_physical)
    ratio = kick / diagonal(string)
    np.testing.assert_allclose(ratio, ratio[0], atol=1e-12)


def test_constraint_sign_flag(six):
    _, _, ham = six
    np.testing.assert_array_equal(constraint_diagonal(ham, -1), -constraint_diagonal(ham, 1))
    # +1: the all-zero (all-even) state is lowest
    assert constraint_diagonal(ham, 1)[0] == constraint_diagonal(ham, 1).min()


# --- Chebyshev ------------------------------------------------------------------


def test_chebyshev_zero_time():
    psi = initial_state(3)
    out = chebyshev_propagate(psi, lambda v: v, 0.0)
    np.testing.assert_array_equal(out, psi)


def test_chebyshev_single_qubit_rotation():
    x = kron_string({0: "X"}, 1)
    psi = np.array([1, 0], dtype=complex)
    out = chebyshev_propagate(psi, lambda v: x @ v, math.pi / 2, eps=1e-14)
    np.testing.assert_allclose(out, -1j * (x @ psi), atol=1e-13)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_chebyshev_random_hermitian(seed):
    rng = np.random.default_rng(seed)
    m = rng.normal(size=(64, 64)) + 1j * rng.normal(size=(64, 64))
    h = (m + m.conj().T) / 2
    psi = rng.normal(size=64) + 1j * rng.normal(size=64)
    psi /= np.linalg.norm(psi)
    out = chebyshev_propagate(psi, lambda v: h @ v, 1.0, eps=1e-10)
    np.testing.assert_allclose(out, sla.expm(-1j * h) @ psi, atol=1e-8)
    assert abs(np.linalg.norm(out) - 1) < 10 * 1e-10


def test_chebyshev_with_shifted_bounds():
    h = np.diag([2.0, 3.0, 5.0]).astype(complex)
    psi = np.ones(3, dtype=complex) / math.sqrt(3)
    out = chebyshev_propagate(psi, lambda v: h @ v, 0.8, bounds=(2.0, 5.0))
    np.testing.assert_allclose(out, np.exp(-0.8j * np.diag(h)) * psi, atol=1e-11)


def test_spectral_estimate_failure():
    y = kron_string({0: "Y"}, 1)  # eigenvalues +-1, equal modulus
    with pytest.raises(SpectralBoundError):
        estimate_spectral_radius(lambda v: np.diag([1.0, 0.999999]) @ v, 2, tol=1e-16, maxiter=3)
    assert estimate_spectral_radius(lambda v: y @ v, 2) == pytest.approx(1.0)


def test_single_qubit_matvec_radius():
    h = np.array([0.2, -0.5, 0.9])
    op, radius = single_qubit_matvec(0.4, 0.6, h)
    dense = dense_sq(0.4, 0.6, h)
    np.testing.assert_allclose(op(np.eye(8)[:, 3] + 0j), dense[:, 3], atol=1e-14)
    assert radius == pytest.approx(np.abs(np.linalg.eigvalsh(dense)).max())


def test_backends_agree(six):
    p, lay, ham = six
    a = run_lumped(RunConfig(N=500, N_S=50, schedule="II"), ham, p, lay)
    b = run_lumped(RunConfig(N=500, N_S=50, schedule="II", backend="chebyshev"), ham, p, lay)
    assert abs(a.final_success - b.final_success) < 1e-6


# --- trajectories ---------------------------------------------------------------


def test_norm_conserved(six):
    p, lay, ham = six
    traj = run_lumped(RunConfig(N=10_000, N_S=50), ham, p, lay)
    assert traj.norm_error.max() < 1e-9
    assert len(traj.t) == 200 and traj.t[-1] == 1.0


def test_success_probability_definition(six):
    p, lay, ham = six
    psi = np.zeros(2**6, dtype=complex)
    (target,) = ground_bitstrings(p, lay)
    psi[bits_to_index(target)] = 1
    assert success_probability(psi, p, lay) == 1.0
    assert success_probability(initial_state(6), p, lay) == pytest.approx(1 / 64)


def test_csv_round_trip_and_determinism(six):
    p, lay, ham = six
    cfg = RunConfig(N=1000, N_S=50, seed=1)
    text = trajectory_csv(run_lumped(cfg, ham, p, lay))
    assert text == trajectory_csv(run_lumped(cfg, ham, p, lay))
    rows = read_trajectory_csv(text)
    assert len(rows) == 20 and rows[-1]["t"] == 1.0 and rows[0]["schedule"] == "II"
    with pytest.raises(ValueError):
        read_trajectory_csv(text.replace("trajectory/1", "trajectory/9"))


def test_metadata_lists_conventions(six):
    p, lay, ham = six
    meta = metadata_text(run_lumped(RunConfig(N=100, N_S=50), ham, p, lay))
    keys = dict(line.split("=", 1) for line in meta.splitlines())
    for k in ("initial_state", "constraint_sign", "instance_hash", "cfg.J_tau_M", "final_success"):
        assert k in keys


@pytest.mark.parametrize(
    "kw", [dict(N=101, N_S=50), dict(N=0), dict(schedule="X"), dict(backend="gpu"), dict(constraint_sign=0), dict(tau_sq=-1.0)]
)
def test_run_config_validation(kw):
    with pytest.raises(ValueError):
        RunConfig(**kw)
