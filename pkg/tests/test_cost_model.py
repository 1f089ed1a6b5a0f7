import math
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from lhzpulse.cost_model import (
    GateCost,
    PhysicalParams,
    cnot_baseline,
    cnot_reconciliation,
    cost_report,
    coupling_ratio,
    parse_energy,
    per_cnot_cost,
    pulse_cost,
    report_csv,
    rotation_ratio,
    wall_clock,
)

H_EV_S = 4.135667696e-15  # exact SI h expressed in eV s
HBAR_EV_S = H_EV_S / (2 * math.pi)


def test_cnot_baselines():
    assert cnot_baseline("ising").as_tuple() == (25, 6)
    assert cnot_baseline("xy").as_tuple() == (25, 12)
    assert per_cnot_cost("ising").as_tuple() == (4, 1)
    assert per_cnot_cost("xy").as_tuple() == (4, 2)
    with pytest.raises(ValueError):
        cnot_baseline("heisenberg")


def test_reconciliation_counts_the_central_rotation():
    for model in ("ising", "xy"):
        rec = cnot_reconciliation(model)
        assert rec["six_cnots"].n_rot == 24
        assert (rec["extra_rot"], rec["extra_J"]) == (1, 0)


@pytest.mark.parametrize("nb, expected", [(0, (5, 2)), (1, (5, 2)), (2, (8, 4)), (3, (11, 6)), (10, (32, 20))])
def test_pulse_cost(nb, expected):
    assert pulse_cost(nb).as_tuple() == expected


def test_pulse_cost_rejects_negative():
    with pytest.raises(ValueError):
        pulse_cost(-1)


def test_ratios_are_exact():
    assert rotation_ratio("ising") == Fraction(1, 5)
    assert coupling_ratio("xy") == Fraction(1, 6)
    assert coupling_ratio("ising") == Fraction(1, 3)


@given(st.floats(1e-3, 10), st.floats(1e-3, 10))
def test_single_plaquette_always_faster(tau_rot, tau_j):
    assert pulse_cost(0).time(tau_rot, tau_j) < cnot_baseline("ising").time(tau_rot, tau_j)


def test_gate_cost_validation():
    with pytest.raises(ValueError):
        GateCost(-1, 0)
    with pytest.raises(TypeError):
        GateCost(1.5, 0)
    assert (2 * GateCost(1, Fraction(1, 2))).as_tuple() == (2, 1)


@pytest.mark.parametrize("text, ev", [("100ueV", 1e-4), ("100μeV", 1e-4), ("10.34meV", 10.34e-3), ("2eV", 2.0), ("0.5", 0.5)])
def test_parse_energy(text, ev):
    assert parse_energy(text) == pytest.approx(ev)


@pytest.mark.parametrize("text", ["fast", "10 kelvin", ""])
def test_parse_energy_rejects(text):
    with pytest.raises(ValueError):
        parse_energy(text)


def test_tau_m_at_100_uev():
    t = wall_clock(PhysicalParams(J=1e-4, J_tau_M=11 * math.pi / 2), "h")
    assert t["tau_M"] == pytest.approx(11 * math.pi / 2 * H_EV_S / 1e-4, rel=1e-9)
    assert t["tau_M"] == pytest.approx(7.15e-10, rel=0.01)


def test_tau_j_at_10_meV():
    t = wall_clock(PhysicalParams(J=10.34e-3), "h")
    assert t["tau_J"] == pytest.approx(0.304e-12, rel=0.05)


def test_hbar_convention_is_two_pi_smaller():
    p = PhysicalParams(J=1e-4)
    h, hb = wall_clock(p, "h"), wall_clock(p, "hbar")
    for k in h:
        assert h[k] / hb[k] == pytest.approx(2 * math.pi)
    assert hb["tau_J"] == pytest.approx(math.pi / 4 * HBAR_EV_S / 1e-4)


@given(st.floats(1e-7, 1e-1), st.floats(1.1, 50))
def test_homogeneous_in_j(J, k):
    a = wall_clock(PhysicalParams(J=J))
    b = wall_clock(PhysicalParams(J=k * J))
    for key in a:
        assert b[key] == pytest.approx(a[key] / k, rel=1e-12)


def test_total_is_n_times_lump():
    p = PhysicalParams(J=1e-4, N=1000, N_S=10)
    t = wall_clock(p)
    assert t["total"] == pytest.approx(1000 * (t["tau_S"] + t["tau_M"]))
    assert t["tau_S"] == pytest.approx(10 * math.pi / 200 * H_EV_S / 1e-4)


@pytest.mark.parametrize("J", [0.0, -1.0, float("inf")])
def test_physical_params_validation(J):
    with pytest.raises(ValueError):
        PhysicalParams(J=J)


def test_report_flags_total_discrepancy():
    rep = cost_report(PhysicalParams(J=1e-4))
    assert rep["reference_total_flag"] == "DIVERGENT"
    assert rep["reference_total_recomputed"] == pytest.approx(1e5 * (4.14e-8 + 7.15e-10))
    assert rep["reference_total"] == 278e-6
    assert "tau_M[h]" in rep and "tau_M[hbar]" in rep


def test_report_csv_has_schema():
    text = report_csv(cost_report(PhysicalParams(J=1e-4)))
    head, cols, vals = text.splitlines()
    assert head == "# schema=lhzpulse.cost/1"
    assert len(cols.split(",")) == len(vals.split(","))
