import json
import math

import numpy as np
import pytest

from conftest import dense
from ftlab.fidelity import (ALL_STATES, BELL_STATES, CNOT, X_STATES, Z_STATES, ChoiMatrix, FidelityError,
                            InfeasibleConstraints, POVMSet, apply_via_choi, avg_fidelity, bell_fidelity,
                            bell_fidelity_from_parities, bell_signs, choi_of_kraus, choi_of_unitary,
                            constraints_from_data, correlator_from_bits, depolarized_unitary_kraus, exact_data,
                            load_data, make_constraint, measured_operator, min_widening, noisy_unitary_channel,
                            per_basis_data, process_fidelity, product_ket, projector, random_channel, sdp_bounds,
                            spam_corrected_constraints, state_fidelity_from_counts)

pytestmark = pytest.mark.filterwarnings("ignore:Solution may be inaccurate")


def _data(ch, eps):
    return {k: (f, eps) for k, (f, _) in exact_data(ch).items()}


# formulas -------------------------------------------------------------------


def test_avg_fidelity():
    assert avg_fidelity(1.0, 4) == 1.0
    assert avg_fidelity(0.0, 4) == pytest.approx(0.2)


@pytest.mark.parametrize("p", [0.0, 0.01, 0.2, 1.0])
def test_depolarized_cnot_process_fidelity(p):
    ch = choi_of_kraus(depolarized_unitary_kraus(CNOT, p))
    ch.validate()
    assert process_fidelity(ch, CNOT) == pytest.approx(1 - 15 * p / 16)


def test_choi_action_matches_unitary(rng):
    ch = choi_of_unitary(CNOT)
    for _ in range(5):
        v = rng.normal(size=4) + 1j * rng.normal(size=4)
        v /= np.linalg.norm(v)
        rho = projector(v)
        assert np.allclose(apply_via_choi(ch, rho), CNOT @ rho @ CNOT.conj().T)


def test_random_channel_is_cptp(rng):
    random_channel(4, rng).validate()
    noisy_unitary_channel(CNOT, rng, 0.1).validate()


def test_choi_validation_errors():
    with pytest.raises(FidelityError):
        ChoiMatrix(2, np.eye(4) / 2).validate()  # trace 2
    with pytest.raises(FidelityError):
        choi_of_unitary(np.ones((2, 2)))


@pytest.mark.parametrize("label", BELL_STATES)
def test_bell_signs_match_dense_correlators(label):
    out = CNOT @ product_ket(label)
    corr = tuple(round(float(np.real(np.vdot(out, dense(pp) @ out)))) for pp in ("XX", "YY", "ZZ"))
    assert corr == bell_signs(label)


def test_bell_fidelity_equals_overlap(rng):
    a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    rho = a @ a.conj().T
    rho /= np.trace(rho)
    for label in BELL_STATES:
        tgt = CNOT @ product_ket(label)
        ex = [float(np.real(np.trace(rho @ dense(pp)))) for pp in ("XX", "YY", "ZZ")]
        assert bell_fidelity(*ex, bell_signs(label)) == pytest.approx(float(np.real(np.vdot(tgt, rho @ tgt))))


def test_bell_fidelity_errors():
    with pytest.raises(FidelityError):
        bell_fidelity(1.2, 0, 0)
    with pytest.raises(FidelityError):
        bell_signs("00")


def test_counts_and_correlators():
    f, s = state_fidelity_from_counts([(0, 1), (0, 1), (1, 1), (0, 1, 0)], (0, 1))
    assert f == 0.75 and s == pytest.approx(math.sqrt(0.75 * 0.25 / 4))
    assert correlator_from_bits([0, 0, 1, 0])[0] == 0.5
    f, _ = bell_fidelity_from_parities("+0", [0] * 4, [1] * 4, [0, 0, 0, 1])
    assert f == pytest.approx(0.25 * (1 + 1 + 1 + 0.5))
    with pytest.raises(FidelityError):
        state_fidelity_from_counts([], (0,))
    with pytest.raises(FidelityError):
        state_fidelity_from_counts([(0,)], (0, 1))


# POVMs ------------------------------------------------------------------------


def test_povm_elements():
    p = POVMSet((0.01, 0.02), (0.03, 0.04))
    p.check()
    e0 = p.element("0")
    assert np.allclose(e0, np.diag([0.99, 0.02]))
    assert np.real(product_ket("-").conj() @ p.element("+") @ product_ket("-")) == pytest.approx(0.04)
    with pytest.raises(FidelityError):
        p.element("y")
    with pytest.raises(FidelityError):
        POVMSet((1.5, 0.0)).element("0")


def test_ideal_povm_reduces_to_projectors():
    ideal = POVMSet()
    for s in ALL_STATES:
        assert np.allclose(measured_operator(s, CNOT, ideal), measured_operator(s, CNOT))


def test_symmetric_povm():
    p = POVMSet.symmetric(0.9970, 0.9985)
    assert p.x_err == pytest.approx((3e-3, 3e-3)) and p.z_err == pytest.approx((1.5e-3, 1.5e-3))


def test_spam_correction_raises_lower_bound():
    data = per_basis_data((0.985, 1e-3), (0.99, 1e-3), (0.98, 1e-3))
    raw = sdp_bounds(constraints_from_data(data))
    cor = sdp_bounds(spam_corrected_constraints(POVMSet.symmetric(0.995, 0.995), data))
    assert cor.lo > raw.lo


# SDP bounds -------------------------------------------------------------------


def test_perfect_data_gives_unit_interval():
    b = sdp_bounds(constraints_from_data({s: (1.0, 0.0) for s in ALL_STATES}))
    assert b.lo == pytest.approx(1.0, abs=1e-6) and b.hi == pytest.approx(1.0, abs=1e-6)


def test_no_constraints_give_trivial_bounds():
    b = sdp_bounds([])
    assert b.lo == pytest.approx(0.2, abs=1e-6) and b.hi == pytest.approx(1.0, abs=1e-6)


def test_soundness_on_random_channels(rng):
    """True average fidelity lies in the interval for channels near CNOT."""
    for i in range(5):
        ch = noisy_unitary_channel(CNOT, rng, rng.uniform(0.005, 0.1))
        true = avg_fidelity(process_fidelity(ch, CNOT), 4)
        b = sdp_bounds(constraints_from_data(_data(ch, 1e-4)))
        assert b.lo - 1e-6 <= true <= b.hi + 1e-6, i
        assert max(v["duality_gap"] for v in b.diagnostics.values()) <= 1e-7
        assert max(v["residual"] for v in b.diagnostics.values()) <= 1e-7


def test_monotone_under_widening(rng):
    ch = noisy_unitary_channel(CNOT, rng, 0.05)
    narrow = sdp_bounds(constraints_from_data(_data(ch, 1e-3)))
    wide = sdp_bounds(constraints_from_data(_data(ch, 1e-2)))
    assert wide.lo <= narrow.lo + 1e-6 and wide.hi >= narrow.hi - 1e-6


def test_subset_of_states(rng):
    ch = choi_of_kraus(depolarized_unitary_kraus(CNOT, 0.04))
    data = {k: v for k, v in _data(ch, 1e-4).items() if k in X_STATES + Z_STATES}
    b = sdp_bounds(constraints_from_data(data))
    assert b.lo <= avg_fidelity(1 - 15 * 0.04 / 16, 4) <= b.hi


def test_infeasible_data_reports_widening():
    data = per_basis_data((1.0, 0.0), (1.0, 0.0), (0.9, 0.0))
    cons = constraints_from_data(data)
    with pytest.raises(InfeasibleConstraints) as info:
        sdp_bounds(cons)
    s = info.value.violation
    assert s > 1e-3
    assert min_widening(cons, 4) == pytest.approx(s, rel=1e-4)
    wider = per_basis_data((1.0, s + 1e-5), (1.0, s + 1e-5), (0.9, s + 1e-5))
    b = sdp_bounds(constraints_from_data(wider))
    assert b.lo <= b.hi


def test_constraint_interval_is_clipped():
    c = make_constraint("00", 0.999, 0.01)
    assert (c.lo, c.hi) == pytest.approx((0.989, 1.0))


def test_bounds_json():
    b = sdp_bounds(constraints_from_data({s: (1.0, 0.0) for s in ALL_STATES}))
    d = json.loads(b.dumps())
    assert set(d) >= {"lo", "hi", "process_lo", "process_hi", "diagnostics"}


# data files ---------------------------------------------------------------------


def test_load_data_formats():
    data, povm = load_data(json.dumps({"per_basis": {"X": [0.9, 0.01], "Z": [0.95, 0.01], "Bell": [0.8, 0.02]}}))
    assert data["+-"] == (0.9, 0.01) and data["11"] == (0.95, 0.01) and data["-1"] == (0.8, 0.02)
    assert povm is None
    data, povm = load_data(json.dumps({"states": {"00": [1, 0]}, "povm": {"z_err": [0.1, 0.1], "x_err": [0, 0]}}))
    assert data == {"00": (1.0, 0.0)} and povm.z_err == (0.1, 0.1)


@pytest.mark.parametrize("text", ['{"foo": 1}', '{"states": {"0+": [1, 0]}}'])
def test_load_data_errors(text):
    with pytest.raises(FidelityError):
        load_data(text)


def test_state_tables_are_disjoint():
    assert len(set(ALL_STATES)) == 12 and set(Z_STATES).isdisjoint(X_STATES)
