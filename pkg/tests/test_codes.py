import itertools

import numpy as np
import pytest

from conftest import dense, embed_gate
from ftlab import color_code, five_qubit
from ftlab.circuit import CircuitBuilder, compose, fault_locations
from ftlab.codes import ROTATION_U, code_definition, equivalent_min_weight
from ftlab.decoding import propagate_fault
from ftlab.experiments import (CNOT_MAP, LABELS, ExperimentSpec, UnknownExperiment, adaptive_measure_out_5q,
                               build_experiment, expected_outputs, ft_init_circuit, synthesize_encoder,
                               transversal_1q, transversal_cnot_steane, variants, verify_logical_action)
from ftlab.ftcheck import logical_judge, reference_outputs, sweep
from ftlab.noise import preset
from ftlab.pauli import CliffordMap, PauliString, commutation_syndrome
from ftlab.qec import qec_cycle_circuit, syndrome_extraction_circuit
from ftlab.runs import run_family
from ftlab.sim import enumerate_branches, sample_shots, stabilizer_executor
from ftlab.tableau import StabilizerTableau

P = PauliString.from_str


def _final_tableau(c):
    t = StabilizerTableau(c.n_qubits)
    for _, _, op in c.instructions():
        if op.is_gate:
            t.apply(op.kind, op.qubits)
    return t


# code definitions ------------------------------------------------------------


def test_five_qubit_definition():
    code = code_definition("five_qubit")
    assert [str(s) for s in code.stabilizers] == ["+XZZXI", "+IXZZX", "+XIXZZ", "+ZXIXZ"]
    assert str(code.logical("X")) == "-YIXIY"
    assert str(code.logical("Z")) == "-XIZIX"


def test_steane_z_generators():
    code = code_definition("steane")
    zs = {str(s) for s in code.stabilizers if s.x == 0}
    assert zs == {"+ZZZZIII", "+IZZIZZI", "+IIZZIZZ"}


def test_rotated_code_is_conjugated():
    u = CliffordMap.from_gates(5, ROTATION_U)
    rot = code_definition("five_qubit_rotated")
    base = code_definition("five_qubit")
    assert list(rot.stabilizers) == [u.conjugate(s) for s in base.stabilizers]


def test_unknown_code():
    with pytest.raises(KeyError):
        code_definition("toric")


def test_perfect_code_bijection():
    code = code_definition("five_qubit")
    syn = {commutation_syndrome(PauliString.single(5, q, l), code.stabilizers) for q in range(5) for l in "XYZ"}
    assert len(syn) == 15 and (0, 0, 0, 0) not in syn


@pytest.mark.parametrize("name", ["five_qubit", "steane"])
def test_destabilizer_pairing(name):
    code = code_definition(name)
    for i, d in enumerate(code.destabilizers):
        for j, s in enumerate(code.stabilizers):
            assert d.commutes(s) == (i != j)


# encoders and FT preparation --------------------------------------------------


@pytest.mark.parametrize("name", ["five_qubit", "steane"])
def test_encoder_output_is_stabilized(name):
    code = code_definition(name)
    t = _final_tableau(synthesize_encoder(name))
    for s in code.stabilizers:
        assert t.expectation(s) == 1


def test_encoder_logical_states():
    t5 = _final_tableau(synthesize_encoder("five_qubit"))
    assert t5.expectation(code_definition("five_qubit").logical("X")) == -1
    t7 = _final_tableau(synthesize_encoder("steane"))
    assert t7.expectation(code_definition("steane").logical("Z")) == 1


def test_encoder_cnot_counts():
    assert synthesize_encoder("five_qubit").count("CNOT") == 5
    assert synthesize_encoder("steane").count("CNOT") == color_code.min_cnot_encoder() == 9


@pytest.mark.parametrize("name", ["five_qubit", "steane"])
def test_ft_init_noiseless_accepts(name):
    bs = enumerate_branches(ft_init_circuit(name))
    assert all(b.accepted for b in bs)


@pytest.mark.parametrize("name,noise,target", [("five_qubit", "H1-2", 0.909), ("steane", "H1-1", 0.9834)])
def test_ft_init_acceptance_rate(name, noise, target):
    ex = stabilizer_executor(ft_init_circuit(name), preset(noise))
    shots = sample_shots(ex, 5000, 17)
    rate = sum(s.accepted for s in shots) / len(shots)
    assert abs(rate - target) < 0.03


# round robin, joint code and transversal gates --------------------------------


def test_round_robin_realizes_cnot():
    c = compose(five_qubit.round_robin_piece(1), five_qubit.round_robin_piece(2))
    assert verify_logical_action(c, CNOT_MAP, "five_qubit_rotated")


def test_identity_is_not_cnot():
    assert not verify_logical_action(CircuitBuilder(14).build())


def test_transversal_steane_cnot():
    c = transversal_cnot_steane()
    assert c.count("CNOT") == 7
    assert verify_logical_action(c)


def test_piece_sizes():
    assert five_qubit.round_robin_piece(1).count("CNOT") == 6
    assert five_qubit.round_robin_piece(2).count("CNOT") == 3


def test_joint_generators():
    gens = five_qubit.derive_joint_stabilizers()
    assert len(gens) == 8
    assert all(a.commutes(b) for a, b in itertools.combinations(gens, 2))
    assert {g.weight for g in gens} == {4, 6}


def test_joint_generator_six_by_dense_conjugation():
    """S_t,6 from the symbolic derivation equals R U S U^dag R^dag computed
    with 1024 x 1024 matrices, with S the second generator of block 2."""
    n = 10
    u = np.eye(1 << n, dtype=complex)
    for g, qs in ROTATION_U:
        u = embed_gate(g, (qs[0] + 5,), n) @ u
    for g, qs in five_qubit.round_robin_gates(1):
        u = embed_gate(g, qs, n) @ u
    s = "IIIII" + str(code_definition("five_qubit").stabilizers[1])[1:]
    img = u @ dense(s) @ u.conj().T
    assert np.allclose(img, dense(str(five_qubit.derive_joint_stabilizers()[5])))


@pytest.mark.parametrize("gate", ["H", "S", "X", "Z"])
def test_transversal_single_qubit_gates_preserve_steane_code(gate):
    code = code_definition("steane")
    m = CliffordMap.from_gates(7, [(op.kind, op.qubits) for _, _, op in transversal_1q("steane", gate).instructions()])
    logicals = [code.logical("X"), code.logical("Z")]
    for s in code.stabilizers:
        img = m.conjugate(s)
        assert all(img.commutes(t) for t in list(code.stabilizers) + logicals)


# syndrome extraction and QEC cycles ------------------------------------------


def test_flag_catches_hook_errors():
    """Every single ancilla fault that leaves a data error of weight >= 2
    raises the flag, for each weight-4 Steane check."""
    code = code_definition("steane")
    _, orders = color_code.flag_tables()
    for g, order in zip(code.stabilizers, orders):
        c = syndrome_extraction_circuit([g], flagged=True, orders=[order])
        stabs = list(code.stabilizers)
        for loc in [l for l in fault_locations(c) if 7 in l.qubits]:
            for f in loc.faults():
                prop = propagate_fault(c, loc, f)
                if equivalent_min_weight(prop.data_error(range(7)), stabs) >= 2:
                    assert prop.flags == (1,), (g, loc, f)


def test_flagged_round_without_fault_has_no_flags():
    code = code_definition("steane")
    _, orders = color_code.flag_tables()
    c = compose(synthesize_encoder("steane"),
                syndrome_extraction_circuit(code.stabilizers, True, orders), range(7), range(9))
    ext_flags = syndrome_extraction_circuit(code.stabilizers, True, orders).metadata["flag_cbits"]
    for br in enumerate_branches(c):
        assert all(br.cbits[k] == 0 for k in ext_flags)


@pytest.mark.parametrize("ft", [True, False])
def test_qec_cycle_corrects_single_data_errors(ft):
    code = code_definition("steane")
    table, orders = color_code.flag_tables()
    cyc = qec_cycle_circuit(code.stabilizers, ft, table if ft else color_code.base_table(), orders)
    enc = synthesize_encoder("steane")
    for q in range(7):
        for letter in "XYZ":
            b = CircuitBuilder(9)
            b.extend(enc, range(7))
            b.op("pauli", q, label=letter)
            b.extend(cyc, range(9))
            c = b.build()
            err = PauliString.single(9, q, letter)
            for br in enumerate_branches(c):
                resid = (err * br.frame).restrict(list(range(7)))
                assert commutation_syndrome(resid, code.stabilizers) == (0,) * 6
                assert resid.commutes(code.logical("Z")) and resid.commutes(code.logical("X"))


def test_noiseless_ft_cycle_skips_second_round():
    code = code_definition("steane")
    table, orders = color_code.flag_tables()
    c = compose(synthesize_encoder("steane"), qec_cycle_circuit(code.stabilizers, True, table, orders),
                range(7), range(9))
    n_meas_flagged = 6 + 6
    for br in enumerate_branches(c):
        assert len(br.branch) <= n_meas_flagged


# measure-out and experiments ----------------------------------------------------


def test_measure_out_noiseless_plus():
    b = CircuitBuilder(7)
    five_qubit.append_encoder(b, range(5), set())
    mo = adaptive_measure_out_5q()
    c = compose(b.build(), mo, range(7), range(7))
    for br in enumerate_branches(c):
        assert br.logical == (1,)  # the encoder makes the -1 eigenstate of X


def test_measure_out_is_fault_tolerant():
    b = CircuitBuilder(7)
    five_qubit.append_encoder(b, range(5), set())
    enc = b.build()
    c = compose(enc, adaptive_measure_out_5q(), range(7), range(7))
    skip = len(fault_locations(enc))
    rep = sweep(c, logical_judge(reference_outputs(c)), locations=fault_locations(c)[skip:])
    assert rep.total_faults > 0 and rep.passed


def test_unknown_label():
    with pytest.raises(UnknownExperiment):
        ExperimentSpec("CNOT9x")


def test_variant_counts():
    assert len(variants("CNOT1c")) == 20
    assert len(variants("SPAM1f")) == 8


def test_bell_expectations():
    spec = {b: ExperimentSpec("CNOT1c", "Bell", 0, b) for b in "XYZ"}
    parity = {b: expected_outputs(s)[2] for b, s in spec.items()}
    assert parity == {"X": 0, "Y": 1, "Z": 0}  # <XX> = 1, <YY> = -1, <ZZ> = 1


@pytest.mark.parametrize("label", LABELS)
def test_noiseless_experiments_are_perfect(label):
    for s in variants(label):
        exp = expected_outputs(s)
        assert reference_outputs(build_experiment(s)) == exp, s.name()


def test_experiment_composition():
    c1 = build_experiment(ExperimentSpec("CNOT1f", "X", 0))
    assert c1.count("CNOT") >= 9 + 10  # encoders plus round robin
    c3 = build_experiment(ExperimentSpec("CNOT3c", "Z", 0))
    assert c3.n_qubits == 16


def test_qec2c_z_not_worse_than_qec1c():
    m = preset("H1-1")
    ft = run_family("QEC2c", "Z", m, 1500, 4)
    nonft = run_family("QEC1c", "Z", m, 1500, 4)
    assert ft.fidelity >= nonft.fidelity - 3 * np.hypot(ft.stderr, nonft.stderr)
