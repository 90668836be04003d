import pytest

from ftlab.circuit import (Circuit, CircuitBuilder, CircuitError, Condition, DecoderResult, Instruction,
                           compose, fault_locations, from_json, from_text, instrument, to_json, to_text,
                           validate)
from ftlab.decoding import propagate_fault
from ftlab.experiments import ExperimentSpec, build_experiment
from ftlab.five_qubit import derive_joint_stabilizers, joint_logicals, round_robin_gates, round_robin_piece
from ftlab.pauli import CliffordMap
from ftlab.synthesis import state_preparation_gates
from ftlab.pauli import PauliString
from ftlab.qec import syndrome_extraction_circuit
from ftlab.sim import enumerate_branches

# frozen from the enumerator and cross-checked by a direct count of gates,
# preparations and measurements
CNOT3F_X0_LOCATIONS = 607


def _bell():
    b = CircuitBuilder(2)
    b.op("prep0", 0).op("prep0", 1).gate("H", 0).gate("CNOT", 0, 1)
    m0 = b.measure(0)
    m1 = b.measure(1)
    return b.build(label="bell"), (m0, m1)


def test_single_cnot_has_fifteen_faults():
    b = CircuitBuilder(2)
    b.gate("CNOT", 0, 1)
    locs = fault_locations(b.build())
    assert len(locs) == 1 and locs[0].when == "after" and len(locs[0].faults()) == 15


def test_empty_circuit_has_no_locations():
    assert fault_locations(CircuitBuilder(3).build()) == []


def test_location_count_golden():
    c = build_experiment(ExperimentSpec("CNOT3f", "X", 0))
    direct = sum(1 for _, _, op in c.instructions()
                 if isinstance(op, Instruction) and (op.is_gate or op.kind in ("prep0", "reset", "measure")))
    assert len(fault_locations(c)) == direct == CNOT3F_X0_LOCATIONS


def test_locations_are_stable():
    c = build_experiment(ExperimentSpec("SPAM2f", "Z", 1))
    assert fault_locations(c) == fault_locations(build_experiment(ExperimentSpec("SPAM2f", "Z", 1)))


def test_instrument_identity_is_noop():
    c, _ = _bell()
    for loc in fault_locations(c):
        assert instrument(c, loc, PauliString.identity(len(loc.qubits))) == c


def test_instrument_out_of_range():
    c, _ = _bell()
    loc = fault_locations(c)[0]
    with pytest.raises(CircuitError):
        instrument(c, type(loc)(5, 0, "after", loc.qubits), PauliString.from_str("X"))
    with pytest.raises(CircuitError):
        instrument(c, loc, PauliString.from_str("XX"))


def test_instrumented_fault_flips_outcome():
    c, (m0, m1) = _bell()
    loc = next(l for l in fault_locations(c) if l.qubits == (0, 1))
    faulty = instrument(c, loc, PauliString.from_str("IX"))
    for br in enumerate_branches(faulty):
        assert br.cbits[m0] != br.cbits[m1]


def test_hook_fault_matches_propagation():
    """X after the first piece-1 CNOT: the simulated syndrome change equals the
    one obtained by symbolic propagation, branch by branch."""
    piece = round_robin_piece(1)
    back = CliffordMap.from_gates(10, round_robin_gates(1)).inverse()
    post = list(derive_joint_stabilizers()) + [joint_logicals()["ZI"], joint_logicals()["IZ"]]
    prep = CircuitBuilder(10)
    prep.gates(state_preparation_gates([back.conjugate(g) for g in post]))
    ext = syndrome_extraction_circuit(derive_joint_stabilizers(), flagged=False)
    c = compose(compose(prep.build(), piece), ext, range(10), range(11))
    c = c.with_metadata(syndrome_cbits=ext.metadata["syndrome_cbits"])
    first_piece_gate = sum(1 for _, _, op in prep.build().instructions())
    loc = fault_locations(c)[first_piece_gate]
    assert loc.qubits == round_robin_gates(1)[0][1]
    fault = PauliString.from_str("XI")
    prop = propagate_fault(c, loc, fault)
    assert any(prop.syndrome)
    cb = ext.metadata["syndrome_cbits"]
    clean = {br.branch: br for br in enumerate_branches(c)}
    faulty = list(enumerate_branches(c, fault=(loc, fault)))
    assert faulty
    for br in faulty:
        ref = clean[br.branch]
        assert tuple(br.cbits[k] ^ ref.cbits[k] for k in cb) == prop.syndrome


def test_compose_empty_and_disjoint_blocks():
    c, _ = _bell()
    empty = CircuitBuilder(2).build()
    both = compose(empty, c)
    assert [op for _, _, op in both.instructions()] == [op for _, _, op in c.instructions()]
    five = CircuitBuilder(5)
    five.gate("H", 0).gate("CNOT", 0, 4)
    f = five.build()
    ten = compose(f, f, range(5), range(5, 10))
    assert ten.n_qubits == 10
    assert ten.count("CNOT") == 2
    assert any(op.qubits == (5, 9) for _, _, op in ten.instructions() if isinstance(op, Instruction))


def test_compose_rejects_non_injective_map():
    c, _ = _bell()
    with pytest.raises(CircuitError):
        compose(c, c, [0, 0], [0, 1])


def test_condition_on_unwritten_bit_rejected():
    b = CircuitBuilder(1)
    cb = b.new_cbits(1)[0]
    b.begin(Condition("eq", (cb,), 1))
    b.gate("X", 0)
    b.end()
    with pytest.raises(CircuitError):
        b.build()


def test_condition_kinds():
    assert Condition("parity", (0, 1), 1).evaluate([1, 0])
    assert Condition("eq", (0, 1), 2).evaluate([0, 1])
    assert Condition("eq", (0, 1), 2, negate=True).evaluate([1, 1])


class _Flip:
    def __call__(self, bits):
        return DecoderResult(outputs=(bits[0] ^ 1,))


def test_text_and_json_round_trip():
    b = CircuitBuilder(2)
    b.op("prep0", 0).op("prep0", 1).gate("H", 0)
    m = b.measure(0)
    out = b.new_cbits(1)[0]
    b.call("flip", _Flip(), (m,), (out,))
    b.begin(Condition("eq", (out,), 1))
    b.gate("X", 1)
    b.end()
    b.op("idle", 1, duration=1e-3)
    c = b.build(label="rt")
    decoders = {"flip": _Flip()}
    again = from_text(to_text(c), decoders)
    assert to_text(again) == to_text(c)
    assert to_json(from_json(to_json(c), decoders)) == to_json(c)


def test_rz_not_allowed_for_stabilizer_target():
    b = CircuitBuilder(1)
    b.op("Rz", 0, angle=0.3)
    c = b.build()
    assert not c.is_clifford
    with pytest.raises(CircuitError):
        validate(c.with_metadata(backend="stabilizer"))
