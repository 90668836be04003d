"""[[7,1,3]] color code protocols: verified |0> preparation, transversal gates,
transversal measurement with classical Hamming decoding, and QEC tables."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Sequence

from ftlab.circuit import CircuitBuilder, Condition, DecoderResult, fault_locations
from ftlab.codes import code_definition, stabilizer_group
from ftlab.decoding import build_css_tables, propagate_fault
from ftlab.ftcheck import correctable_errors
from ftlab.gadgets import encoder_candidates, fresh, measure_pauli, sign_bit
from ftlab.pauli import PauliString, commutation_syndrome, signed_membership

CODE = "steane"


def _state_generators() -> list[PauliString]:
    code = code_definition(CODE)
    return list(code.stabilizers) + [code.logical("Z")]


def _check_circuit(encoder, rep: PauliString):
    b = CircuitBuilder(8)
    for q in range(7):
        b.op("prep0", q)
    b.gates(encoder)
    m, _, _ = measure_pauli(b, rep.unsigned(), range(7), 7)
    return b.build(syndrome_cbits=(m,), data_qubits=tuple(range(7)))


def _residual_ok(c, rep: PauliString) -> bool:
    """Single faults that pass the check leave a residual whose X and Z parts
    are each equivalent to weight <= 1 on |0>."""
    gens = _state_generators()
    allowed = {commutation_syndrome(p, gens) for p in correctable_errors(7, css=True)}
    for loc in fault_locations(c):
        for f in loc.faults():
            prop = propagate_fault(c, loc, f)
            if prop.syndrome[0]:
                continue  # outcome flipped, so the run is rejected
            if commutation_syndrome(prop.data_error(range(7)), gens) not in allowed:
                return False
    return True


@lru_cache(maxsize=None)
def ft_check_design(limit: int = 400) -> tuple[tuple, PauliString]:
    """(encoder gates, Z̄ representative) such that measuring the representative
    once and post-selecting on +1 leaves a correctable residual after any
    single fault. Encoders are tried cheapest first."""
    code = code_definition(CODE)
    zbar = code.logical("Z")
    reps = sorted({(zbar * s) for s in stabilizer_group(code.stabilizers) if (zbar * s).weight == 3},
                  key=lambda p: str(p))
    for enc in encoder_candidates(CODE, "+Z")[:limit]:
        for rep in reps:
            if _residual_ok(_check_circuit(enc, rep), rep):
                return enc, rep
    raise RuntimeError("no encoder/representative pair passes the check")


def append_encoder(b: CircuitBuilder, data: Sequence[int], used: Optional[set] = None) -> None:
    """Non-FT preparation of |0>."""
    for q in data:
        fresh(b, q, used)
    b.gates(ft_check_design()[0], data)


def append_ft_init(b: CircuitBuilder, data: Sequence[int], anc: int, used: Optional[set] = None) -> int:
    """Encoder followed by one ancilla measurement of a weight-3 Z̄
    representative, post-selected on the +1 outcome. Returns the cbit."""
    append_encoder(b, data, used)
    rep = ft_check_design()[1]
    m, _, _ = measure_pauli(b, rep.unsigned(), data, anc, used=used)
    b.postselect.append(Condition("eq", (m,), sign_bit(rep)))
    return m


# transversal measurement ---------------------------------------------------

_TO_Z = {"X": ("H",), "Y": ("Sdg", "H"), "Z": ()}


@dataclass(frozen=True)
class TransversalDecoder:
    """Logical value from the seven single-qubit outcomes of a transversal
    measurement: a nonzero Hamming syndrome means one flipped bit, which flips
    the total parity."""

    faces: tuple[int, ...]  # bit masks of the three weight-4 supports
    sign: int  # sign bit relating the parity of all bits to the logical

    def __call__(self, bits: Sequence[int]) -> DecoderResult:
        word = sum(int(v) << i for i, v in enumerate(bits))
        syndrome = [(word & f).bit_count() & 1 for f in self.faces]
        parity = word.bit_count() & 1
        return DecoderResult(outputs=(parity ^ int(any(syndrome)) ^ self.sign,))


@lru_cache(maxsize=None)
def transversal_decoder(basis: str) -> TransversalDecoder:
    code = code_definition(CODE)
    faces = tuple(g.x for g in code.stabilizers if g.z == 0)
    full = PauliString.from_sparse(7, {q: basis for q in range(7)})
    lg = code.logical(basis)
    s = signed_membership(full * lg, code.stabilizers)
    if s == 0:
        raise RuntimeError(f"{basis}^7 is not a representative of the logical {basis}")
    return TransversalDecoder(faces, 0 if s == 1 else 1)


def append_transversal_measure(b: CircuitBuilder, data: Sequence[int], basis: str, tag: str) -> int:
    """Measure every qubit in ``basis`` and decode; returns the logical cbit."""
    for q in data:
        for g in _TO_Z[basis]:
            b.op(g, q)
    bits = [b.measure(q) for q in data]
    out = b.new_cbits(1)[0]
    b.call(f"{tag}_measure_{basis}", transversal_decoder(basis), bits, (out,))
    return out


def transversal_cnot_gates(block1: Sequence[int], block2: Sequence[int]):
    return [("CNOT", (a, t)) for a, t in zip(block1, block2)]


# decoder tables --------------------------------------------------------------


@lru_cache(maxsize=None)
def base_table():
    return build_css_tables(code_definition(CODE).stabilizers)


@lru_cache(maxsize=None)
def flag_tables():
    """(FlagTable, orders) for the flagged Steane round."""
    from ftlab.qec import flag_tables_for

    code = code_definition(CODE)
    return flag_tables_for(code.stabilizers, base_table(), code.logical_x + code.logical_z)


def min_cnot_encoder() -> int:
    from ftlab.synthesis import cnot_count

    return cnot_count(ft_check_design()[0])


