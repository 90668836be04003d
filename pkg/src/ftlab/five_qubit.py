"""Five-qubit code protocols: verified initialization, adaptive measure-out and
the round-robin logical CNOT on two rotated blocks."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Sequence

from ftlab.circuit import Circuit, CircuitBuilder, Condition, DecoderResult
from ftlab.codes import ROTATION_U, code_definition, stabilizer_group
from ftlab.decoding import LookupTable, build_weight1_table, paulis_of_weight
from ftlab.gadgets import encoder_gates, fresh, measure_pauli, sign_bit
from ftlab.pauli import INVERSE_GATE, CliffordMap, PauliString, commutation_syndrome, gf2_solve

CODE = "five_qubit"


def _functional(p: PauliString, basis: Sequence[PauliString]) -> tuple[int, ...]:
    e = gf2_solve(p, basis)
    if e is None:
        raise ValueError(f"{p} is not in the span")
    return e


@lru_cache(maxsize=None)
def xbar_representatives() -> tuple[PauliString, ...]:
    """Three weight-3 representatives X̄·s, in measurement order, used by
    initialization and measure-out.

    Chosen so that (a) an error commuting with all three is equivalent to a
    weight <= 1 error on |-> (post-selection leaves a correctable residual),
    (b) no weight-1 error anticommutes with all three (agreeing outcomes can
    only be wrong after two faults) and (c) a fault in the first measurement
    that flips its outcome and leaves that representative's letter on one of
    its qubits is caught by a later representative. Ties prefer X̄ first.
    """
    code = code_definition(CODE)
    xbar = code.logical("X")
    basis = list(code.stabilizers) + [xbar]
    w1 = [commutation_syndrome(p, basis) for p in paulis_of_weight(code.n, 1)]
    allowed = set(w1) | {(0,) * len(basis)}
    reps = [xbar * s for s in stabilizer_group(code.stabilizers)]
    reps = [r for r in reps if r.weight == 3]
    reps.sort(key=lambda r: (r != xbar, str(r.unsigned())))
    patterns = list(itertools.product((0, 1), repeat=len(basis)))

    def dot(f, v):
        return sum(a & b for a, b in zip(f, v)) & 1

    for tri in itertools.permutations(reps, 3):
        if str(tri[1].unsigned()) > str(tri[2].unsigned()):
            continue
        fs = [_functional(r, basis) for r in tri]
        accepted = [v for v in patterns if all(dot(f, v) == 0 for f in fs)]
        if any(v not in allowed for v in accepted):
            continue
        if any(all(dot(f, v) for f in fs) for v in w1):
            continue
        r1, r2, r3 = tri
        letters = [PauliString.single(r1.n, q, r1.label(q)) for q in r1.support]
        if not all(e.commutes(r2) or e.commutes(r3) for e in letters):
            continue
        return tuple(tri)
    raise RuntimeError("no suitable representative triple")


@lru_cache(maxsize=None)
def xbar_schedule() -> tuple[tuple[PauliString, tuple[int, ...]], ...]:
    """(representative, qubit order) for the three measurement parts."""
    return tuple((r, tuple(r.support)) for r in xbar_representatives())


# decoders -----------------------------------------------------------------


@dataclass(frozen=True)
class MeasureOutLogic:
    """Branching rules of the three-part measure-out.

    stage 1, inputs (f1, m1, f2, m2) -> (run_part3, decode)
    stage 2, inputs (f1, m1, f2, m2, f3, m3, decode1) -> (decode, result)
    ``signs`` turn raw outcomes into X̄ value bits (1 = eigenvalue -1).
    """

    stage: int
    signs: tuple[int, int, int]

    def __call__(self, bits: Sequence[int]) -> DecoderResult:
        s1, s2, s3 = self.signs
        f1, m1, f2, m2 = bits[:4]
        l1, l2 = m1 ^ s1, m2 ^ s2
        if self.stage == 1:
            run3 = int(not f1 and not f2 and l1 == l2)
            dec = int(bool(f1) or (not f2 and l1 != l2))
            return DecoderResult(outputs=(run3, dec))
        f3, m3, dec1 = bits[4:7]
        if dec1:
            return DecoderResult(outputs=(1, 0))
        if f2 or f3:
            return DecoderResult(outputs=(0, l1))
        if (m3 ^ s3) != l1:
            return DecoderResult(outputs=(1, 0))
        return DecoderResult(outputs=(0, l1))


@dataclass(frozen=True)
class UnencodeDecoder:
    """Inputs: the Part I flag, then the Z outcomes of the block after the
    inverse encoder. Recovers the stabilizer syndrome and the X̄ value, picks a
    correction (flag-conditioned when the Part I flag fired) and returns the
    corrected X̄ bit."""

    masks: tuple[int, ...]  # per stabilizer, then X̄: parity mask over the bits
    signs: tuple[int, ...]
    table: LookupTable
    flagged: tuple[tuple[tuple[int, ...], PauliString], ...]
    xbar: PauliString

    def correction(self, flag: int, syndrome: tuple[int, ...]) -> PauliString:
        if flag:
            for s, p in self.flagged:
                if s == syndrome:
                    return p
        return self.table.decode(syndrome)

    def __call__(self, bits: Sequence[int]) -> DecoderResult:
        flag, zs = bits[0], bits[1:]
        vals = []
        for mask, s in zip(self.masks, self.signs):
            v = s
            for i, b in enumerate(zs):
                if (mask >> i) & 1:
                    v ^= b
            vals.append(v)
        corr = self.correction(flag, tuple(vals[:-1]))
        flip = 0 if corr.commutes(self.xbar) else 1
        return DecoderResult(outputs=(vals[-1] ^ flip,))


def inverse_gates(gates):
    return [(INVERSE_GATE.get(g, g), qs) for g, qs in reversed(list(gates))]


def part1_flag_table() -> dict[tuple[int, ...], PauliString]:
    """Syndrome -> correction for data errors left by single faults in Part I
    that raise its flag. Entries only need to agree modulo the stabilizers and
    X̄, since X̄ itself does not change the value being read out."""
    from ftlab.circuit import fault_locations
    from ftlab.decoding import TableConflict, propagate_fault
    from ftlab.pauli import in_span

    code = code_definition(CODE)
    rep, order = xbar_schedule()[0]
    b = CircuitBuilder(7)
    m, f, _ = measure_pauli(b, rep.unsigned(), range(5), 5, 6, order=order)
    c = b.build(flag_cbits=(f,))
    group = list(code.stabilizers) + [code.logical("X")]
    out: dict[tuple[int, ...], PauliString] = {}
    for loc in fault_locations(c):
        for fault in loc.faults():
            prop = propagate_fault(c, loc, fault)
            if not prop.flags[0]:
                continue
            err = prop.data_error(range(5))
            s = commutation_syndrome(err, code.stabilizers)
            prev = out.get(s)
            if prev is None or (prev.weight, str(prev)) > (err.weight, str(err)):
                if prev is not None and not in_span(prev * err, group):
                    raise TableConflict(f"Part I flag table: {prev} vs {err}")
                out[s] = err
            elif not in_span(prev * err, group):
                raise TableConflict(f"Part I flag table: {prev} vs {err}")
    return out


@lru_cache(maxsize=None)
def unencode_decoder() -> UnencodeDecoder:
    code = code_definition(CODE)
    inv = CliffordMap.from_gates(code.n, inverse_gates(encoder_gates(CODE, "-X")))
    masks, signs = [], []
    for g in list(code.stabilizers) + [code.logical("X")]:
        img = inv.conjugate(g)
        if img.x:
            raise RuntimeError("inverse encoder does not map the code to Z-type operators")
        masks.append(img.z)
        signs.append(sign_bit(img))
    table = build_weight1_table(code.stabilizers, code.logical_x + code.logical_z)
    flagged = tuple(sorted(part1_flag_table().items()))
    return UnencodeDecoder(tuple(masks), tuple(signs), table, flagged, code.logical("X"))


# circuit fragments ---------------------------------------------------------


def append_encoder(b: CircuitBuilder, data: Sequence[int], used: Optional[set] = None) -> None:
    """Non-FT preparation of |-> on ``data``."""
    for q in data:
        fresh(b, q, used)
    b.gates(encoder_gates(CODE, "-X"), data)


def append_ft_init(b: CircuitBuilder, data: Sequence[int], anc: int, flag: int,
                   used: Optional[set] = None) -> list[int]:
    """Encoder plus three flagged X̄-representative measurements, post-selected on
    trivial flags and on every representative reporting -1. Returns the cbits."""
    append_encoder(b, data, used)
    cbits, expect = [], 0
    for r, order in xbar_schedule():
        m, f, _ = measure_pauli(b, r.unsigned(), data, anc, flag, order=order, used=used)
        # unsigned outcome bit equals sign_bit(r) XOR 1 on |->
        expect |= (sign_bit(r) ^ 1) << len(cbits)
        cbits += [m, f]
    b.postselect.append(Condition("eq", tuple(cbits), expect))
    return cbits


def append_nonft_measure_out(b: CircuitBuilder, data: Sequence[int]) -> tuple[list[int], int]:
    """Destructive single-qubit measurement of the X̄ support; returns (cbits, constant)."""
    xbar = code_definition(CODE).logical("X")
    bits = []
    for q in xbar.support:
        letter = xbar.label(q)
        if letter == "X":
            b.op("H", data[q])
        elif letter == "Y":
            b.op("Sdg", data[q])
            b.op("H", data[q])
        bits.append(b.measure(data[q]))
    return bits, sign_bit(xbar)


def append_ft_measure_out(b: CircuitBuilder, data: Sequence[int], anc: int, flag: int, tag: str,
                          used: Optional[set] = None) -> tuple[list[int], int]:
    """Three-part adaptive X̄ measurement. Returns readout (cbits, constant)."""
    sched = xbar_schedule()
    signs = tuple(sign_bit(r) for r, _ in sched)
    pauli = [r.unsigned() for r, _ in sched]
    orders = [o for _, o in sched]
    m2, f2, m3, f3, run3, dec1, dec, res, res2 = b.new_cbits(9)
    b.begin()
    for cb in (m2, f2, m3, f3, res2):
        b.cset(cb, 0)
    m1, f1, _ = measure_pauli(b, pauli[0], data, anc, flag, order=orders[0], used=used)
    b.begin(Condition("eq", (f1,), 0))
    measure_pauli(b, pauli[1], data, anc, flag, order=orders[1], used=used, into=(m2, f2))
    b.begin()
    b.call(f"{tag}_logic1", MeasureOutLogic(1, signs), (f1, m1, f2, m2), (run3, dec1))
    b.begin(Condition("eq", (run3,), 1))
    measure_pauli(b, pauli[2], data, anc, flag, order=orders[2], used=used, into=(m3, f3))
    b.begin()
    b.call(f"{tag}_logic2", MeasureOutLogic(2, signs), (f1, m1, f2, m2, f3, m3, dec1), (dec, res))
    b.begin(Condition("eq", (dec,), 1))
    b.gates(inverse_gates(encoder_gates(CODE, "-X")), data)
    zs = [b.measure(q) for q in data]
    b.call(f"{tag}_unencode", unencode_decoder(), [f1] + zs, (res2,))
    b.end()
    return [res, res2], 0


# round robin -------------------------------------------------------------


BLOCK_QUBITS = (0, 2, 4)


def _rotated_generators() -> tuple[list[PauliString], dict[str, PauliString]]:
    r = code_definition("five_qubit_rotated")
    blocks = (list(range(5)), list(range(5, 10)))
    gens = [s.embed(10, blocks[0]) for s in r.stabilizers] + [s.embed(10, blocks[1]) for s in r.stabilizers]
    logicals = {
        "XI": r.logical("X").embed(10, blocks[0]), "IX": r.logical("X").embed(10, blocks[1]),
        "ZI": r.logical("Z").embed(10, blocks[0]), "IZ": r.logical("Z").embed(10, blocks[1]),
    }
    return gens, logicals


def cnot_logical_map(logicals: dict[str, PauliString]) -> dict[str, PauliString]:
    """Expected images under logical CNOT (control 1, target 2)."""
    return {"XI": logicals["XI"] * logicals["IX"], "IX": logicals["IX"],
            "ZI": logicals["ZI"], "IZ": logicals["ZI"] * logicals["IZ"]}


def check_action(m: CliffordMap, gens: Sequence[PauliString], expected: dict[str, PauliString],
                 logicals: dict[str, PauliString]) -> bool:
    """Signed check: stabilizers preserved and each logical mapped to its image."""
    from ftlab.pauli import signed_membership

    if any(signed_membership(m.conjugate(g), gens) != 1 for g in gens):
        return False
    for k, p in logicals.items():
        if signed_membership(m.conjugate(p) * expected[k], gens) != 1:
            return False
    return True


@lru_cache(maxsize=None)
def round_robin_schedule() -> tuple[tuple[tuple[int, int], ...], tuple[tuple[int, int], ...]]:
    """The nine CNOTs from qubits {1,3,5} of block 1 to {1,3,5} of block 2 as two pieces.

    Rounds are matchings c_i -> t_{i+k}; the first two rounds form piece 1. The
    round order is searched until the logical action and stabilizer
    preservation hold.
    """
    gens, logicals = _rotated_generators()
    expected = cnot_logical_map(logicals)
    rounds = [tuple((BLOCK_QUBITS[i], 5 + BLOCK_QUBITS[(i + k) % 3]) for i in range(3)) for k in range(3)]
    for order in itertools.permutations(range(3)):
        seq = [p for k in order for p in rounds[k]]
        m = CliffordMap.from_gates(10, [("CNOT", p) for p in seq])
        if check_action(m, gens, expected, logicals):
            return tuple(seq[:6]), tuple(seq[6:])
    raise RuntimeError("no round-robin ordering realizes the logical CNOT")


def round_robin_gates(piece: int) -> list[tuple[str, tuple[int, int]]]:
    if piece not in (1, 2):
        raise ValueError("piece must be 1 or 2")
    return [("CNOT", p) for p in round_robin_schedule()[piece - 1]]


def round_robin_piece(piece: int) -> Circuit:
    b = CircuitBuilder(10)
    b.gates(round_robin_gates(piece))
    return b.build(label=f"round_robin_piece{piece}")


@lru_cache(maxsize=None)
def derive_joint_stabilizers() -> tuple[PauliString, ...]:
    """Generators of the [[10,2,3]] code seen between the two pieces."""
    gens, _ = _rotated_generators()
    m = CliffordMap.from_gates(10, round_robin_gates(1))
    return tuple(m.conjugate(g) for g in gens)


@lru_cache(maxsize=None)
def joint_logicals() -> dict[str, PauliString]:
    _, logicals = _rotated_generators()
    m = CliffordMap.from_gates(10, round_robin_gates(1))
    return {k: m.conjugate(p) for k, p in logicals.items()}


def rotation_u_gates(data: Sequence[int], inverse: bool = False):
    gates = inverse_gates(ROTATION_U) if inverse else list(ROTATION_U)
    return [(g, tuple(data[q] for q in qs)) for g, qs in gates]


@lru_cache(maxsize=None)
def joint_base_table():
    """Unflagged decoder for the [[10,2,3]] code.

    Besides weight-1 errors it must cover errors that entered before the gate
    (one per block) and were spread by piece 1, and faults of the piece-1
    CNOTs themselves; all are propagated to the point of the QEC cycle."""
    from ftlab.decoding import table_from_errors

    gens = derive_joint_stabilizers()
    pieces = round_robin_gates(1)
    errors = []
    for start in range(len(pieces) + 1):
        rest = CliffordMap.from_gates(10, pieces[start:])
        if start == 0:
            faults = list(paulis_of_weight(10, 1))
        else:
            c, t = pieces[start - 1][1]
            faults = [p.embed(10, (c, t)) for p in _two_qubit_faults()]
        errors += [rest.conjugate(p) for p in faults]
    errors += list(paulis_of_weight(10, 1))
    return table_from_errors(gens, errors, fill_weight=3)


def _two_qubit_faults():
    return [PauliString.from_str(a + b) for a in "IXYZ" for b in "IXYZ" if a + b != "II"]


@lru_cache(maxsize=None)
def joint_flag_tables():
    """(FlagTable, orders) for the flagged [[10,2,3]] round."""
    from ftlab.qec import flag_tables_for

    return flag_tables_for(derive_joint_stabilizers(), joint_base_table())
