"""The twelve named logical experiments for both codes.

Each experiment prepares two logical qubits, optionally applies a logical CNOT
(with or without an intermediate QEC cycle) and reads both qubits out. Inputs
come from three families of product states: X-basis, Z-basis and the mixed
family that a CNOT turns into Bell pairs.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Mapping, Optional, Sequence

import numpy as np

from ftlab import color_code, five_qubit
from ftlab.circuit import Circuit, CircuitBuilder, LogicalReadout
from ftlab.codes import code_definition
from ftlab.gadgets import logical_pauli_gates, rotation_to, transversal_automorphisms, transversal_logical_image
from ftlab.pauli import CliffordMap, PauliString, signed_membership
from ftlab.qec import append_qec_cycle

FIVE_QUBIT_LABELS = ("SPAM1f", "SPAM2f", "CNOT1f", "CNOT2f", "CNOT3f")
COLOR_LABELS = ("SPAM1c", "SPAM2c", "QEC1c", "QEC2c", "CNOT1c", "CNOT2c", "CNOT3c")
LABELS = FIVE_QUBIT_LABELS + COLOR_LABELS

# input rows of the three truth tables (control, target)
INPUTS = {
    "X": (("+", "+"), ("+", "-"), ("-", "+"), ("-", "-")),
    "Z": (("0", "0"), ("0", "1"), ("1", "0"), ("1", "1")),
    "Bell": (("+", "0"), ("-", "0"), ("+", "1"), ("-", "1")),
}
STATE_LABEL = {"+": "+X", "-": "-X", "0": "+Z", "1": "-Z"}

# label -> (ft preparation, cnot, qec: None | "single" | "ft")
_FAMILY = {
    "SPAM1f": (False, False, None), "SPAM2f": (True, False, None),
    "CNOT1f": (False, True, None), "CNOT2f": (True, True, "single"), "CNOT3f": (True, True, "ft"),
    "SPAM1c": (False, False, None), "SPAM2c": (True, False, None),
    "QEC1c": (True, False, "single"), "QEC2c": (True, False, "ft"),
    "CNOT1c": (True, True, None), "CNOT2c": (True, True, "single"), "CNOT3c": (True, True, "ft"),
}


class UnknownExperiment(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentSpec:
    """One run configuration: ``family`` in {X, Z, Bell}, ``row`` picks the
    input pair, ``basis`` is the readout basis of both qubits (defaults to the
    family; Bell runs use X, Y or Z)."""

    label: str
    family: str = "Z"
    row: int = 0
    basis: Optional[str] = None

    def __post_init__(self):
        if self.label not in LABELS:
            raise UnknownExperiment(f"unknown experiment {self.label!r}")
        if self.family not in INPUTS:
            raise ValueError(f"unknown input family {self.family!r}")
        if self.family == "Bell" and not self.has_cnot:
            raise ValueError(f"{self.label} has no CNOT; Bell inputs are meaningless")
        if not 0 <= self.row < 4:
            raise ValueError("row must be 0..3")
        b = self.readout_basis
        if b not in "XYZ" or (self.family != "Bell" and b != self.family):
            raise ValueError(f"basis {b!r} does not fit family {self.family!r}")

    @property
    def code(self) -> str:
        return "five_qubit" if self.label in FIVE_QUBIT_LABELS else "steane"

    @property
    def has_cnot(self) -> bool:
        return _FAMILY[self.label][1]

    @property
    def ft_prep(self) -> bool:
        return _FAMILY[self.label][0]

    @property
    def qec(self) -> Optional[str]:
        return _FAMILY[self.label][2]

    @property
    def readout_basis(self) -> str:
        return self.basis or ("X" if self.family == "Bell" else self.family)

    @property
    def inputs(self) -> tuple[str, str]:
        return INPUTS[self.family][self.row]

    def name(self) -> str:
        tail = f"{self.family}{self.row}"
        return f"{self.label}-{tail}" + (f"-{self.readout_basis}{self.readout_basis}" if self.family == "Bell" else "")


def variants(label: str) -> list[ExperimentSpec]:
    """All input rows and readout bases used for ``label``."""
    out = [ExperimentSpec(label, fam, r) for fam in ("X", "Z") for r in range(4)]
    if _FAMILY[label][1]:
        out += [ExperimentSpec(label, "Bell", r, b) for r in range(4) for b in "XYZ"]
    return out


# ideal logical outcomes -----------------------------------------------------

_KETS = {"0": np.array([1, 0], complex), "1": np.array([0, 1], complex),
         "+": np.array([1, 1], complex) / np.sqrt(2), "-": np.array([1, -1], complex) / np.sqrt(2)}
_PAULI = {"I": np.eye(2), "X": np.array([[0, 1], [1, 0]]), "Y": np.array([[0, -1j], [1j, 0]]),
          "Z": np.diag([1.0, -1.0])}
_CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], complex)


def ideal_state(spec: ExperimentSpec) -> np.ndarray:
    """Two-qubit logical output state (qubit 0 is the control, most significant)."""
    a, b = spec.inputs
    psi = np.kron(_KETS[a], _KETS[b])
    return _CNOT @ psi if spec.has_cnot else psi


def readout_names(spec: ExperimentSpec) -> tuple[str, ...]:
    b = spec.readout_basis
    return (f"{b}1", f"{b}2", f"{b}{b}")


def expected_outputs(spec: ExperimentSpec) -> tuple[Optional[int], ...]:
    """Ideal readout bits in ``readout_names`` order; None where random."""
    psi = ideal_state(spec)
    b = spec.readout_basis
    out = []
    for ops in ((b, "I"), ("I", b), (b, b)):
        v = np.real(np.vdot(psi, np.kron(_PAULI[ops[0]], _PAULI[ops[1]]) @ psi))
        out.append(0 if v > 1 - 1e-9 else 1 if v < -1 + 1e-9 else None)
    return tuple(out)


# shared helpers -------------------------------------------------------------


def _word_gates(word: Sequence[str], data: Sequence[int]):
    return [(g, (q,)) for q in data for g in word]


@lru_cache(maxsize=None)
def measurement_word(code_name: str, basis: str, target: str) -> tuple[tuple[str, ...], int]:
    """Transversal word W with W B W^dagger = +-T for logical B = ``basis``, T = ``target``;
    returns (W, sign bit)."""
    for word in sorted(transversal_automorphisms(code_name), key=lambda w: (len(w), w)):
        img = transversal_logical_image(code_name, word, basis)
        if img[1] == target:
            return word, int(img[0] == "-")
    raise ValueError(f"no transversal word takes {basis} to {target}")


def _add_readouts(b: CircuitBuilder, spec: ExperimentSpec, per_block: Sequence[tuple[list[int], int]]):
    names = readout_names(spec)
    (c1, k1), (c2, k2) = per_block
    b.outputs.append(LogicalReadout(names[0], tuple(c1), k1))
    b.outputs.append(LogicalReadout(names[1], tuple(c2), k2))
    b.outputs.append(LogicalReadout(names[2], tuple(c1) + tuple(c2), k1 ^ k2))


# five-qubit code ------------------------------------------------------------

FQ_BLOCKS = (tuple(range(5)), tuple(range(5, 10)))
FQ_ANC, FQ_FLAG = 10, 11


def _build_five_qubit(spec: ExperimentSpec) -> Circuit:
    code = code_definition("five_qubit")
    b = CircuitBuilder(12)
    used: set = set()
    for data, s in zip(FQ_BLOCKS, spec.inputs):
        if spec.ft_prep:
            five_qubit.append_ft_init(b, data, FQ_ANC, FQ_FLAG, used)
        else:
            five_qubit.append_encoder(b, data, used)
        word, fixes = rotation_to("five_qubit", "-X", STATE_LABEL[s])
        b.gates(_word_gates(word, data))
        for f in fixes:
            b.gates(logical_pauli_gates(code, f), data)
    if spec.has_cnot:
        joint = FQ_BLOCKS[0] + FQ_BLOCKS[1]
        b.gates(five_qubit.rotation_u_gates(FQ_BLOCKS[0]) + five_qubit.rotation_u_gates(FQ_BLOCKS[1]))
        b.gates(five_qubit.round_robin_gates(1), joint)
        if spec.qec is not None:
            gens = five_qubit.derive_joint_stabilizers()
            if spec.qec == "ft":
                table, orders = five_qubit.joint_flag_tables()
            else:
                table, orders = five_qubit.joint_base_table(), None
            append_qec_cycle(b, gens, joint, FQ_ANC, FQ_FLAG, used, spec.qec == "ft", "qec", table, orders)
        b.gates(five_qubit.round_robin_gates(2), joint)
        b.gates(five_qubit.rotation_u_gates(FQ_BLOCKS[0], True) + five_qubit.rotation_u_gates(FQ_BLOCKS[1], True))
    word, sign = measurement_word("five_qubit", spec.readout_basis, "X")
    per_block = []
    for i, data in enumerate(FQ_BLOCKS):
        b.gates(_word_gates(word, data))
        if spec.ft_prep:
            bits, const = five_qubit.append_ft_measure_out(b, data, FQ_ANC, FQ_FLAG, f"m{i + 1}", used)
        else:
            bits, const = five_qubit.append_nonft_measure_out(b, data)
        per_block.append((bits, const ^ sign))
    _add_readouts(b, spec, per_block)
    return b.build(label=spec.label, experiment=spec.name(), code="five_qubit",
                   data_qubits=FQ_BLOCKS[0] + FQ_BLOCKS[1], expected=expected_outputs(spec))


# color code -----------------------------------------------------------------

CC_BLOCKS = (tuple(range(7)), tuple(range(7, 14)))
CC_ANC, CC_FLAG = 14, 15


def _prepare_logical_gates(code, s: str, data: Sequence[int]):
    """Transversal single-qubit logical operation taking |0> to the eigenstate ``s``."""
    gates = []
    if s in "+-":
        gates += _word_gates(("H",), data)
    if s == "1":
        gates += [(g, (data[q],)) for g, (q,) in logical_pauli_gates(code, "X")]
    if s == "-":
        gates += [(g, (data[q],)) for g, (q,) in logical_pauli_gates(code, "Z")]
    return gates


def _color_qec(b: CircuitBuilder, spec: ExperimentSpec, used: set) -> None:
    gens = code_definition("steane").stabilizers
    for i, data in enumerate(CC_BLOCKS):
        if spec.qec == "ft":
            table, orders = color_code.flag_tables()
        else:
            table, orders = color_code.base_table(), None
        append_qec_cycle(b, gens, data, CC_ANC, CC_FLAG, used, spec.qec == "ft", f"qec{i + 1}", table, orders)


def _build_color(spec: ExperimentSpec) -> Circuit:
    code = code_definition("steane")
    b = CircuitBuilder(16)
    used: set = set()
    for data, s in zip(CC_BLOCKS, spec.inputs):
        if spec.ft_prep:
            color_code.append_ft_init(b, data, CC_ANC, used)
        else:
            color_code.append_encoder(b, data, used)
        b.gates(_prepare_logical_gates(code, s, data))
    if spec.has_cnot:
        b.gates(color_code.transversal_cnot_gates(*CC_BLOCKS))
    if spec.qec is not None:
        _color_qec(b, spec, used)
    per_block = []
    for i, data in enumerate(CC_BLOCKS):
        per_block.append(([color_code.append_transversal_measure(b, data, spec.readout_basis, f"m{i + 1}")], 0))
    _add_readouts(b, spec, per_block)
    return b.build(label=spec.label, experiment=spec.name(), code="steane",
                   data_qubits=CC_BLOCKS[0] + CC_BLOCKS[1], expected=expected_outputs(spec))


def build_experiment(spec: ExperimentSpec) -> Circuit:
    """The full adaptive circuit for ``spec``."""
    return _build_five_qubit(spec) if spec.code == "five_qubit" else _build_color(spec)


# codes-protocols wrappers -----------------------------------------------------


def synthesize_encoder(code_name: str) -> Circuit:
    """Encoder for the code's default logical state (|-> for the five-qubit code, |0> for Steane)."""
    code = code_definition(code_name)
    b = CircuitBuilder(code.n)
    if code_name == "steane":
        color_code.append_encoder(b, range(7), set())
    elif code_name == "five_qubit":
        five_qubit.append_encoder(b, range(5), set())
    else:
        raise ValueError(f"no encoder for {code_name!r}")
    return b.build(label=f"encoder_{code_name}")


def ft_init_circuit(code_name: str) -> Circuit:
    """Encoder plus verification; accepted runs carry a correctable residual."""
    b = CircuitBuilder({"five_qubit": 7, "steane": 8}[code_name])
    used: set = set()
    if code_name == "five_qubit":
        cbits = five_qubit.append_ft_init(b, range(5), 5, 6, used)
    elif code_name == "steane":
        cbits = [color_code.append_ft_init(b, range(7), 7, used)]
    else:
        raise ValueError(f"no FT preparation for {code_name!r}")
    return b.build(label=f"ft_init_{code_name}", check_cbits=tuple(cbits))


def adaptive_measure_out_5q() -> Circuit:
    """FT logical X measurement of one canonical five-qubit block (qubits 0-4, ancilla 5, flag 6)."""
    b = CircuitBuilder(7)
    bits, const = five_qubit.append_ft_measure_out(b, range(5), 5, 6, "m", set())
    b.outputs.append(LogicalReadout("X", tuple(bits), const))
    return b.build(label="measure_out_5q")


def transversal_cnot_steane() -> Circuit:
    b = CircuitBuilder(14)
    b.gates(color_code.transversal_cnot_gates(*CC_BLOCKS))
    return b.build(label="transversal_cnot")


def transversal_1q(code_name: str, gate: str) -> Circuit:
    n = code_definition(code_name).n
    b = CircuitBuilder(n)
    b.gates(_word_gates((gate,), range(n)))
    return b.build(label=f"transversal_{gate}")


CNOT_MAP = {"XI": "XX", "IX": "IX", "ZI": "ZI", "IZ": "ZZ"}


def _two_block(code_name: str) -> tuple[list[PauliString], dict[str, PauliString], int]:
    code = code_definition(code_name)
    n = code.n
    b1, b2 = list(range(n)), list(range(n, 2 * n))
    gens = [s.embed(2 * n, b1) for s in code.stabilizers] + [s.embed(2 * n, b2) for s in code.stabilizers]
    lg = {}
    for label in "XZ":
        lg[label + "I"] = code.logical(label).embed(2 * n, b1)
        lg["I" + label] = code.logical(label).embed(2 * n, b2)
    return gens, lg, 2 * n


def circuit_map(c: Circuit) -> CliffordMap:
    """Clifford map of an unconditional gate-only circuit."""
    gates = []
    for blk in c.blocks:
        if blk.condition is not None:
            raise ValueError("conditional block in a circuit expected to be unitary")
        for op in blk.body:
            if not getattr(op, "is_gate", False):
                raise ValueError(f"non-Clifford or non-unitary instruction {op}")
            gates.append((op.kind, op.qubits))
    return CliffordMap.from_gates(c.n_qubits, gates)


def verify_logical_action(c: Circuit, expected: Mapping[str, str] = CNOT_MAP, code_name: str = "steane") -> bool:
    """True iff ``c`` preserves both blocks' stabilizer groups and maps each
    two-qubit logical Pauli (keys like 'XI') to the expected one ('XX')."""
    gens, lg, n = _two_block(code_name)
    if c.n_qubits != n:
        raise ValueError(f"circuit acts on {c.n_qubits} qubits, expected {n}")
    m = circuit_map(c)
    if any(signed_membership(m.conjugate(g), gens) != 1 for g in gens):
        return False

    def logical_product(word: str) -> PauliString:
        out = PauliString.identity(n)
        for i, letter in enumerate(word):
            if letter != "I":
                out = out * lg[("I" * i + letter + "I" * (1 - i))]
        return out

    for key, target in expected.items():
        if signed_membership(m.conjugate(lg[key]) * logical_product(target), gens) != 1:
            return False
    return True


# exhaustive fault-tolerance verification ------------------------------------

FT_CLAIMED = ("SPAM2f", "SPAM2c", "CNOT3f", "CNOT1c", "CNOT3c")
NON_FT_WITNESSES = ("SPAM1f", "SPAM1c", "CNOT1f", "CNOT2f", "CNOT2c")


@dataclass
class ExperimentFTReport:
    label: str
    reports: dict  # variant name -> FTReport

    @property
    def total_faults(self) -> int:
        return sum(r.total_faults for r in self.reports.values())

    @property
    def failures(self) -> int:
        return sum(r.failures for r in self.reports.values())

    @property
    def budget_exceeded(self) -> int:
        return sum(r.budget_exceeded for r in self.reports.values())

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.reports.values())

    def first_counterexample(self) -> Optional[tuple[str, dict]]:
        for name, r in self.reports.items():
            if r.counterexamples:
                return name, r.counterexamples[0].to_json()
        return None

    def to_json(self) -> dict:
        ce = self.first_counterexample()
        return {"label": self.label, "total_faults": self.total_faults, "failures": self.failures,
                "budget_exceeded": self.budget_exceeded, "passed": self.passed,
                "failing_variants": sorted(n for n, r in self.reports.items() if r.failures),
                "first_counterexample": None if ce is None else {"variant": ce[0], **ce[1]}}


def verify_experiment(label: str, specs: Optional[Sequence[ExperimentSpec]] = None,
                      stop_at_first: bool = False, max_branches: int = 1 << 12) -> ExperimentFTReport:
    """Single-fault sweep of every variant of ``label`` (or of ``specs``).
    With ``stop_at_first`` the sweep ends at the first failing variant."""
    from ftlab.ftcheck import verify_logical

    out = ExperimentFTReport(label, {})
    for s in specs if specs is not None else variants(label):
        rep = verify_logical(build_experiment(s), max_branches, stop_at_first)
        out.reports[s.name()] = rep
        if stop_at_first and rep.failures:
            break
    return out
