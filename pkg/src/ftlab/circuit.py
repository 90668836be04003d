"""Adaptive circuit IR: instructions, conditional blocks, decoder calls.

A circuit is a flat sequence of blocks. Each block has an optional classical
condition and a body of instructions and decoder calls. Classical bits start at
zero; a bit may only be read once it has been written on every path.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field, replace
from typing import Any, Iterable, Mapping, Optional, Sequence, Union

from ftlab.pauli import PauliString

GATES_1Q = ("H", "S", "Sdg", "X", "Y", "Z")
GATES_2Q = ("CNOT",)
QUANTUM_KINDS = GATES_1Q + GATES_2Q + ("prep0", "reset", "measure", "Rz", "idle")
# stochastic annotations produced by noise.inject and fault instrumentation
NOISE_KINDS = ("depolarize1", "depolarize2", "xerror", "zerror", "mflip", "pauli")
CLASSICAL_KINDS = ("cset",)
ALL_KINDS = QUANTUM_KINDS + NOISE_KINDS + CLASSICAL_KINDS


class CircuitError(ValueError):
    """Raised when a circuit fails validation or an edit is out of range."""


@dataclass(frozen=True)
class Instruction:
    kind: str
    qubits: tuple[int, ...] = ()
    cbit: Optional[int] = None
    angle: Optional[float] = None
    duration: Optional[float] = None
    prob: Optional[float] = None
    label: Optional[str] = None  # Pauli letters for kind == "pauli"
    value: Optional[int] = None  # for cset

    @property
    def is_gate(self) -> bool:
        return self.kind in GATES_1Q or self.kind in GATES_2Q

    @property
    def is_noise(self) -> bool:
        return self.kind in NOISE_KINDS


@dataclass(frozen=True)
class Condition:
    """``parity``: XOR of the bits equals ``value``; ``eq``: bits equal ``value`` read as
    little-endian over ``cbits``. ``negate`` inverts the test."""

    kind: str
    cbits: tuple[int, ...]
    value: int = 0
    negate: bool = False

    def evaluate(self, bits: Sequence[int]) -> bool:
        if self.kind == "parity":
            acc = 0
            for c in self.cbits:
                acc ^= bits[c]
            ok = acc == self.value
        elif self.kind == "eq":
            ok = all(bits[c] == (self.value >> i) & 1 for i, c in enumerate(self.cbits))
        else:
            raise CircuitError(f"unknown condition kind {self.kind}")
        return ok != self.negate


def any_set(cbits: Iterable[int]) -> Condition:
    return Condition("eq", tuple(cbits), 0, negate=True)


def all_clear(cbits: Iterable[int]) -> Condition:
    return Condition("eq", tuple(cbits), 0)


@dataclass(frozen=True)
class DecoderCall:
    """Call registered decoder ``decoder`` on the listed (frame-adjusted) bits.

    The decoder may return a Pauli on ``frame_qubits`` (multiplied into the
    frame) and values for ``outputs`` (written as classical bits).
    """

    decoder: str
    inputs: tuple[int, ...]
    outputs: tuple[int, ...] = ()
    frame_qubits: tuple[int, ...] = ()


Op = Union[Instruction, DecoderCall]


@dataclass(frozen=True)
class Block:
    body: tuple[Op, ...]
    condition: Optional[Condition] = None


@dataclass(frozen=True)
class LogicalReadout:
    """Logical bit = XOR of the adjusted ``cbits`` XOR ``constant``."""

    name: str
    cbits: tuple[int, ...]
    constant: int = 0


@dataclass(frozen=True)
class FaultLocation:
    block: int
    index: int
    when: str  # "after" or "before"
    qubits: tuple[int, ...]

    def faults(self) -> list[PauliString]:
        """Non-identity Paulis on the support, as strings over ``len(qubits)`` qubits."""
        w = len(self.qubits)
        out = []
        for letters in itertools.product("IXYZ", repeat=w):
            if set(letters) != {"I"}:
                out.append(PauliString.from_str("".join(letters)))
        return out


@dataclass(frozen=True)
class Circuit:
    n_qubits: int
    n_cbits: int
    blocks: tuple[Block, ...]
    decoders: Mapping[str, Any] = field(default_factory=dict)
    outputs: tuple[LogicalReadout, ...] = ()
    postselect: tuple[Condition, ...] = ()
    metadata: Mapping[str, Any] = field(default_factory=dict)

    # construction -----------------------------------------------------------

    def validated(self) -> "Circuit":
        validate(self)
        return self

    def instructions(self) -> Iterable[tuple[int, int, Op]]:
        for b, block in enumerate(self.blocks):
            for i, op in enumerate(block.body):
                yield b, i, op

    def count(self, kind: str) -> int:
        return sum(1 for _, _, op in self.instructions()
                   if isinstance(op, Instruction) and op.kind == kind)

    def with_metadata(self, **kw) -> "Circuit":
        meta = dict(self.metadata)
        meta.update(kw)
        return replace(self, metadata=meta)

    @property
    def is_clifford(self) -> bool:
        return all(not (isinstance(op, Instruction) and op.kind == "Rz")
                   for _, _, op in self.instructions())


def validate(c: Circuit) -> None:
    """Structural checks; raises CircuitError."""
    written = set()

    def need(bits, where, known=None):
        known = written if known is None else known
        for b in bits:
            if not 0 <= b < c.n_cbits:
                raise CircuitError(f"{where}: cbit {b} out of range")
            if b not in known:
                raise CircuitError(f"{where}: cbit {b} read before written on all paths")

    for bi, block in enumerate(c.blocks):
        if block.condition is not None:
            need(block.condition.cbits, f"block {bi} condition")
        local = set(written)
        for ii, op in enumerate(block.body):
            where = f"block {bi} op {ii}"
            if isinstance(op, DecoderCall):
                if op.decoder not in c.decoders:
                    raise CircuitError(f"{where}: unknown decoder {op.decoder!r}")
                need(op.inputs, where, local)
                for q in op.frame_qubits:
                    if not 0 <= q < c.n_qubits:
                        raise CircuitError(f"{where}: frame qubit {q} out of range")
                for o in op.outputs:
                    if not 0 <= o < c.n_cbits:
                        raise CircuitError(f"{where}: output cbit {o} out of range")
                    local.add(o)
                continue
            if op.kind not in ALL_KINDS:
                raise CircuitError(f"{where}: unknown kind {op.kind}")
            arity = 2 if op.kind in ("CNOT", "depolarize2") else (
                len(op.label or "") if op.kind == "pauli" else (0 if op.kind in ("cset", "mflip") else 1))
            if op.kind == "idle":
                arity = len(op.qubits)
            if len(op.qubits) != arity:
                raise CircuitError(f"{where}: {op.kind} expects {arity} qubits, got {len(op.qubits)}")
            if len(set(op.qubits)) != len(op.qubits):
                raise CircuitError(f"{where}: repeated qubit")
            for q in op.qubits:
                if not 0 <= q < c.n_qubits:
                    raise CircuitError(f"{where}: qubit {q} out of range")
            if op.kind in ("measure", "cset", "mflip"):
                if op.cbit is None or not 0 <= op.cbit < c.n_cbits:
                    raise CircuitError(f"{where}: bad cbit {op.cbit}")
                if op.kind == "mflip":
                    need((op.cbit,), where, local)
                local.add(op.cbit)
            if op.kind == "Rz" and op.angle is None:
                raise CircuitError(f"{where}: Rz without angle")
            if op.prob is not None and not 0.0 <= op.prob <= 1.0:
                raise CircuitError(f"{where}: probability {op.prob} out of range")
        if block.condition is None:
            written = local
    for r in c.outputs:
        need(r.cbits, f"readout {r.name}")
    for cond in c.postselect:
        need(cond.cbits, "postselect")
    if c.metadata.get("backend") == "stabilizer" and not c.is_clifford:
        raise CircuitError("Rz present in a circuit targeted at the stabilizer backend")


# builder -----------------------------------------------------------------


class CircuitBuilder:
    """Incremental construction helper; ``build`` validates."""

    def __init__(self, n_qubits: int, n_cbits: int = 0):
        self.n_qubits = n_qubits
        self.n_cbits = n_cbits
        self.blocks: list[Block] = []
        self._body: list[Op] = []
        self._cond: Optional[Condition] = None
        self.decoders: dict[str, Any] = {}
        self.outputs: list[LogicalReadout] = []
        self.postselect: list[Condition] = []

    def new_cbits(self, k: int) -> list[int]:
        out = list(range(self.n_cbits, self.n_cbits + k))
        self.n_cbits += k
        return out

    def _flush(self) -> None:
        if self._body:
            self.blocks.append(Block(tuple(self._body), self._cond))
        self._body = []

    def begin(self, condition: Optional[Condition] = None) -> "CircuitBuilder":
        self._flush()
        self._cond = condition
        return self

    def end(self) -> "CircuitBuilder":
        return self.begin(None)

    def op(self, kind: str, *qubits: int, **kw) -> "CircuitBuilder":
        self._body.append(Instruction(kind, tuple(qubits), **kw))
        return self

    def gate(self, kind: str, *qubits: int) -> "CircuitBuilder":
        return self.op(kind, *qubits)

    def gates(self, seq: Iterable[tuple[str, Sequence[int]]], qmap: Optional[Sequence[int]] = None):
        for g, qs in seq:
            self.op(g, *[(qmap[q] if qmap is not None else q) for q in qs])
        return self

    def measure(self, q: int, cbit: Optional[int] = None) -> int:
        if cbit is None:
            cbit = self.new_cbits(1)[0]
        self._body.append(Instruction("measure", (q,), cbit=cbit))
        return cbit

    def cset(self, cbit: int, value: int = 0) -> "CircuitBuilder":
        self._body.append(Instruction("cset", (), cbit=cbit, value=value))
        return self

    def call(self, name: str, decoder, inputs, outputs=(), frame_qubits=()) -> "CircuitBuilder":
        if name in self.decoders and self.decoders[name] is not decoder:
            raise CircuitError(f"decoder name clash {name!r}")
        self.decoders[name] = decoder
        self._body.append(DecoderCall(name, tuple(inputs), tuple(outputs), tuple(frame_qubits)))
        return self

    def extend(self, other: Circuit, qubit_map: Sequence[int], cbit_offset: Optional[int] = None) -> list[int]:
        """Append ``other`` with qubits remapped; returns the cbit map used."""
        if cbit_offset is None:
            cbit_map = self.new_cbits(other.n_cbits)
        else:
            cbit_map = list(range(cbit_offset, cbit_offset + other.n_cbits))
        self._flush()
        cur = self._cond
        for block in other.blocks:
            body = tuple(_remap_op(op, qubit_map, cbit_map) for op in block.body)
            cond = _remap_cond(block.condition, cbit_map)
            if cur is not None and cond is not None:
                raise CircuitError("nested conditions are not supported")
            self.blocks.append(Block(body, cond if cond is not None else cur))
        for k, v in other.decoders.items():
            if k in self.decoders and self.decoders[k] is not v:
                raise CircuitError(f"decoder name clash {k!r}")
            self.decoders[k] = v
        for r in other.outputs:
            self.outputs.append(replace(r, cbits=tuple(cbit_map[b] for b in r.cbits)))
        for cond in other.postselect:
            self.postselect.append(_remap_cond(cond, cbit_map))
        return cbit_map

    def build(self, **metadata) -> Circuit:
        self._flush()
        c = Circuit(self.n_qubits, self.n_cbits, tuple(self.blocks), dict(self.decoders),
                    tuple(self.outputs), tuple(self.postselect), dict(metadata))
        validate(c)
        return c


def _remap_op(op: Op, qmap: Sequence[int], cmap: Sequence[int]) -> Op:
    if isinstance(op, DecoderCall):
        return DecoderCall(op.decoder, tuple(cmap[b] for b in op.inputs),
                           tuple(cmap[b] for b in op.outputs), tuple(qmap[q] for q in op.frame_qubits))
    return replace(op, qubits=tuple(qmap[q] for q in op.qubits),
                   cbit=None if op.cbit is None else cmap[op.cbit])


def _remap_cond(cond: Optional[Condition], cmap: Sequence[int]) -> Optional[Condition]:
    if cond is None:
        return None
    return replace(cond, cbits=tuple(cmap[b] for b in cond.cbits))


def compose(a: Circuit, b: Circuit, qubit_map_a: Optional[Sequence[int]] = None,
            qubit_map_b: Optional[Sequence[int]] = None, n_qubits: Optional[int] = None,
            shared_cbits: bool = False) -> Circuit:
    """Run ``a`` then ``b`` on a register of ``n_qubits``.

    Qubit maps must be injective. Classical bits are disjoint unless
    ``shared_cbits`` is set, in which case ``b`` addresses ``a``'s bits directly.
    """
    qa = list(qubit_map_a) if qubit_map_a is not None else list(range(a.n_qubits))
    qb = list(qubit_map_b) if qubit_map_b is not None else list(range(b.n_qubits))
    for m, c in ((qa, a), (qb, b)):
        if len(m) != c.n_qubits or len(set(m)) != len(m):
            raise CircuitError("qubit map must be injective and cover the circuit")
    n = n_qubits if n_qubits is not None else max(qa + qb + [-1]) + 1
    if any(q >= n or q < 0 for q in qa + qb):
        raise CircuitError("qubit map out of range")
    builder = CircuitBuilder(n)
    builder.extend(a, qa)
    if shared_cbits:
        if b.n_cbits > builder.n_cbits:
            builder.new_cbits(b.n_cbits - builder.n_cbits)
        builder.extend(b, qb, cbit_offset=0)
    else:
        builder.extend(b, qb)
    meta = dict(a.metadata)
    meta.update(b.metadata)
    return builder.build(**meta)


# faults ------------------------------------------------------------------


def fault_locations(c: Circuit) -> list[FaultLocation]:
    """After every gate/prep/reset and before every measurement, in program order."""
    locs = []
    for b, i, op in c.instructions():
        if not isinstance(op, Instruction):
            continue
        if op.is_gate or op.kind in ("prep0", "reset"):
            locs.append(FaultLocation(b, i, "after", op.qubits))
        elif op.kind == "measure":
            locs.append(FaultLocation(b, i, "before", op.qubits))
    return locs


def instrument(c: Circuit, loc: FaultLocation, fault: PauliString) -> Circuit:
    """Insert ``fault`` (over the location's qubits) at ``loc``."""
    if not 0 <= loc.block < len(c.blocks) or not 0 <= loc.index < len(c.blocks[loc.block].body):
        raise CircuitError(f"location {loc} out of range")
    op = c.blocks[loc.block].body[loc.index]
    if not isinstance(op, Instruction) or op.qubits != loc.qubits:
        raise CircuitError(f"location {loc} does not match the circuit")
    if fault.n != len(loc.qubits):
        raise CircuitError("fault support does not match the location")
    if fault.is_identity():
        return c
    ins = pauli_instruction(fault, loc.qubits)
    body = list(c.blocks[loc.block].body)
    body.insert(loc.index + (1 if loc.when == "after" else 0), ins)
    blocks = list(c.blocks)
    blocks[loc.block] = replace(blocks[loc.block], body=tuple(body))
    return replace(c, blocks=tuple(blocks))


def pauli_instruction(p: PauliString, qubits: Sequence[int]) -> Instruction:
    letters = "".join(p.label(i) for i in range(p.n))
    keep = [(q, l) for q, l in zip(qubits, letters) if l != "I"]
    return Instruction("pauli", tuple(q for q, _ in keep), label="".join(l for _, l in keep))


# serialization -----------------------------------------------------------


def _cond_text(cond: Condition) -> str:
    head = f"{'!' if cond.negate else ''}{cond.kind}"
    return f"({head} {cond.value} " + " ".join(map(str, cond.cbits)) + ")"


def _parse_cond(text: str) -> Condition:
    parts = text.strip()[1:-1].split()
    head, value, bits = parts[0], int(parts[1]), tuple(int(b) for b in parts[2:])
    neg = head.startswith("!")
    return Condition(head.lstrip("!"), bits, value, neg)


_FIELDS = ("cbit", "angle", "duration", "prob", "label", "value")


def to_text(c: Circuit) -> str:
    """Line format. Decoders are referenced by name only."""
    lines = [f"circuit {c.n_qubits} {c.n_cbits}"]
    for k, v in sorted(c.metadata.items()):
        lines.append(f"meta {k} {json.dumps(v)}")
    for r in c.outputs:
        lines.append(f"output {r.name} {r.constant} " + " ".join(map(str, r.cbits)))
    for cond in c.postselect:
        lines.append("postselect " + _cond_text(cond))
    for block in c.blocks:
        lines.append("block" + (" " + _cond_text(block.condition) if block.condition else ""))
        for op in block.body:
            if isinstance(op, DecoderCall):
                lines.append(
                    f"  call {op.decoder} in={','.join(map(str, op.inputs))} "
                    f"out={','.join(map(str, op.outputs))} frame={','.join(map(str, op.frame_qubits))}")
                continue
            extra = [f"{f}={getattr(op, f)!r}" for f in _FIELDS if getattr(op, f) is not None]
            lines.append("  " + " ".join([op.kind] + [str(q) for q in op.qubits] + extra))
        lines.append("end")
    return "\n".join(lines) + "\n"


def _ints(s: str) -> tuple[int, ...]:
    return tuple(int(x) for x in s.split(",") if x)


def from_text(text: str, decoders: Optional[Mapping[str, Any]] = None) -> Circuit:
    import ast

    lines = [ln for ln in text.splitlines() if ln.strip()]
    head = lines[0].split()
    if head[0] != "circuit":
        raise CircuitError("missing circuit header")
    n_q, n_c = int(head[1]), int(head[2])
    meta, outputs, post, blocks = {}, [], [], []
    body: Optional[list] = None
    cond = None
    for ln in lines[1:]:
        s = ln.strip()
        word = s.split()[0]
        if word == "meta":
            _, k, v = s.split(" ", 2)
            meta[k] = json.loads(v)
        elif word == "output":
            parts = s.split()
            outputs.append(LogicalReadout(parts[1], tuple(int(b) for b in parts[3:]), int(parts[2])))
        elif word == "postselect":
            post.append(_parse_cond(s[len("postselect"):]))
        elif word == "block":
            rest = s[len("block"):].strip()
            cond = _parse_cond(rest) if rest else None
            body = []
        elif word == "end":
            blocks.append(Block(tuple(body), cond))
            body = None
        elif word == "call":
            parts = dict(p.split("=", 1) for p in s.split()[2:])
            body.append(DecoderCall(s.split()[1], _ints(parts["in"]), _ints(parts["out"]), _ints(parts["frame"])))
        else:
            toks = s.split()
            qubits, kw = [], {}
            for t in toks[1:]:
                if "=" in t:
                    k, v = t.split("=", 1)
                    kw[k] = ast.literal_eval(v)
                else:
                    qubits.append(int(t))
            body.append(Instruction(toks[0], tuple(qubits), **kw))
    c = Circuit(n_q, n_c, tuple(blocks), dict(decoders or {}), tuple(outputs), tuple(post), meta)
    validate(c)
    return c


def to_json(c: Circuit) -> dict:
    def op_json(op):
        if isinstance(op, DecoderCall):
            return {"call": op.decoder, "inputs": list(op.inputs), "outputs": list(op.outputs),
                    "frame_qubits": list(op.frame_qubits)}
        d = {"kind": op.kind, "qubits": list(op.qubits)}
        for f in _FIELDS:
            if getattr(op, f) is not None:
                d[f] = getattr(op, f)
        return d

    def cond_json(cond):
        return None if cond is None else {"kind": cond.kind, "cbits": list(cond.cbits),
                                          "value": cond.value, "negate": cond.negate}

    return {
        "n_qubits": c.n_qubits, "n_cbits": c.n_cbits, "metadata": dict(c.metadata),
        "outputs": [{"name": r.name, "cbits": list(r.cbits), "constant": r.constant} for r in c.outputs],
        "postselect": [cond_json(p) for p in c.postselect],
        "blocks": [{"condition": cond_json(b.condition), "body": [op_json(o) for o in b.body]}
                   for b in c.blocks],
    }


def from_json(d: dict, decoders: Optional[Mapping[str, Any]] = None) -> Circuit:
    def cond(x):
        return None if x is None else Condition(x["kind"], tuple(x["cbits"]), x["value"], x["negate"])

    def op(x):
        if "call" in x:
            return DecoderCall(x["call"], tuple(x["inputs"]), tuple(x["outputs"]), tuple(x["frame_qubits"]))
        kw = {f: x[f] for f in _FIELDS if f in x}
        return Instruction(x["kind"], tuple(x["qubits"]), **kw)

    c = Circuit(
        d["n_qubits"], d["n_cbits"],
        tuple(Block(tuple(op(o) for o in b["body"]), cond(b["condition"])) for b in d["blocks"]),
        dict(decoders or {}),
        tuple(LogicalReadout(r["name"], tuple(r["cbits"]), r["constant"]) for r in d["outputs"]),
        tuple(cond(p) for p in d["postselect"]),
        dict(d["metadata"]),
    )
    validate(c)
    return c


@dataclass(frozen=True)
class DecoderResult:
    """What a decoder returns: an optional frame Pauli and output bit values."""

    frame: Optional[PauliString] = None
    outputs: tuple[int, ...] = ()
