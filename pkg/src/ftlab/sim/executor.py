"""Interpreter shared by both engines.

Measured bits are stored raw together with the Pauli-frame X component at the
measured qubit; conditions, decoders, post-selection and logical readouts all
see the adjusted value ``raw ^ flip``. That is equivalent to applying every
frame correction physically, which ``physical_corrections=True`` does instead.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from ftlab.circuit import Circuit, DecoderCall, Instruction
from ftlab.pauli import PauliString, apply_gate_bits
from ftlab.sim.records import BranchSet, ShotRecord

_PAULI_1Q = ("X", "Y", "Z")
_PAULI_2Q = tuple(a + b for a in "IXYZ" for b in "IXYZ")[1:]


class BranchBudgetExceeded(RuntimeError):
    pass


class EngineError(ValueError):
    pass


def shot_seed(master: int, index: int) -> int:
    """Independent per-shot seed from (master seed, shot counter)."""
    return int(np.random.SeedSequence([master, index]).generate_state(1, np.uint64)[0])


@dataclass
class ExecOptions:
    physical_corrections: bool = False
    twirl_rz: bool = False
    dephasing_factor: float = 1.0  # multiplies dephasing Rz angles (per-shot randomization)
    max_branches: int = 1 << 16


class _Ctx:
    __slots__ = ("state", "raw", "flips", "written", "fx", "fz", "prob", "branch", "rng", "rejected")

    def clone(self) -> "_Ctx":
        o = _Ctx()
        o.state = self.state.copy()
        o.raw = list(self.raw)
        o.flips = list(self.flips)
        o.written = bytearray(self.written)
        o.fx, o.fz = self.fx, self.fz
        o.prob = self.prob
        o.branch = list(self.branch)
        o.rng = self.rng
        o.rejected = self.rejected
        return o

    def bits(self) -> list[int]:
        return [r ^ f for r, f in zip(self.raw, self.flips)]


def _set_letter(ctx: _Ctx, q: int, letter: str) -> None:
    if letter in ("X", "Y"):
        ctx.fx ^= 1 << q
    if letter in ("Z", "Y"):
        ctx.fz ^= 1 << q


def _apply_letter(ctx: _Ctx, q: int, letter: str) -> None:
    if letter != "I":
        ctx.state.apply_pauli_letter(q, letter)


class Executor:
    """Runs a circuit on a state object exposing the engine interface."""

    def __init__(self, circuit: Circuit, make_state: Callable[[int], object], kind: str,
                 options: Optional[ExecOptions] = None):
        self.c = circuit
        self.make_state = make_state
        self.kind = kind
        self.opt = options or ExecOptions()
        if kind == "stabilizer" and not self.opt.twirl_rz and not circuit.is_clifford:
            raise EngineError("Rz instructions need the state-vector engine or Pauli twirling")
        # postselect conditions indexed by the block after which they become checkable
        self._post_ready: dict[int, list] = {}
        last_write: dict[int, int] = {}
        for b, i, op in circuit.instructions():
            if isinstance(op, Instruction) and op.cbit is not None:
                last_write[op.cbit] = b
            elif isinstance(op, DecoderCall):
                for o in op.outputs:
                    last_write[o] = b
        nb = len(circuit.blocks)
        for cond in circuit.postselect:
            at = max((last_write.get(cb, -1) for cb in cond.cbits), default=-1)
            self._post_ready.setdefault(max(at, 0) if nb else 0, []).append(cond)

    # ------------------------------------------------------------------

    def _new_ctx(self, rng: random.Random) -> _Ctx:
        ctx = _Ctx()
        ctx.state = self.make_state(self.c.n_qubits)
        nc = self.c.n_cbits
        ctx.raw = [0] * nc
        ctx.flips = [0] * nc
        ctx.written = bytearray(nc)
        ctx.fx = ctx.fz = 0
        ctx.prob = 1.0
        ctx.branch = []
        ctx.rng = rng
        ctx.rejected = False
        return ctx

    def _finish(self, ctx: _Ctx, seed: Optional[int], keep_state: bool = False) -> ShotRecord:
        bits = ctx.bits()
        logical = []
        for r in self.c.outputs:
            v = r.constant
            for cb in r.cbits:
                v ^= bits[cb]
            logical.append(v)
        accepted = not ctx.rejected and all(cond.evaluate(bits) for cond in self.c.postselect)
        n = self.c.n_qubits
        frame = PauliString(n, ctx.fx, ctx.fz, (ctx.fx & ctx.fz).bit_count())
        return ShotRecord(tuple(ctx.raw), tuple(ctx.flips), frame, tuple(logical), accepted,
                          seed=seed, probability=ctx.prob, branch=tuple(ctx.branch),
                          state=ctx.state if keep_state else None)

    def sample(self, seed: int) -> ShotRecord:
        rng = random.Random(seed)
        ctx = self._new_ctx(rng)
        out: list[_Ctx] = []
        self._run(ctx, 0, 0, out, enumerate_mode=False)
        return self._finish(out[0], seed)

    def enumerate(self, keep_state: bool = False) -> BranchSet:
        ctx = self._new_ctx(random.Random(0))
        out: list[_Ctx] = []
        self._run(ctx, 0, 0, out, enumerate_mode=True)
        return BranchSet([self._finish(x, None, keep_state) for x in out])

    # ------------------------------------------------------------------

    def _run(self, ctx: _Ctx, b0: int, i0: int, out: list, enumerate_mode: bool) -> None:
        blocks = self.c.blocks
        opt = self.opt
        state = ctx.state
        for b in range(b0, len(blocks)):
            block = blocks[b]
            if i0 == 0 and block.condition is not None and not block.condition.evaluate(ctx.bits()):
                self._check_post(ctx, b)
                if ctx.rejected:
                    out.append(ctx)
                    return
                continue
            body = block.body
            for i in range(i0, len(body)):
                op = body[i]
                if isinstance(op, DecoderCall):
                    self._call(ctx, op)
                    continue
                k = op.kind
                qs = op.qubits
                if k == "CNOT" or k in ("H", "S", "Sdg", "X", "Y", "Z"):
                    state.apply(k, qs)
                    if ctx.fx or ctx.fz:
                        ctx.fx, ctx.fz, _ = apply_gate_bits(ctx.fx, ctx.fz, 0, k, qs)
                elif k == "measure":
                    q = qs[0]
                    if enumerate_mode and not state.is_deterministic_z(q):
                        if len(out) + 2 > opt.max_branches:
                            raise BranchBudgetExceeded(f"more than {opt.max_branches} branches")
                        for forced in (0, 1):
                            child = ctx.clone()
                            bit, _ = child.state.measure_z_bit(q, 0, forced)
                            child.prob *= 0.5
                            child.branch.append(bit)
                            self._record(child, op, bit)
                            self._run(child, b, i + 1, out, True)
                        return
                    bit, _ = self._measure(state, q, ctx.rng)
                    self._record(ctx, op, bit)
                elif k == "prep0" or k == "reset":
                    q = qs[0]
                    if enumerate_mode and not state.is_deterministic_z(q):
                        bit, _ = state.measure_z_bit(q, 0, 0)
                    else:
                        bit, _ = self._measure(state, q, ctx.rng)
                    if bit:
                        state.apply("X", (q,))
                    m = ~(1 << q)
                    ctx.fx &= m
                    ctx.fz &= m
                elif k == "pauli":
                    for q, letter in zip(qs, op.label):
                        _apply_letter(ctx, q, letter)
                elif k == "cset":
                    ctx.raw[op.cbit] = op.value or 0
                    ctx.flips[op.cbit] = 0
                    ctx.written[op.cbit] = 1
                elif k == "idle":
                    pass
                elif k == "Rz":
                    self._rz(ctx, op)
                else:
                    if enumerate_mode:
                        raise EngineError("stochastic noise cannot be enumerated")
                    self._noise(ctx, op)
            i0 = 0
            self._check_post(ctx, b)
            if ctx.rejected:
                out.append(ctx)
                return
        out.append(ctx)

    def _measure(self, state, q, rng):
        if self.kind == "stabilizer":
            return state.measure_z_bit(q, rng.getrandbits(1))
        return state.measure_z_bit(q, rng.random())

    def _record(self, ctx: _Ctx, op: Instruction, bit: int) -> None:
        ctx.raw[op.cbit] = bit
        ctx.flips[op.cbit] = (ctx.fx >> op.qubits[0]) & 1
        ctx.written[op.cbit] = 1

    def _check_post(self, ctx: _Ctx, b: int) -> None:
        conds = self._post_ready.get(b)
        if conds:
            bits = ctx.bits()
            for cond in conds:
                if all(ctx.written[cb] for cb in cond.cbits) and not cond.evaluate(bits):
                    ctx.rejected = True
                    return

    def _call(self, ctx: _Ctx, op: DecoderCall) -> None:
        dec = self.c.decoders[op.decoder]
        bits = ctx.bits()
        res = dec(tuple(bits[cb] for cb in op.inputs))
        if res.frame is not None and not res.frame.is_identity():
            if res.frame.n != len(op.frame_qubits):
                raise EngineError(f"decoder {op.decoder} returned a frame of the wrong size")
            for j, q in enumerate(op.frame_qubits):
                letter = res.frame.label(j)
                if letter == "I":
                    continue
                if self.opt.physical_corrections:
                    _apply_letter(ctx, q, letter)
                else:
                    _set_letter(ctx, q, letter)
        if len(res.outputs) != len(op.outputs):
            raise EngineError(f"decoder {op.decoder} returned {len(res.outputs)} bits, expected {len(op.outputs)}")
        for cb, v in zip(op.outputs, res.outputs):
            ctx.raw[cb] = int(v)
            ctx.flips[cb] = 0
            ctx.written[cb] = 1

    def _rz(self, ctx: _Ctx, op: Instruction) -> None:
        angle = op.angle
        if op.label == "dephasing":
            angle *= self.opt.dephasing_factor
        if self.kind == "statevector":
            ctx.state.rz(op.qubits[0], angle)
            return
        p = math.sin(angle / 2.0) ** 2
        if ctx.rng.random() < p:
            _apply_letter(ctx, op.qubits[0], "Z")

    def _noise(self, ctx: _Ctx, op: Instruction) -> None:
        p = op.prob or 0.0
        rng = ctx.rng
        if p <= 0.0 or rng.random() >= p:
            return
        k = op.kind
        if k == "depolarize1":
            _apply_letter(ctx, op.qubits[0], _PAULI_1Q[rng.randrange(3)])
        elif k == "depolarize2":
            pair = _PAULI_2Q[rng.randrange(15)]
            _apply_letter(ctx, op.qubits[0], pair[0])
            _apply_letter(ctx, op.qubits[1], pair[1])
        elif k == "xerror":
            _apply_letter(ctx, op.qubits[0], "X")
        elif k == "zerror":
            _apply_letter(ctx, op.qubits[0], "Z")
        elif k == "mflip":
            ctx.raw[op.cbit] ^= 1
        else:
            raise EngineError(f"unknown instruction {k}")
