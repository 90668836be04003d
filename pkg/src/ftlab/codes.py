"""Stabilizer code data: generators, logical operators and destabilizers."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

from ftlab.pauli import CliffordMap, PauliString, commutation_syndrome, gf2_rank

# U = S1 H1 Y3 S5 H5 in time order (qubits are 0-indexed here)
ROTATION_U = (("H", (0,)), ("S", (0,)), ("Y", (2,)), ("H", (4,)), ("S", (4,)))


@dataclass(frozen=True)
class CodeDefinition:
    name: str
    n: int
    k: int
    d: int
    stabilizers: tuple[PauliString, ...]
    logical_x: tuple[PauliString, ...]
    logical_z: tuple[PauliString, ...]
    destabilizers: tuple[PauliString, ...]
    basis: str = "canonical"
    logical_y: tuple[PauliString, ...] = field(default=())

    def __post_init__(self):
        if not self.logical_y:
            ys = tuple(_hermitian_y(x, z) for x, z in zip(self.logical_x, self.logical_z))
            object.__setattr__(self, "logical_y", ys)

    def logical(self, label: str, index: int = 0) -> PauliString:
        return {"X": self.logical_x, "Y": self.logical_y, "Z": self.logical_z}[label][index]

    def syndrome(self, p: PauliString) -> tuple[int, ...]:
        return commutation_syndrome(p, self.stabilizers)

    def validate(self) -> None:
        gens = self.stabilizers
        for a, b in itertools.combinations(gens, 2):
            if not a.commutes(b):
                raise ValueError(f"{self.name}: generators {a} and {b} anticommute")
        if gf2_rank(g.x | (g.z << self.n) for g in gens) != len(gens):
            raise ValueError(f"{self.name}: dependent generators")
        for lx in self.logical_x + self.logical_z:
            if not all(lx.commutes(g) for g in gens):
                raise ValueError(f"{self.name}: logical {lx} does not commute with the stabilizers")
        for i, (lx, lz) in enumerate(zip(self.logical_x, self.logical_z)):
            if lx.commutes(lz):
                raise ValueError(f"{self.name}: logical pair {i} commutes")
        for i, d in enumerate(self.destabilizers):
            for j, g in enumerate(gens):
                if d.commutes(g) == (i == j):
                    raise ValueError(f"{self.name}: destabilizer {i} pairing broken at {j}")

    def conjugated(self, m: CliffordMap, basis: str) -> "CodeDefinition":
        c = m.conjugate
        return CodeDefinition(
            name=self.name if basis == self.basis else f"{self.name}_{basis}",
            n=self.n, k=self.k, d=self.d,
            stabilizers=tuple(c(g) for g in self.stabilizers),
            logical_x=tuple(c(p) for p in self.logical_x),
            logical_z=tuple(c(p) for p in self.logical_z),
            destabilizers=tuple(c(p) for p in self.destabilizers),
            basis=basis,
            logical_y=tuple(c(p) for p in self.logical_y),
        )


def _hermitian_y(x: PauliString, z: PauliString) -> PauliString:
    # Y = i X Z for logical operators as well
    y = PauliString(x.n, 0, 0, 1) * x * z
    return y


def find_destabilizers(stabilizers: Sequence[PauliString],
                       logicals: Sequence[PauliString]) -> tuple[PauliString, ...]:
    """Lowest-weight Paulis pairing with each generator and commuting with the logicals."""
    n = stabilizers[0].n
    out = []
    for i in range(len(stabilizers)):
        target = tuple(1 if j == i else 0 for j in range(len(stabilizers)))
        found = None
        for w in range(1, n + 1):
            for qubits in itertools.combinations(range(n), w):
                for labels in itertools.product("XYZ", repeat=w):
                    p = PauliString.from_sparse(n, dict(zip(qubits, labels)))
                    if commutation_syndrome(p, stabilizers) == target and all(
                            p.commutes(lg) for lg in logicals):
                        found = p
                        break
                if found:
                    break
            if found:
                break
        if found is None:
            raise ValueError(f"no destabilizer for generator {i}")
        out.append(found)
    return tuple(out)


def _five_qubit() -> CodeDefinition:
    f = PauliString.from_str
    return CodeDefinition(
        name="five_qubit", n=5, k=1, d=3,
        stabilizers=tuple(f(s) for s in ("XZZXI", "IXZZX", "XIXZZ", "ZXIXZ")),
        logical_x=(f("-YIXIY"),),
        logical_z=(f("-XIZIX"),),
        logical_y=(f("-ZIYIZ"),),
        destabilizers=tuple(f(s) for s in ("IXIII", "YXIIY", "XIIIX", "IXIZI")),
    )


def _steane() -> CodeDefinition:
    f = PauliString.from_str
    stabs = tuple(f(s) for s in ("XXXXIII", "IXXIXXI", "IIXXIXX", "ZZZZIII", "IZZIZZI", "IIZZIZZ"))
    x_sup = _min_logical_support(stabs, "X")
    lx = PauliString.from_sparse(7, {q: "X" for q in x_sup})
    lz = PauliString.from_sparse(7, {q: "Z" for q in x_sup})
    return CodeDefinition(
        name="steane", n=7, k=1, d=3, stabilizers=stabs,
        logical_x=(lx,), logical_z=(lz,),
        destabilizers=find_destabilizers(stabs, (lx, lz)),
    )


def _min_logical_support(stabs, kind: str) -> tuple[int, ...]:
    n = stabs[0].n
    for w in range(1, n + 1):
        for qubits in itertools.combinations(range(n), w):
            p = PauliString.from_sparse(n, {q: kind for q in qubits})
            if all(p.commutes(g) for g in stabs) and gf2_rank(
                    [g.x | (g.z << n) for g in stabs] + [p.x | (p.z << n)]) > len(stabs):
                return qubits
    raise ValueError("no logical found")


@lru_cache(maxsize=None)
def code_definition(name: str) -> CodeDefinition:
    """``five_qubit``, ``five_qubit_rotated`` or ``steane``."""
    if name == "five_qubit":
        code = _five_qubit()
    elif name == "steane":
        code = _steane()
    elif name == "five_qubit_rotated":
        code = _five_qubit().conjugated(CliffordMap.from_gates(5, ROTATION_U), "rotated")
    else:
        raise KeyError(f"unknown code {name!r}")
    code.validate()
    return code


def stabilizer_group(generators: Sequence[PauliString]) -> list[PauliString]:
    """All 2^m elements (with signs) of the group generated by ``generators``."""
    n = generators[0].n
    out = []
    for bits in itertools.product((0, 1), repeat=len(generators)):
        p = PauliString.identity(n)
        for b, g in zip(bits, generators):
            if b:
                p = p * g
        out.append(p)
    return out


def equivalent_min_weight(p: PauliString, generators: Sequence[PauliString]) -> int:
    """Minimum weight of ``p`` times any element of the group (phases ignored)."""
    return min((p * s).weight for s in stabilizer_group(generators))
