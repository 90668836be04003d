"""Clifford synthesis of stabilizer-state preparation circuits."""

from __future__ import annotations

import itertools
from typing import Optional, Sequence

from ftlab.pauli import INVERSE_GATE, PauliString, gf2_rank

Gate = tuple[str, tuple[int, ...]]


class SynthesisError(ValueError):
    pass


def _reduce_to_z(stabilizers: Sequence[PauliString], priority: Sequence[int]) -> list[Gate]:
    """Gates C with C |psi> = |0...0> for the state stabilized by ``stabilizers``."""
    n = stabilizers[0].n
    gens = list(stabilizers)
    gates: list[Gate] = []
    rank = {q: i for i, q in enumerate(priority)}

    def apply(gate: str, qubits: tuple[int, ...]) -> None:
        gates.append((gate, qubits))
        for i, g in enumerate(gens):
            gens[i] = g.conjugated_by_gate(gate, qubits)

    pending = list(range(len(gens)))
    done: set[int] = set()
    while pending:
        with_x = [(rank[q], gens[i].weight, i, q) for i in pending for q in range(n)
                  if q not in done and (gens[i].x >> q) & 1]
        if with_x:
            _, _, gi, q = min(with_x)
        else:
            cands = [(rank[q], gens[i].weight, i, q) for i in pending for q in range(n)
                     if q not in done and (gens[i].z >> q) & 1]
            if not cands:
                raise SynthesisError("generators are not independent")
            _, _, gi, q = min(cands)
            apply("H", (q,))
        if gens[gi].label(q) == "Y":
            apply("Sdg", (q,))
        for other in sorted(gens[gi].support, key=lambda v: rank[v]):
            if other == q:
                continue
            lab = gens[gi].label(other)
            if lab == "Z":
                apply("H", (other,))
            elif lab == "Y":
                apply("Sdg", (other,))
            apply("CNOT", (q, other))
        apply("H", (q,))
        g = gens[gi]
        for j in pending:
            if j != gi and (gens[j].z >> q) & 1:
                gens[j] = gens[j] * g
        pending.remove(gi)
        done.add(q)
    for g in gens:
        if g.sign == -1:
            (q,) = g.support
            apply("X", (q,))
    return gates


def state_preparation_gates(stabilizers: Sequence[PauliString],
                            priority: Optional[Sequence[int]] = None) -> list[Gate]:
    """Gates mapping |0...0> to the state stabilized by ``stabilizers``."""
    n = stabilizers[0].n
    if len(stabilizers) != n:
        raise SynthesisError("need exactly n generators")
    if gf2_rank(g.x | (g.z << n) for g in stabilizers) != n:
        raise SynthesisError("generators are not independent")
    for a, b in itertools.combinations(stabilizers, 2):
        if not a.commutes(b):
            raise SynthesisError(f"{a} and {b} anticommute")
    forward = _reduce_to_z(stabilizers, priority if priority is not None else range(n))
    return cancel_inverse_pairs([(INVERSE_GATE[g], q) for g, q in reversed(forward)])


def cancel_inverse_pairs(gates: Sequence[Gate]) -> list[Gate]:
    """Drop gate pairs g, g^-1 on the same qubits with nothing in between on those qubits."""
    out: list[Gate] = []
    for g, q in gates:
        # last gate touching any of q
        j = next((i for i in range(len(out) - 1, -1, -1) if set(out[i][1]) & set(q)), None)
        if j is not None and out[j][1] == tuple(q) and INVERSE_GATE[out[j][0]] == g:
            del out[j]
        else:
            out.append((g, tuple(q)))
    return out


def cnot_count(gates: Sequence[Gate]) -> int:
    return sum(1 for g, _ in gates if g == "CNOT")


def minimal_preparation(stabilizers: Sequence[PauliString]) -> list[Gate]:
    """Search qubit priorities for the preparation with fewest CNOTs (then fewest gates)."""
    n = stabilizers[0].n
    best = None
    for perm in itertools.permutations(range(n)):
        gates = state_preparation_gates(stabilizers, perm)
        key = (cnot_count(gates), len(gates))
        if best is None or key < best[0]:
            best = (key, gates)
    return best[1]
