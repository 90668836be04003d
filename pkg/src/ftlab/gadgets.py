"""Circuit fragments shared by the protocols: encoders, ancilla-based Pauli
measurements (optionally flagged) and transversal single-qubit Cliffords."""

from __future__ import annotations

import itertools
from functools import lru_cache
from typing import Optional, Sequence

from ftlab.circuit import CircuitBuilder
from ftlab.codes import CodeDefinition, code_definition
from ftlab.pauli import CliffordMap, PauliString, signed_membership
from ftlab.synthesis import cnot_count, state_preparation_gates

Gate = tuple[str, tuple[int, ...]]

# gates W with W P W^dagger = Z, and their inverses
_TO_Z = {"X": (("H",), ("H",)), "Y": (("Sdg", "H"), ("H", "S")), "Z": ((), ())}

def _single_qubit_words() -> tuple[tuple[str, ...], ...]:
    """The 24 single-qubit Cliffords as short gate words (time order)."""
    seen = {}
    for length in range(0, 5):
        for word in itertools.product(("H", "S", "X", "Z", "Y"), repeat=length):
            m = CliffordMap.from_gates(1, [(g, (0,)) for g in word])
            key = (str(m.x_images[0]), str(m.z_images[0]))
            if key not in seen:
                seen[key] = word
    if len(seen) != 24:
        raise RuntimeError("single-qubit Clifford enumeration failed")
    return tuple(sorted(seen.values(), key=lambda w: (len(w), w)))


CLIFFORD_1Q_WORDS = _single_qubit_words()


# encoders ----------------------------------------------------------------


def target_state_generators(code: CodeDefinition, logical: str) -> list[PauliString]:
    """Stabilizer generators of the logical eigenstate ``logical`` in {+X,-X,+Y,-Y,+Z,-Z}."""
    sign, label = (1 if logical[0] == "+" else -1), logical[1]
    lg = code.logical(label)
    return list(code.stabilizers) + [lg if sign == 1 else lg.negate()]


@lru_cache(maxsize=None)
def encoder_candidates(code_name: str, logical: str, limit: int = 0) -> tuple[tuple[Gate, ...], ...]:
    """Distinct preparation circuits over qubit priorities, cheapest first."""
    code = code_definition(code_name)
    gens = target_state_generators(code, logical)
    found = {}
    for perm in itertools.permutations(range(code.n)):
        gates = tuple(state_preparation_gates(gens, perm))
        found.setdefault(gates, (cnot_count(gates), len(gates)))
    ordered = sorted(found, key=lambda g: (found[g], g))
    return tuple(ordered[:limit] if limit else ordered)


def encoder_gates(code_name: str, logical: str, choice: int = 0) -> tuple[Gate, ...]:
    return encoder_candidates(code_name, logical)[choice]


# ancilla measurements ----------------------------------------------------


def measure_pauli(b: CircuitBuilder, p: PauliString, data: Sequence[int], anc: int,
                  flag: Optional[int] = None, order: Optional[Sequence[int]] = None,
                  used: Optional[set] = None, into: Optional[Sequence[int]] = None
                  ) -> tuple[int, Optional[int], int]:
    """Measure the hermitian Pauli ``p`` (over the block ``data``) into a fresh cbit.

    Each data qubit is rotated so its letter becomes Z and copied onto the
    ancilla with CNOT(data -> ancilla). With a flag, the flag qubit starts in
    |+>, couples by CNOT(flag -> ancilla) after the first and before the last
    data CNOT, and is read in the X basis.

    Returns (outcome cbit, flag cbit or None, sign) where ``sign`` relates the
    outcome to ``p``: eigenvalue of p = sign * (-1)**bit. Qubits listed in
    ``used`` are re-initialized with a mid-circuit reset instead of prep0.
    ``into`` names preallocated (outcome, flag) cbits.
    """
    support = list(order) if order is not None else p.support
    if sorted(support) != sorted(p.support):
        raise ValueError("order must be a permutation of the support")
    fresh(b, anc, used)
    if flag is not None:
        fresh(b, flag, used)
        b.op("H", flag)
    for j, q in enumerate(support):
        letter = p.label(q)
        pre, post = _TO_Z[letter]
        for g in pre:
            b.op(g, data[q])
        b.op("CNOT", data[q], anc)
        for g in post:
            b.op(g, data[q])
        if flag is not None and len(support) > 1 and j in (0, len(support) - 2):
            b.op("CNOT", flag, anc)
    m = b.measure(anc, into[0] if into else None)
    f = None
    if flag is not None:
        b.op("H", flag)
        f = b.measure(flag, into[1] if into else None)
    return m, f, p.sign


def fresh(b: CircuitBuilder, q: int, used: Optional[set] = None) -> None:
    """Initialize ``q`` to |0>: prep0 the first time, reset afterwards."""
    if used is None:
        b.op("prep0", q)
    elif q in used:
        b.op("reset", q)
    else:
        used.add(q)
        b.op("prep0", q)


def sign_bit(p: PauliString) -> int:
    return 0 if p.sign == 1 else 1


# transversal single-qubit Cliffords -------------------------------------


def transversal_map(n: int, word: Sequence[str], qubits: Optional[Sequence[int]] = None) -> CliffordMap:
    qs = range(n) if qubits is None else qubits
    return CliffordMap.from_gates(n, [(g, (q,)) for q in qs for g in word])


def logical_action(code: CodeDefinition, m: CliffordMap) -> Optional[dict[str, PauliString]]:
    """Image of the logical operators if ``m`` preserves the (signed) stabilizer group.

    Returns a dict label -> signed logical image expressed as '+X', '-Z', etc.
    """
    for g in code.stabilizers:
        if signed_membership(m.conjugate(g), code.stabilizers) != 1:
            return None
    out = {}
    for label in "XZ":
        img = m.conjugate(code.logical(label))
        for cand in "XYZ":
            lg = code.logical(cand)
            s = signed_membership(img * lg, code.stabilizers)
            if s:
                out[label] = ("+" if s == 1 else "-") + cand
                break
        else:
            return None
    return out


@lru_cache(maxsize=None)
def transversal_automorphisms(code_name: str) -> dict[tuple[str, ...], dict]:
    """Uniform transversal single-qubit Cliffords that preserve the code, with their logical action."""
    code = code_definition(code_name)
    out = {}
    for word in CLIFFORD_1Q_WORDS:
        act = logical_action(code, transversal_map(code.n, word))
        if act is not None:
            out[word] = act
    return out


def logical_pauli_gates(code: CodeDefinition, label: str) -> list[Gate]:
    """Physical Paulis implementing the logical Pauli ``label`` (global phase ignored)."""
    p = code.logical(label)
    return [(p.label(q), (q,)) for q in p.support]


def rotation_to(code_name: str, source: str, target: str) -> tuple[tuple[str, ...], list[str]]:
    """A transversal word plus logical Paulis mapping the eigenstate ``source``
    (e.g. '-X') to ``target``. Prefers the shortest word."""
    for word in sorted(transversal_automorphisms(code_name), key=lambda w: (len(w), w)):
        # the state stabilized by s*L is mapped to the one stabilized by s*U L U^dagger
        img = transversal_logical_image(code_name, word, source[1])
        if img[1] != target[1]:
            continue
        sign = (1 if source[0] == "+" else -1) * (1 if img[0] == "+" else -1)
        fixes = []
        if sign != (1 if target[0] == "+" else -1):
            fixes = [{"X": "Z", "Z": "X", "Y": "Z"}[target[1]]]
        return word, fixes
    raise ValueError(f"no transversal rotation from {source} to {target}")


def transversal_logical_image(code_name: str, word: Sequence[str], label: str) -> str:
    code = code_definition(code_name)
    m = transversal_map(code.n, word)
    img = m.conjugate(code.logical(label))
    for cand in "XYZ":
        s = signed_membership(img * code.logical(cand), code.stabilizers)
        if s:
            return ("+" if s == 1 else "-") + cand
    raise ValueError("not a logical operator")
