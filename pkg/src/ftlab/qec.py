"""Syndrome extraction rounds (bare or flagged ancilla) and the adaptive QEC cycle."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional, Sequence

from ftlab.circuit import Circuit, CircuitBuilder, Condition, DecoderResult
from ftlab.decoding import FlagTable, TableConflict, build_flag_tables
from ftlab.gadgets import measure_pauli, sign_bit
from ftlab.pauli import PauliString


def _signs(gens: Sequence[PauliString]) -> tuple[int, ...]:
    return tuple(sign_bit(g) for g in gens)


def append_extraction(b: CircuitBuilder, gens: Sequence[PauliString], data: Sequence[int], anc: int,
                      flag: Optional[int], used: Optional[set] = None,
                      orders: Optional[Sequence[Sequence[int]]] = None) -> tuple[list[int], list[int]]:
    """Measure every generator with one (reused) ancilla, optionally flagged.
    Returns (outcome cbits, flag cbits). Outcomes are for the unsigned strings."""
    syn, flg = [], []
    for i, g in enumerate(gens):
        order = orders[i] if orders is not None else None
        m, f, _ = measure_pauli(b, g.unsigned(), data, anc, flag, order=order, used=used)
        syn.append(m)
        if f is not None:
            flg.append(f)
    return syn, flg


def syndrome_extraction_circuit(generators: Sequence[PauliString], flagged: bool,
                                orders: Optional[Sequence[Sequence[int]]] = None) -> Circuit:
    """Stand-alone round on data 0..n-1 with ancilla n and flag n+1."""
    gens = list(generators)
    n = gens[0].n
    b = CircuitBuilder(n + (2 if flagged else 1))
    used: set = set()
    syn, flg = append_extraction(b, gens, range(n), n, n + 1 if flagged else None, used, orders)
    return b.build(label="flagged_extraction" if flagged else "extraction", syndrome_cbits=tuple(syn),
                   flag_cbits=tuple(flg), data_qubits=tuple(range(n)), signs=_signs(gens))


def flag_tables_for(generators: Sequence[PauliString], base, logicals: Sequence[PauliString] = (),
                    extra_unflagged: Sequence[PauliString] = (), search: bool = True
                    ) -> tuple[FlagTable, tuple[tuple[int, ...], ...]]:
    """Flag tables for the flagged round, with the data-qubit order of each
    generator's measurement.

    A single fault in the measurement of generator i can only raise flag i and
    its data error does not depend on the other measurements, so orders are
    searched one generator at a time (support order first)."""
    gens = list(generators)
    n = gens[0].n
    orders = []
    for g in gens:
        candidates = itertools.permutations(g.support) if search else [tuple(g.support)]
        for perm in candidates:
            b = CircuitBuilder(n + 2)
            m, f, _ = measure_pauli(b, g.unsigned(), range(n), n, n + 1, order=perm)
            c = b.build(flag_cbits=(f,), data_qubits=tuple(range(n)))
            try:
                build_flag_tables(c, gens, logicals, base, extra_unflagged)
            except TableConflict:
                continue
            orders.append(tuple(perm))
            break
        else:
            raise TableConflict(f"no flag ordering for {g} yields consistent tables")
    full = syndrome_extraction_circuit(gens, True, orders)
    return build_flag_tables(full, gens, logicals, base, extra_unflagged), tuple(orders)


@dataclass(frozen=True)
class CycleDecoder:
    """Frame correction from a QEC cycle.

    ft=False: inputs are one round of outcomes. ft=True: inputs are the
    flags of the flagged round followed by the outcomes of the unflagged round.
    Outcomes are turned into syndromes with the generator signs."""

    table: object
    signs: tuple[int, ...]
    ft: bool

    def __call__(self, bits: Sequence[int]) -> DecoderResult:
        k = len(self.signs)
        if self.ft:
            flags, raw = bits[:k], bits[k:]
        else:
            flags, raw = (), bits
        syn = tuple(int(r) ^ s for r, s in zip(raw, self.signs))
        if isinstance(self.table, FlagTable):
            return DecoderResult(self.table.decode(flags, syn))
        return DecoderResult(self.table.decode(syn))


def append_qec_cycle(b: CircuitBuilder, gens: Sequence[PauliString], data: Sequence[int], anc: int,
                     flag: int, used: Optional[set], ft: bool, tag: str, table,
                     orders: Optional[Sequence[Sequence[int]]] = None) -> None:
    """ft=True: flagged round; when any flag fires or any syndrome is nontrivial, an
    unflagged round follows and the decoder runs. ft=False: one unflagged round
    followed by the decoder. ``table`` is a FlagTable (ft) or a syndrome table."""
    gens = list(gens)
    signs = _signs(gens)
    b.begin()
    if not ft:
        syn, _ = append_extraction(b, gens, data, anc, None, used)
        b.call(f"{tag}_decode", CycleDecoder(table, signs, False), syn, frame_qubits=data)
        b.end()
        return
    syn1, flg = append_extraction(b, gens, data, anc, flag, used, orders)
    value = sum(s << (len(flg) + i) for i, s in enumerate(signs))
    b.begin(Condition("eq", tuple(flg) + tuple(syn1), value, negate=True))
    syn2, _ = append_extraction(b, gens, data, anc, None, used)
    b.call(f"{tag}_decode", CycleDecoder(table, signs, True), tuple(flg) + tuple(syn2), frame_qubits=data)
    b.end()


def qec_cycle_circuit(generators: Sequence[PauliString], ft: bool, table,
                      orders: Optional[Sequence[Sequence[int]]] = None) -> Circuit:
    """Stand-alone cycle on data 0..n-1 with ancilla n and flag n+1."""
    gens = list(generators)
    n = gens[0].n
    if table is None:
        raise ValueError("a decoder table is required")
    b = CircuitBuilder(n + 2)
    append_qec_cycle(b, gens, range(n), n, n + 1, set(), ft, "qec", table, orders)
    return b.build(label="qec_ft" if ft else "qec")
