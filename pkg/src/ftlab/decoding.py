"""Fault propagation, lookup-table decoders and Pauli-frame bookkeeping."""

from __future__ import annotations

import hashlib
import itertools
import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

from ftlab.circuit import Circuit, DecoderCall, DecoderResult, FaultLocation, Instruction
from ftlab.pauli import (PauliString, apply_gate_bits, commutation_syndrome, gf2_solve,
                         group_product, in_span)

Syndrome = tuple[int, ...]


class DecodingError(ValueError):
    pass


class TableConflict(DecodingError):
    """Two reachable errors share a syndrome but differ by a logical operator."""


def _binding(generators: Sequence[PauliString]) -> str:
    return hashlib.sha256(",".join(str(g) for g in generators).encode()).hexdigest()[:16]


def _pauli_order_key(p: PauliString) -> tuple:
    # weight first, then letters (X<Y<Z) and qubit indices
    letters = [(p.label(q), q) for q in p.support]
    return (p.weight, [l for l, _ in letters], [q for _, q in letters])


def paulis_of_weight(n: int, w: int, letters: str = "XYZ", qubits: Optional[Sequence[int]] = None):
    """Deterministic enumeration: X<Y<Z first, then lowest qubit index."""
    qubits = list(range(n)) if qubits is None else list(qubits)
    out = []
    for qs in itertools.combinations(qubits, w):
        for ls in itertools.product(letters, repeat=w):
            out.append(PauliString.from_sparse(n, dict(zip(qs, ls))))
    if w == 1:
        out.sort(key=lambda p: (p.label(p.support[0]), p.support[0]))
    return out


# propagation -------------------------------------------------------------


@dataclass(frozen=True)
class Propagation:
    residual: PauliString  # over all circuit qubits
    flipped: tuple[int, ...]  # cbits whose outcome flips
    syndrome: Syndrome
    flags: tuple[int, ...]

    def data_error(self, data_qubits: Sequence[int]) -> PauliString:
        return self.residual.restrict(list(data_qubits)).unsigned()


def propagate_fault(c: Circuit, loc: Optional[FaultLocation], fault: Optional[PauliString]) -> Propagation:
    """Push a Pauli inserted at ``loc`` to the end of an unconditional Clifford circuit.

    Syndrome and flag bits follow ``metadata['syndrome_cbits']`` and
    ``metadata['flag_cbits']`` when present.
    """
    n = c.n_qubits
    x = z = 0
    started = loc is None
    if loc is None and fault is not None:
        x, z = fault.x, fault.z
    flipped = set()
    for b, block in enumerate(c.blocks):
        if block.condition is not None:
            raise DecodingError("propagate_fault needs an unconditional circuit")
        for i, op in enumerate(block.body):
            if isinstance(op, DecoderCall):
                raise DecodingError("propagate_fault cannot pass decoder calls")
            if not started and loc is not None and b == loc.block and i == loc.index and loc.when == "before":
                x, z = _inject(x, z, fault, loc)
                started = True
            k = op.kind
            if k == "Rz":
                raise DecodingError("non-Clifford instruction")
            if op.is_gate:
                x, z, _ = apply_gate_bits(x, z, 0, k, op.qubits)
            elif k == "measure":
                q = op.qubits[0]
                if (x >> q) & 1:
                    flipped ^= {op.cbit}
            elif k in ("prep0", "reset"):
                m = ~(1 << op.qubits[0])
                x &= m
                z &= m
            if not started and loc is not None and b == loc.block and i == loc.index and loc.when == "after":
                x, z = _inject(x, z, fault, loc)
                started = True
    if loc is not None and not started:
        raise DecodingError(f"location {loc} not found")
    residual = PauliString(n, x, z, (x & z).bit_count())
    syn = tuple(1 if cb in flipped else 0 for cb in c.metadata.get("syndrome_cbits", ()))
    flg = tuple(1 if cb in flipped else 0 for cb in c.metadata.get("flag_cbits", ()))
    return Propagation(residual, tuple(sorted(flipped)), syn, flg)


def _inject(x: int, z: int, fault: Optional[PauliString], loc: FaultLocation) -> tuple[int, int]:
    if fault is None:
        return x, z
    if fault.n != len(loc.qubits):
        raise DecodingError("fault does not match the location support")
    for j, q in enumerate(loc.qubits):
        x ^= ((fault.x >> j) & 1) << q
        z ^= ((fault.z >> j) & 1) << q
    return x, z


# tables ------------------------------------------------------------------


@dataclass
class LookupTable:
    generators: tuple[PauliString, ...]
    entries: dict[Syndrome, PauliString]
    binding: str = ""

    def __post_init__(self):
        if not self.binding:
            self.binding = _binding(self.generators)

    def __len__(self):
        return len(self.entries)

    def decode(self, syndrome: Sequence[int]) -> PauliString:
        s = tuple(int(b) for b in syndrome)
        if len(s) != len(self.generators):
            raise DecodingError(f"syndrome length {len(s)} != {len(self.generators)} generators")
        try:
            return self.entries[s]
        except KeyError:
            raise DecodingError(f"no entry for syndrome {s}") from None

    def to_json(self) -> dict:
        return {
            "generators": [str(g) for g in self.generators],
            "binding": self.binding,
            "entries": {"".join(map(str, k)): str(v) for k, v in sorted(self.entries.items())},
        }

    @classmethod
    def from_json(cls, d: Mapping) -> "LookupTable":
        gens = tuple(PauliString.from_str(g) for g in d["generators"])
        entries = {tuple(int(ch) for ch in k): PauliString.from_str(v) for k, v in d["entries"].items()}
        t = cls(gens, entries)
        if d.get("binding") and d["binding"] != t.binding:
            raise DecodingError("table binding does not match its generators")
        return t

    def check(self) -> None:
        """Every correction has the syndrome it is filed under."""
        for s, p in self.entries.items():
            if commutation_syndrome(p, self.generators) != s:
                raise DecodingError(f"entry {s} -> {p} has the wrong syndrome")
        zero = (0,) * len(self.generators)
        if zero in self.entries and not self.entries[zero].is_identity():
            raise DecodingError("trivial syndrome must map to the identity")


def table_from_errors(generators: Sequence[PauliString], errors: Iterable[PauliString],
                      fill_weight: int = 0, letters: str = "XYZ") -> LookupTable:
    """Table keyed by the syndromes of ``errors``; raises TableConflict when two
    errors with one syndrome are not stabilizer-equivalent. The first error seen
    for a syndrome is kept. ``fill_weight`` > 0 then covers unmatched syndromes
    with the lowest-weight Pauli found up to that weight."""
    gens = tuple(generators)
    n = gens[0].n
    entries: dict[Syndrome, PauliString] = {(0,) * len(gens): PauliString.identity(n)}
    for e in errors:
        e = e.unsigned()
        s = commutation_syndrome(e, gens)
        prev = entries.get(s)
        if prev is None:
            entries[s] = e
        elif not in_span(prev * e, gens):
            raise TableConflict(f"syndrome {s}: {prev} and {e} differ by a logical")
    for w in range(1, fill_weight + 1):
        if len(entries) == 1 << len(gens):
            break
        for p in paulis_of_weight(n, w, letters):
            s = commutation_syndrome(p, gens)
            if s not in entries:
                entries[s] = p
    return LookupTable(gens, entries)


def build_weight1_table(generators: Sequence[PauliString], logicals: Sequence[PauliString] = (),
                        letters: str = "XYZ", fill_weight: Optional[int] = None) -> LookupTable:
    """Weight-1 errors (X<Y<Z, then qubit) keyed by syndrome; unmatched syndromes are
    filled by a bounded search (weight <= 3 by default)."""
    gens = tuple(generators)
    _check_generators(gens, logicals)
    n = gens[0].n
    fill = min(3, n) if fill_weight is None else fill_weight
    # weight-1 entries are never in conflict for distance >= 3, but keep the first seen
    entries: dict[Syndrome, PauliString] = {(0,) * len(gens): PauliString.identity(n)}
    for p in paulis_of_weight(n, 1, letters):
        entries.setdefault(commutation_syndrome(p, gens), p)
    table = LookupTable(gens, entries)
    for w in range(2, fill + 1):
        if len(entries) == 1 << len(gens):
            break
        for p in paulis_of_weight(n, w, letters):
            entries.setdefault(commutation_syndrome(p, gens), p)
    return table


def _check_generators(gens: Sequence[PauliString], logicals: Sequence[PauliString]) -> None:
    for a, b in itertools.combinations(gens, 2):
        if not a.commutes(b):
            raise DecodingError(f"generators {a} and {b} anticommute")
    if len({g.n for g in gens}) != 1:
        raise DecodingError("generators of different lengths")
    from ftlab.pauli import gf2_rank

    n = gens[0].n
    if gf2_rank(g.x | (g.z << n) for g in gens) != len(gens):
        raise DecodingError("dependent generators")
    for lg in logicals:
        if not all(lg.commutes(g) for g in gens):
            raise DecodingError(f"logical {lg} does not commute with the generators")


@dataclass
class CSSTable:
    """Independent X and Z lookups for a CSS code.

    ``x_table`` is keyed by the Z-type checks and returns X corrections;
    ``z_table`` likewise with the roles swapped. Syndromes are given in the
    order of ``generators`` (X-type checks first is not assumed).
    """

    generators: tuple[PauliString, ...]
    x_table: LookupTable
    z_table: LookupTable
    x_rows: tuple[int, ...]  # positions of Z-type checks in ``generators``
    z_rows: tuple[int, ...]

    def decode(self, syndrome: Sequence[int]) -> PauliString:
        sx = tuple(syndrome[i] for i in self.x_rows)
        sz = tuple(syndrome[i] for i in self.z_rows)
        return self.x_table.decode(sx) * self.z_table.decode(sz)

    def __len__(self):
        return len(self.x_table) * len(self.z_table)

    def to_json(self) -> dict:
        return {"generators": [str(g) for g in self.generators], "x_rows": list(self.x_rows),
                "z_rows": list(self.z_rows), "x_table": self.x_table.to_json(),
                "z_table": self.z_table.to_json()}


def build_css_tables(generators: Sequence[PauliString]) -> CSSTable:
    gens = tuple(generators)
    _check_generators(gens, ())
    zrows = tuple(i for i, g in enumerate(gens) if g.x == 0)
    xrows = tuple(i for i, g in enumerate(gens) if g.z == 0)
    if len(zrows) + len(xrows) != len(gens):
        raise DecodingError("generators are not CSS")
    xt = build_weight1_table([gens[i] for i in zrows], letters="X")
    zt = build_weight1_table([gens[i] for i in xrows], letters="Z")
    return CSSTable(gens, xt, zt, zrows, xrows)


# flag tables ------------------------------------------------------------


@dataclass
class FlagTable:
    """Correction lookup keyed by (flag pattern, follow-up syndrome).

    The all-zero flag pattern is served by ``base`` (any object with ``decode``).
    """

    generators: tuple[PauliString, ...]
    base: object
    flagged: dict[tuple[int, ...], dict[Syndrome, PauliString]] = field(default_factory=dict)
    n_flags: int = 0
    binding: str = ""

    def __post_init__(self):
        if not self.binding:
            self.binding = _binding(self.generators)

    def decode(self, flags: Sequence[int], syndrome: Sequence[int]) -> PauliString:
        f = tuple(int(b) for b in flags)
        s = tuple(int(b) for b in syndrome)
        if any(f):
            sub = self.flagged.get(f)
            if sub is not None and s in sub:
                return sub[s]
        # unreachable under a single fault; fall back to the unflagged decoder
        return self.base.decode(s)

    def to_json(self) -> dict:
        return {
            "generators": [str(g) for g in self.generators],
            "binding": self.binding,
            "base": self.base.to_json(),
            "flagged": {"".join(map(str, f)): {"".join(map(str, s)): str(p) for s, p in sorted(sub.items())}
                        for f, sub in sorted(self.flagged.items())},
        }


def flagged_round_errors(extraction: Circuit, data_qubits: Sequence[int]):
    """(flag pattern, data error) for every single fault in ``extraction``."""
    from ftlab.circuit import fault_locations

    out = []
    for loc in fault_locations(extraction):
        for f in loc.faults():
            prop = propagate_fault(extraction, loc, f)
            out.append((prop.flags, prop.data_error(data_qubits), loc, f))
    return out


def build_flag_tables(extraction: Circuit, generators: Sequence[PauliString],
                      logicals: Sequence[PauliString] = (), base=None,
                      extra_unflagged: Iterable[PauliString] = ()) -> FlagTable:
    """Enumerate every single fault of a flagged round and tabulate the data
    errors reachable under each flag pattern.

    Errors reachable with no flag must be handled by ``base`` (default: the
    weight-1 table); a conflict raises TableConflict.
    """
    gens = tuple(generators)
    data = extraction.metadata.get("data_qubits", tuple(range(gens[0].n)))
    if base is None:
        base = build_weight1_table(gens, logicals)
    by_flag: dict[tuple[int, ...], dict[Syndrome, PauliString]] = {}
    unflagged = list(extra_unflagged)
    for flags, err, loc, f in flagged_round_errors(extraction, data):
        if not any(flags):
            unflagged.append(err)
            continue
        sub = by_flag.setdefault(flags, {(0,) * len(gens): PauliString.identity(len(data))})
        s = commutation_syndrome(err, gens)
        prev = sub.get(s)
        if prev is None:
            sub[s] = err
        elif not in_span(prev * err, gens):
            raise TableConflict(f"flags {flags} syndrome {s}: {prev} vs {err} ({loc})")
        elif _pauli_order_key(err) < _pauli_order_key(prev):
            sub[s] = err
    for err in unflagged:
        s = commutation_syndrome(err, gens)
        corr = base.decode(s)
        if not in_span(corr * err, gens):
            raise TableConflict(f"unflagged error {err} decoded to {corr}")
    return FlagTable(gens, base, by_flag, len(extraction.metadata.get("flag_cbits", ())))


def decode(tables, syndrome: Sequence[int], flags: Sequence[int] = ()) -> PauliString:
    """Correction for the given syndrome (and flags, for a FlagTable)."""
    if isinstance(tables, FlagTable):
        return tables.decode(flags, syndrome)
    if any(flags):
        raise DecodingError("flags given to an unflagged table")
    return tables.decode(syndrome)


def mod_syndrome_history(current: Sequence[int], history: Sequence[Sequence[int]],
                         generator_map: Optional[Sequence[Sequence[int]]] = None) -> Syndrome:
    """XOR ``current`` with earlier syndromes.

    ``generator_map[j]`` lists, for history entry ``j``, which of its bits
    combine into each current generator (generators conjugated through the
    intervening Cliffords); by default histories must align one to one.
    """
    out = [int(b) for b in current]
    for j, h in enumerate(history):
        if generator_map is None:
            if len(h) != len(out):
                raise DecodingError("misaligned syndrome history")
            for i, b in enumerate(h):
                out[i] ^= int(b)
        else:
            rows = generator_map[j]
            if len(rows) != len(out):
                raise DecodingError("misaligned generator map")
            for i, combo in enumerate(rows):
                for k in combo:
                    out[i] ^= int(h[k])
    return tuple(out)


# frame and recovery -------------------------------------------------------


class PauliFrame:
    """Software-tracked Pauli correction with an update log."""

    def __init__(self, n: int):
        self.pauli = PauliString.identity(n)
        self.log: list[PauliString] = []

    def update(self, p: PauliString) -> "PauliFrame":
        self.pauli = (self.pauli * p).unsigned()
        self.log.append(p)
        return self

    def through(self, gates: Iterable[tuple[str, Sequence[int]]]) -> "PauliFrame":
        x, z = self.pauli.x, self.pauli.z
        for g, qs in gates:
            x, z, _ = apply_gate_bits(x, z, 0, g, qs)
        self.pauli = PauliString(self.pauli.n, x, z, (x & z).bit_count())
        return self

    def flips(self, qubits: Sequence[int]) -> tuple[int, ...]:
        """Z-measurement flips implied by the frame on ``qubits``."""
        return tuple((self.pauli.x >> q) & 1 for q in qubits)


@dataclass(frozen=True)
class RecoveryDecomposition:
    logical: tuple[int, ...]  # exponents over (X_1, Z_1, X_2, Z_2, ...)
    stabilizer: tuple[int, ...]
    destabilizer: tuple[int, ...]


def decompose_recovery(p: PauliString, code) -> RecoveryDecomposition:
    """Write ``p`` (up to phase) as a product of logical, stabilizer and destabilizer generators."""
    if p.n != code.n:
        raise DecodingError("Pauli is not supported on the code block")
    logicals = []
    for lx, lz in zip(code.logical_x, code.logical_z):
        logicals += [lx, lz]
    basis = logicals + list(code.stabilizers) + list(code.destabilizers)
    e = gf2_solve(p, basis)
    if e is None:
        raise DecodingError("generator sets do not span the Pauli group")
    nl, ns = len(logicals), len(code.stabilizers)
    dec = RecoveryDecomposition(tuple(e[:nl]), tuple(e[nl:nl + ns]), tuple(e[nl + ns:]))
    if not group_product(basis, e).equal_up_to_phase(p):
        raise DecodingError("internal decomposition check failed")
    return dec


# decoder callables used by circuits --------------------------------------


@dataclass(frozen=True)
class SyndromeDecoder:
    """Inputs: syndrome bits. Output: frame correction on the data block."""

    table: object

    def __call__(self, bits: Sequence[int]) -> DecoderResult:
        return DecoderResult(self.table.decode(bits))


@dataclass(frozen=True)
class FlagDecoder:
    """Inputs: flag bits followed by the follow-up syndrome bits."""

    table: FlagTable

    def __call__(self, bits: Sequence[int]) -> DecoderResult:
        nf = self.table.n_flags
        return DecoderResult(self.table.decode(bits[:nf], bits[nf:]))


def tables_json(table) -> str:
    return json.dumps(table.to_json(), indent=2, sort_keys=True)
