"""Exhaustive single-fault verification.

Every fault location of a circuit is instrumented with every applicable Pauli,
all measurement branches are enumerated on the stabilizer engine, and each
accepted branch is handed to a judge. Rejected branches (post-selection) are
not failures.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

from ftlab.circuit import Circuit, FaultLocation, fault_locations
from ftlab.pauli import PauliString
from ftlab.sim import enumerate_branches
from ftlab.sim.executor import BranchBudgetExceeded
from ftlab.sim.records import ShotRecord

Judge = Callable[[ShotRecord], bool]


@dataclass
class Counterexample:
    location: FaultLocation
    fault: PauliString
    branch: tuple[int, ...]
    detail: str = ""

    def to_json(self) -> dict:
        loc = self.location
        return {"block": loc.block, "index": loc.index, "when": loc.when, "qubits": list(loc.qubits),
                "fault": str(self.fault), "branch": list(self.branch), "detail": self.detail}


@dataclass
class FTReport:
    total_faults: int = 0
    failures: int = 0
    budget_exceeded: int = 0
    branches: int = 0
    counterexamples: list[Counterexample] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.failures == 0 and self.budget_exceeded == 0

    def to_json(self) -> dict:
        return {"total_faults": self.total_faults, "failures": self.failures,
                "budget_exceeded": self.budget_exceeded, "branches": self.branches,
                "passed": self.passed,
                "first_counterexample": self.counterexamples[0].to_json() if self.counterexamples else None}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)


def reference_outputs(c: Circuit, max_branches: int = 1 << 16) -> tuple[Optional[int], ...]:
    """Logical outputs of the fault-free circuit; None where they vary between branches."""
    bs = enumerate_branches(c, max_branches=max_branches)
    acc = [r for r in bs.branches if r.accepted]
    if not acc:
        raise ValueError("fault-free circuit rejects every branch")
    ref = list(acc[0].logical)
    for r in acc[1:]:
        for i, v in enumerate(r.logical):
            if ref[i] is not None and ref[i] != v:
                ref[i] = None
    return tuple(ref)


def logical_judge(expected: Sequence[Optional[int]]) -> Judge:
    """Accepted branches must reproduce every deterministic logical output."""
    def judge(rec: ShotRecord) -> bool:
        return all(e is None or e == v for e, v in zip(expected, rec.logical))
    return judge


def correctable_errors(n: int, css: bool = False, max_weight: int = 1) -> list[PauliString]:
    """Weight <= max_weight Paulis, or for ``css`` products of an X part and a Z
    part each of weight <= max_weight."""
    from ftlab.decoding import paulis_of_weight

    if not css:
        out = [PauliString.identity(n)]
        for w in range(1, max_weight + 1):
            out.extend(paulis_of_weight(n, w))
        return out
    xs = [p for p in correctable_errors(n, False, max_weight) if p.z == 0]
    zs = [p for p in correctable_errors(n, False, max_weight) if p.x == 0]
    return [a * b for a in xs for b in zs]


def residual_judge(data_qubits: Sequence[int], generators: Sequence[PauliString], max_weight: int = 1,
                   css: bool = False) -> Judge:
    """The data block must equal E|psi> with E in ``correctable_errors``, where
    |psi> is the state stabilized by the signed ``generators`` (a complete set)."""
    from ftlab.pauli import commutation_syndrome

    gens = list(generators)
    allowed = {commutation_syndrome(p, gens) for p in correctable_errors(len(data_qubits), css, max_weight)}

    def judge(rec: ShotRecord) -> bool:
        st = rec.state
        if st is None:
            raise ValueError("residual_judge needs branch states (keep_state=True)")
        frame = rec.frame.restrict(data_qubits)
        pattern = []
        for g in gens:
            v = st.expectation(g.embed(st.n, data_qubits))
            if v == 0:
                return False
            if not frame.commutes(g):
                v = -v
            pattern.append(0 if v == 1 else 1)
        return tuple(pattern) in allowed
    return judge


def sweep(c: Circuit, judge: Judge, max_branches: int = 1 << 12, keep_state: bool = False,
          locations: Optional[Sequence[FaultLocation]] = None, max_counterexamples: int = 5,
          stop_at_first: bool = False) -> FTReport:
    """Run ``judge`` on every accepted branch under every single fault."""
    rep = FTReport()
    locs = fault_locations(c) if locations is None else locations
    for loc in locs:
        for f in loc.faults():
            rep.total_faults += 1
            try:
                bs = enumerate_branches(c, fault=(loc, f), max_branches=max_branches, keep_state=keep_state)
            except BranchBudgetExceeded:
                rep.budget_exceeded += 1
                continue
            rep.branches += len(bs)
            for r in bs.branches:
                if r.accepted and not judge(r):
                    rep.failures += 1
                    if len(rep.counterexamples) < max_counterexamples:
                        rep.counterexamples.append(Counterexample(loc, f, r.branch, f"logical={r.logical}"))
                    break
            if stop_at_first and rep.failures:
                return rep
    return rep


def verify_logical(c: Circuit, max_branches: int = 1 << 12, stop_at_first: bool = False) -> FTReport:
    """Sweep with the fault-free deterministic outputs as reference."""
    return sweep(c, logical_judge(reference_outputs(c, max_branches)), max_branches,
                 stop_at_first=stop_at_first)
