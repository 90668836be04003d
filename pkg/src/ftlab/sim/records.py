"""Shot records, branch sets and their serialization."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from ftlab.pauli import PauliString


@dataclass(frozen=True)
class ShotRecord:
    raw: tuple[int, ...]
    flips: tuple[int, ...]
    frame: PauliString
    logical: tuple[int, ...]
    accepted: bool
    seed: Optional[int] = None
    probability: float = 1.0
    branch: tuple[int, ...] = ()
    input_index: int = 0
    state: object = field(default=None, compare=False, repr=False)

    @property
    def cbits(self) -> tuple[int, ...]:
        """Frame-adjusted classical bits."""
        return tuple(r ^ f for r, f in zip(self.raw, self.flips))

    @property
    def logical_values(self) -> tuple[int, ...]:
        """Logical outcomes as eigenvalues +1/-1."""
        return tuple(1 - 2 * b for b in self.logical)


@dataclass
class BranchSet:
    branches: list[ShotRecord] = field(default_factory=list)

    def __iter__(self):
        return iter(self.branches)

    def __len__(self):
        return len(self.branches)

    @property
    def total_probability(self) -> float:
        return math.fsum(b.probability for b in self.branches)

    def accepted(self) -> list[ShotRecord]:
        return [b for b in self.branches if b.accepted]


def shots_to_csv(shots: Iterable[ShotRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["seed", "input", "cbits", "accepted", "logical"])
    for s in shots:
        w.writerow([s.seed, s.input_index, "".join(map(str, s.cbits)), int(s.accepted),
                    "".join(map(str, s.logical))])
    return buf.getvalue()


def summarize(shots: Sequence[ShotRecord]) -> dict:
    """Counts of logical outcome strings among accepted shots, plus acceptance rate."""
    counts: dict[str, int] = {}
    acc = 0
    for s in shots:
        if s.accepted:
            acc += 1
            key = "".join(map(str, s.logical))
            counts[key] = counts.get(key, 0) + 1
    n = len(shots)
    rate = acc / n if n else float("nan")
    return {
        "shots": n,
        "accepted": acc,
        "acceptance_rate": rate,
        "acceptance_stderr": math.sqrt(rate * (1 - rate) / n) if n else float("nan"),
        "counts": dict(sorted(counts.items())),
    }


def summary_json(shots: Sequence[ShotRecord], **extra) -> str:
    d = summarize(shots)
    d.update(extra)
    return json.dumps(d, indent=2, sort_keys=True)
