"""Error model, noise injection, error scaling and dephasing-rate fitting."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, Mapping, Optional, Sequence

from ftlab.circuit import Block, Circuit, DecoderCall, Instruction

_DIAGONAL = ("S", "Sdg", "Z")


class NoiseError(ValueError):
    pass


@dataclass(frozen=True)
class NoiseModel:
    p_sq: float = 0.0
    p_tq: float = 0.0
    p_prep: float = 0.0
    p_meas: float = 0.0
    p_mcmr: float = 0.0
    leak_fraction: float = 0.0
    nu: float = 0.0
    name: str = "custom"

    def __post_init__(self):
        for f in ("p_sq", "p_tq", "p_prep", "p_meas", "p_mcmr", "leak_fraction"):
            v = getattr(self, f)
            if not 0.0 <= v <= 1.0:
                raise NoiseError(f"{f}={v} outside [0, 1]")
        if self.nu < 0:
            raise NoiseError("dephasing rate must be non-negative")

    @property
    def p_tq_channel(self) -> float:
        """Probability of a non-identity two-qubit Pauli after a CNOT.

        The leaked share is replaced by complete depolarization, which picks
        the identity one time in sixteen."""
        return self.p_tq * (1.0 - self.leak_fraction) + self.p_tq * self.leak_fraction * 15.0 / 16.0

    @property
    def is_noiseless(self) -> bool:
        return not any((self.p_sq, self.p_tq, self.p_prep, self.p_meas, self.p_mcmr, self.nu))

    def without_dephasing(self) -> "NoiseModel":
        return replace(self, nu=0.0)

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, d: Mapping) -> "NoiseModel":
        return cls(**{k: d[k] for k in d if k in cls.__dataclass_fields__})


# SPAM is attributed to measurement; the MCMR bound is used as the value
_PRESETS = {
    "H1-1": NoiseModel(p_sq=8e-5, p_tq=2.6e-3, p_prep=0.0, p_meas=2.76e-3, p_mcmr=4e-5, nu=0.172, name="H1-1"),
    "H1-2": NoiseModel(p_sq=5e-5, p_tq=2.1e-3, p_prep=0.0, p_meas=3.2e-3, p_mcmr=6e-5, nu=0.236, name="H1-2"),
}


def preset(name: str) -> NoiseModel:
    try:
        return _PRESETS[name]
    except KeyError:
        raise NoiseError(f"unknown preset {name!r}; choose from {sorted(_PRESETS)}") from None


def scaling_start(leak_fraction: float = 0.2) -> NoiseModel:
    """Starting point of the scaling study: H1-1 rates, dephasing at 0.08 Hz and a
    share of the two-qubit error treated as complete depolarization."""
    return replace(preset("H1-1"), nu=0.08, leak_fraction=leak_fraction, name="H1-1-scaling")


def scale(m: NoiseModel, lam: float) -> NoiseModel:
    """Multiply every probability and the dephasing rate by ``lam``."""
    if lam < 0:
        raise NoiseError("scale factor must be non-negative")
    vals = {f: getattr(m, f) * lam for f in ("p_sq", "p_tq", "p_prep", "p_meas", "p_mcmr")}
    for f, v in vals.items():
        if v > 1.0:
            raise NoiseError(f"scaled {f}={v} exceeds 1")
    return replace(m, nu=m.nu * lam, name=f"{m.name}*{lam:g}", **vals)


@dataclass(frozen=True)
class DurationModel:
    """Seconds per instruction kind; ``step`` is added to every quantum
    instruction to stand in for transport and cooling."""

    sq: float = 1.0e-4
    tq: float = 3.0e-4
    prep: float = 1.0e-4
    measure: float = 3.0e-4
    reset: float = 1.0e-4
    step: float = 2.5e-3
    overrides: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        for f in ("sq", "tq", "prep", "measure", "reset", "step"):
            if getattr(self, f) < 0:
                raise NoiseError(f"negative duration {f}")

    def of(self, ins: Instruction) -> float:
        if ins.duration is not None:
            return ins.duration if ins.kind == "idle" else ins.duration + self.step
        k = ins.kind
        if k in self.overrides:
            return self.overrides[k]
        if k == "CNOT":
            base = self.tq
        elif k in ("H", "S", "Sdg", "X", "Y", "Z"):
            base = self.sq
        elif k == "prep0":
            base = self.prep
        elif k == "measure":
            base = self.measure
        elif k == "reset":
            base = self.reset
        else:
            return 0.0
        return base + self.step

    def to_json(self) -> dict:
        d = asdict(self)
        d["overrides"] = dict(self.overrides)
        return d

    @classmethod
    def from_json(cls, d: Mapping) -> "DurationModel":
        return cls(**{k: d[k] for k in d if k in cls.__dataclass_fields__})


def circuit_duration(c: Circuit, d: Optional[DurationModel] = None) -> float:
    """Total time if every block executes."""
    d = d or DurationModel()
    return sum(d.of(op) for _, _, op in c.instructions() if isinstance(op, Instruction))


def inject(c: Circuit, m: NoiseModel, d: Optional[DurationModel] = None, backend: str = "stabilizer") -> Circuit:
    """Insert noise annotations.

    Gates are followed by depolarizing channels, preparations by X errors,
    measurements by classical flips, and mid-circuit measure/reset by X
    crosstalk on every other qubit. Dephasing accrues on every qubit at the
    rate ``nu`` over the instruction durations and is emitted as Rz just before
    the next non-diagonal operation on that qubit (statevector) or as its
    Pauli twirl (stabilizer). Accrued phase is discarded before measurement or
    preparation and flushed at the end of every block.
    """
    if backend not in ("stabilizer", "statevector"):
        raise NoiseError(f"unknown backend {backend}")
    d = d or DurationModel()
    n = c.n_qubits
    omega = 2.0 * math.pi * m.nu
    p2 = m.p_tq_channel
    blocks = []
    for block in c.blocks:
        body: list = []
        pending = [0.0] * n

        def flush(q):
            theta = omega * pending[q]
            pending[q] = 0.0
            if theta == 0.0:
                return
            if backend == "statevector":
                body.append(Instruction("Rz", (q,), angle=theta, label="dephasing"))
            else:
                p = math.sin(theta / 2.0) ** 2
                if p > 0:
                    body.append(Instruction("zerror", (q,), prob=p))

        for op in block.body:
            if isinstance(op, DecoderCall) or op.is_noise or op.kind == "cset":
                body.append(op)
                continue
            k = op.kind
            if omega > 0:
                for q in op.qubits:
                    if k in ("measure", "prep0", "reset"):
                        pending[q] = 0.0
                    elif k not in _DIAGONAL and not (k == "CNOT" and q == op.qubits[0]):
                        flush(q)
            body.append(op)
            if k == "CNOT":
                if p2 > 0:
                    body.append(Instruction("depolarize2", op.qubits, prob=p2))
            elif op.is_gate:
                if m.p_sq > 0:
                    body.append(Instruction("depolarize1", op.qubits, prob=m.p_sq))
            elif k in ("prep0", "reset"):
                if m.p_prep > 0:
                    body.append(Instruction("xerror", op.qubits, prob=m.p_prep))
            elif k == "measure":
                if m.p_meas > 0:
                    body.append(Instruction("mflip", (), cbit=op.cbit, prob=m.p_meas))
            if k in ("measure", "reset") and m.p_mcmr > 0:
                for q in range(n):
                    if q not in op.qubits:
                        body.append(Instruction("xerror", (q,), prob=m.p_mcmr))
            if omega > 0:
                dt = d.of(op)
                for q in range(n):
                    pending[q] += dt
        if omega > 0:
            for q in range(n):
                flush(q)
        blocks.append(Block(tuple(body), block.condition))
    meta = dict(c.metadata)
    meta["noise"] = m.name
    return replace(c, blocks=tuple(blocks), metadata=meta)


# dephasing fit -------------------------------------------------------------


@dataclass(frozen=True)
class FitResult:
    nu: float
    residuals: dict[float, float]
    degenerate: bool

    def to_json(self) -> dict:
        return {"nu": self.nu, "degenerate": self.degenerate,
                "residuals": {f"{k:.6g}": v for k, v in self.residuals.items()}}


def fit_dephasing(measured: Mapping[str, float], simulate: Callable[[str, float], float],
                  grid: Sequence[float]) -> FitResult:
    """Grid point minimizing sum_i (m_i - s_i(nu))^2.

    ``simulate(experiment, nu)`` returns the simulated value for one experiment.
    A flat residual profile is reported as degenerate rather than resolved.
    """
    if not grid:
        raise NoiseError("empty grid")
    res = {}
    for nu in grid:
        res[float(nu)] = math.fsum((mi - simulate(e, nu)) ** 2 for e, mi in measured.items())
    best = min(res, key=lambda k: (res[k], k))
    vals = list(res.values())
    degenerate = len(vals) > 1 and max(vals) - min(vals) <= 1e-15 * max(1.0, max(vals))
    return FitResult(best, res, degenerate)


def dumps(obj) -> str:
    return json.dumps(obj.to_json(), indent=2, sort_keys=True)
