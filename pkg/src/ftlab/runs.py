"""Monte Carlo runs of the experiments and their reduction to fidelities."""

from __future__ import annotations

import math
import os
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from ftlab.experiments import ExperimentSpec, build_experiment, expected_outputs, variants
from ftlab.noise import DurationModel, NoiseModel
from ftlab.sim import ExecOptions, sample_shots, statevector_executor, stabilizer_executor

WORKERS_ENV = "FTLAB_WORKERS"
BACKENDS = ("stabilizer", "statevector")


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class VariantCounts:
    """Per-variant tallies: ``wrong[i]`` counts accepted shots whose readout
    ``i`` (block 1, block 2, parity) disagrees with the ideal value;
    ``either_wrong`` counts shots where either block readout is wrong."""

    name: str
    shots: int
    accepted: int
    wrong: tuple[int, int, int]
    either_wrong: int


@dataclass(frozen=True)
class ResultRow:
    label: str
    basis: str  # X, Z or Bell
    fidelity: float
    stderr: float
    shots: int
    acceptance: float
    backend: str
    noise: str
    seed: int
    metadata: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return asdict(self)

    @property
    def error(self) -> float:
        return 1.0 - self.fidelity


CSV_COLUMNS = ("label", "basis", "fidelity", "stderr", "shots", "acceptance", "backend", "noise", "seed")


def variant_seed(master: int, spec: ExperimentSpec) -> int:
    return (master * 1_000_003 + zlib.crc32(spec.name().encode())) % (1 << 63)


def _executor(c, noise, durations, backend, options):
    if backend == "stabilizer":
        return stabilizer_executor(c, noise, durations, options)
    if backend == "statevector":
        return statevector_executor(c, noise, durations, options)
    raise ValueError(f"unknown backend {backend!r}")


def run_variant(spec: ExperimentSpec, noise: Optional[NoiseModel], shots: int, seed: int,
                backend: str = "stabilizer", durations: Optional[DurationModel] = None,
                options: Optional[ExecOptions] = None) -> VariantCounts:
    if shots <= 0:
        raise ValueError("shot count must be positive")
    c = build_experiment(spec)
    expected = expected_outputs(spec)
    ex = _executor(c, noise, durations, backend, options)
    acc = 0
    wrong = [0, 0, 0]
    either = 0
    for rec in sample_shots(ex, shots, variant_seed(seed, spec)):
        if not rec.accepted:
            continue
        acc += 1
        bad = [e is not None and v != e for v, e in zip(rec.logical, expected)]
        for i, b in enumerate(bad):
            wrong[i] += b
        either += bad[0] or bad[1]
    return VariantCounts(spec.name(), shots, acc, tuple(wrong), either)


def _job(args):
    return run_variant(*args)


def run_many(specs: Sequence[ExperimentSpec], noise, shots: int, seed: int, backend: str = "stabilizer",
             durations=None, options=None, workers: Optional[int] = None) -> list[VariantCounts]:
    """Run variants, in parallel when ``workers`` > 1; results keep input order."""
    jobs = [(s, noise, shots, seed, backend, durations, options) for s in specs]
    workers = default_workers() if workers is None else workers
    if workers <= 1 or len(jobs) <= 1:
        return [_job(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_job, jobs))


def _rate(k: int, n: int) -> tuple[float, float]:
    if n == 0:
        return float("nan"), float("nan")
    p = k / n
    return p, math.sqrt(p * (1 - p) / n)


def reduce_family(label: str, family: str, counts: Sequence[VariantCounts]) -> tuple[float, float, float]:
    """(fidelity, stderr, acceptance) for one input family.

    X/Z with a CNOT: both blocks must be right. X/Z without a CNOT: average of
    the two single-block success rates. Bell: F = 1 - (e_X + e_Y + e_Z)/2 from
    the parity error rates, averaged over the four Bell states."""
    shots = sum(c.shots for c in counts)
    acceptance = sum(c.accepted for c in counts) / shots
    has_cnot = ExperimentSpec(label).has_cnot
    vals, vars_ = [], []
    if family == "Bell":
        by_row: dict[str, list[VariantCounts]] = {}
        for c in counts:
            by_row.setdefault(c.name.rsplit("-", 1)[0], []).append(c)
        for row in by_row.values():
            f, v = 1.0, 0.0
            for c in row:
                e, s = _rate(c.wrong[2], c.accepted)
                f -= e / 2
                v += (s / 2) ** 2
            vals.append(f)
            vars_.append(v)
    else:
        for c in counts:
            if has_cnot:
                e, s = _rate(c.either_wrong, c.accepted)
                vals.append(1 - e)
                vars_.append(s * s)
            else:
                e1, s1 = _rate(c.wrong[0], c.accepted)
                e2, s2 = _rate(c.wrong[1], c.accepted)
                vals.append(1 - (e1 + e2) / 2)
                vars_.append((s1 * s1 + s2 * s2) / 4)
    k = len(vals)
    return float(np.mean(vals)), math.sqrt(sum(vars_)) / k, acceptance


def family_specs(label: str, family: str) -> list[ExperimentSpec]:
    return [s for s in variants(label) if s.family == family]


def run_family(label: str, family: str, noise, shots: int, seed: int, backend: str = "stabilizer",
               durations=None, options=None, workers: Optional[int] = None) -> ResultRow:
    counts = run_many(family_specs(label, family), noise, shots, seed, backend, durations, options, workers)
    f, s, a = reduce_family(label, family, counts)
    return ResultRow(label, family, f, s, sum(c.shots for c in counts), a, backend,
                     noise.name if noise is not None else "noiseless", seed,
                     {"variants": [c.name for c in counts]})


def families(label: str) -> tuple[str, ...]:
    return ("X", "Z", "Bell") if ExperimentSpec(label).has_cnot else ("X", "Z")


def rows_to_csv(rows: Sequence[ResultRow]) -> str:
    import csv
    import io

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow([r.label, r.basis, f"{r.fidelity:.6f}", f"{r.stderr:.6f}", r.shots,
                    f"{r.acceptance:.6f}", r.backend, r.noise, r.seed])
    return buf.getvalue()


# scaling study ---------------------------------------------------------------


def scaling_scan(labels: Sequence[str], lambdas: Sequence[float], shots: int, seed: int,
                 family: str = "Bell", start: Optional[NoiseModel] = None, durations=None,
                 workers: Optional[int] = None) -> list[ResultRow]:
    """One row per (label, lambda) with every rate of ``start`` scaled by lambda."""
    from ftlab.noise import scale, scaling_start

    start = start or scaling_start()
    rows = []
    for label in labels:
        for lam in lambdas:
            r = run_family(label, family, scale(start, lam), shots, seed, durations=durations, workers=workers)
            rows.append(ResultRow(r.label, r.basis, r.fidelity, r.stderr, r.shots, r.acceptance, r.backend,
                                  r.noise, r.seed, {"lambda": lam}))
    return rows


def loglog_slope(lambdas: Sequence[float], errors: Sequence[float], stderrs: Sequence[float]) -> float:
    """Weighted least-squares slope of log10(error) against log10(lambda);
    points with no observed error carry no information and are skipped."""
    pts = [(l, e, s) for l, e, s in zip(lambdas, errors, stderrs) if e > 0]
    if len(pts) < 2:
        raise ValueError("need at least two points with nonzero error")
    x = np.log10([p[0] for p in pts])
    y = np.log10([p[1] for p in pts])
    w = np.array([(p[1] / max(p[2], 1e-12)) ** 2 for p in pts])
    xm, ym = np.average(x, weights=w), np.average(y, weights=w)
    return float(np.sum(w * (x - xm) * (y - ym)) / np.sum(w * (x - xm) ** 2))


def monotone_within(errors: Sequence[float], stderrs: Sequence[float], k: float = 3.0) -> bool:
    """Errors listed by increasing lambda never drop by more than k combined sigma."""
    return all(b >= a - k * math.hypot(sa, sb)
               for (a, sa), (b, sb) in zip(zip(errors, stderrs), zip(errors[1:], stderrs[1:])))


# dephasing fit ---------------------------------------------------------------


def fidelity_simulator(base: NoiseModel, shots: int, seed: int, durations=None, workers: Optional[int] = None):
    """simulate("LABEL:FAMILY", nu) -> fidelity, with the same seed for every nu
    so that grid points share random numbers."""
    from dataclasses import replace

    def simulate(experiment: str, nu: float) -> float:
        label, family = experiment.split(":")
        return run_family(label, family, replace(base, nu=nu), shots, seed, durations=durations,
                          workers=workers).fidelity

    return simulate
