"""Stabilizer and state-vector execution of circuits."""

from __future__ import annotations

import random
from typing import Optional

from ftlab.circuit import Circuit, FaultLocation, instrument
from ftlab.pauli import PauliString
from ftlab.sim.executor import (BranchBudgetExceeded, EngineError, ExecOptions, Executor,
                                shot_seed)
from ftlab.sim.records import BranchSet, ShotRecord, shots_to_csv, summarize
from ftlab.sim.statevector import DEFAULT_QUBIT_CAP, StateVector
from ftlab.tableau import StabilizerTableau

__all__ = [
    "BranchBudgetExceeded", "BranchSet", "EngineError", "ExecOptions", "ShotRecord",
    "enumerate_branches", "run_stabilizer", "run_statevector", "sample_shots", "shot_seed",
    "shots_to_csv", "summarize",
]


def _prepare(c: Circuit, noise, durations, backend: str) -> Circuit:
    if noise is None:
        return c
    from ftlab.noise import inject

    return inject(c, noise, durations, backend=backend)


def stabilizer_executor(c: Circuit, noise=None, durations=None,
                        options: Optional[ExecOptions] = None) -> Executor:
    return Executor(_prepare(c, noise, durations, "stabilizer"), StabilizerTableau, "stabilizer", options)


def statevector_executor(c: Circuit, noise=None, durations=None,
                         options: Optional[ExecOptions] = None,
                         cap: int = DEFAULT_QUBIT_CAP) -> Executor:
    if c.n_qubits > cap:
        raise EngineError(f"{c.n_qubits} qubits exceeds the state-vector cap of {cap}")
    return Executor(_prepare(c, noise, durations, "statevector"),
                    lambda n: StateVector(n, cap), "statevector", options)


def run_stabilizer(c: Circuit, noise=None, seed: int = 0, durations=None,
                   options: Optional[ExecOptions] = None) -> ShotRecord:
    """One Monte Carlo shot on the tableau engine."""
    return stabilizer_executor(c, noise, durations, options).sample(seed)


def run_statevector(c: Circuit, noise=None, seed: int = 0, durations=None,
                    options: Optional[ExecOptions] = None, random_dephasing: bool = False,
                    cap: int = DEFAULT_QUBIT_CAP) -> ShotRecord:
    """One shot with Born-rule sampling. ``random_dephasing`` draws a per-shot
    Gaussian factor for all dephasing angles instead of the fixed worst case."""
    opt = options or ExecOptions()
    if random_dephasing:
        opt = ExecOptions(opt.physical_corrections, opt.twirl_rz,
                          random.Random(seed ^ 0x5EED).gauss(0.0, 1.0), opt.max_branches)
    return statevector_executor(c, noise, durations, opt, cap).sample(seed)


def sample_shots(executor: Executor, shots: int, master_seed: int, start: int = 0) -> list[ShotRecord]:
    return [executor.sample(shot_seed(master_seed, i)) for i in range(start, start + shots)]


def enumerate_branches(c: Circuit, fault: Optional[tuple[FaultLocation, PauliString]] = None,
                       max_branches: int = 1 << 16, keep_state: bool = False) -> BranchSet:
    """All measurement branches of a noiseless circuit, optionally with one injected fault."""
    if fault is not None:
        c = instrument(c, *fault)
    ex = Executor(c, StabilizerTableau, "stabilizer", ExecOptions(max_branches=max_branches))
    return ex.enumerate(keep_state)
