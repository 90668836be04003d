import math

import pytest

from ftlab.circuit import CircuitBuilder, fault_locations
from ftlab.experiments import ExperimentSpec, build_experiment, expected_outputs
from ftlab.noise import DurationModel, NoiseModel, inject, preset
from ftlab.pauli import PauliString
from ftlab.runs import run_family, run_variant
from ftlab.sim import (EngineError, ExecOptions, BranchBudgetExceeded, enumerate_branches, run_stabilizer,
                       run_statevector, shots_to_csv, stabilizer_executor, sample_shots)

ZERO_TIME = DurationModel(sq=0, tq=0, prep=0, measure=0, reset=0, step=0)


def test_spam1f_noiseless_branches_are_correct():
    spec = ExperimentSpec("SPAM1f", "Z", 2)
    c = build_experiment(spec)
    exp = expected_outputs(spec)
    bs = enumerate_branches(c)
    assert math.isclose(bs.total_probability, 1.0, abs_tol=1e-12)
    for br in bs:
        assert br.accepted
        assert all(e is None or v == e for v, e in zip(br.logical, exp))


def test_branch_probabilities_are_dyadic():
    c = build_experiment(ExperimentSpec("CNOT2c", "X", 1))
    bs = enumerate_branches(c)
    assert math.isclose(bs.total_probability, 1.0, abs_tol=1e-12)
    for br in bs:
        k = -math.log2(br.probability)
        assert abs(k - round(k)) < 1e-12


def test_spam2c_noiseless_is_accepted_with_unit_fidelity():
    c = build_experiment(ExperimentSpec("SPAM2c", "X", 0))
    assert all(br.accepted for br in enumerate_branches(c))
    row = run_family("SPAM2c", "X", None, 20, 1)
    assert row.fidelity == 1.0 and row.acceptance == 1.0


def test_one_random_measurement_gives_two_branches():
    b = CircuitBuilder(1)
    b.op("prep0", 0).gate("H", 0)
    b.measure(0)
    bs = enumerate_branches(b.build())
    assert len(bs) == 2
    assert all(br.probability == 0.5 for br in bs)


def test_branch_budget():
    b = CircuitBuilder(4)
    for q in range(4):
        b.op("prep0", q).gate("H", q)
        b.measure(q)
    with pytest.raises(BranchBudgetExceeded):
        enumerate_branches(b.build(), max_branches=8)


def test_x_faults_in_cnot3f_are_corrected():
    spec = ExperimentSpec("CNOT3f", "Z", 0)
    c = build_experiment(spec)
    exp = expected_outputs(spec)
    locs = fault_locations(c)
    for loc in locs[:: max(1, len(locs) // 40)]:
        fault = PauliString.from_str("X" + "I" * (len(loc.qubits) - 1))
        for br in enumerate_branches(c, fault=(loc, fault)):
            if br.accepted:
                assert all(e is None or v == e for v, e in zip(br.logical, exp)), loc


def test_stabilizer_shots_are_deterministic():
    c = build_experiment(ExperimentSpec("CNOT1c", "Z", 1))
    m = preset("H1-1")
    a = run_stabilizer(c, m, seed=99)
    b = run_stabilizer(c, m, seed=99)
    assert a == b
    ex = stabilizer_executor(c, m)
    assert shots_to_csv(sample_shots(ex, 5, 7)) == shots_to_csv(sample_shots(ex, 5, 7))


def test_stabilizer_rejects_rz_without_twirl():
    b = CircuitBuilder(1)
    b.op("prep0", 0).op("Rz", 0, angle=0.2)
    b.measure(0)
    c = b.build()
    with pytest.raises(EngineError):
        run_stabilizer(c)
    run_stabilizer(c, options=ExecOptions(twirl_rz=True))


def _plus_idle_x(tau):
    b = CircuitBuilder(1)
    b.op("prep0", 0).gate("H", 0).op("idle", 0, duration=tau).gate("H", 0)
    b.measure(0)
    return b.build()


def test_coherent_half_turn_flips_plus():
    nu = 0.25
    tau = 0.5 / nu  # 2 pi nu tau = pi
    c = _plus_idle_x(tau)
    m = NoiseModel(nu=nu)
    for seed in range(5):
        assert run_statevector(c, m, seed=seed, durations=ZERO_TIME).raw == (1,)


def test_twirled_dephasing_probability():
    c = _plus_idle_x(0.4)
    m = NoiseModel(nu=0.5)
    noisy = inject(c, m, ZERO_TIME, backend="stabilizer")
    probs = [op.prob for _, _, op in noisy.instructions() if getattr(op, "kind", "") == "zerror"]
    assert probs == [pytest.approx(math.sin(math.pi * 0.5 * 0.4) ** 2)]


def test_statevector_noiseless_experiment():
    spec = ExperimentSpec("SPAM1f", "X", 1)
    counts = run_variant(spec, None, 10, 3, backend="statevector")
    assert counts.accepted == 10 and counts.wrong == (0, 0, 0)


def test_statevector_cap():
    b = CircuitBuilder(30)
    with pytest.raises(EngineError):
        run_statevector(b.build())


def test_backends_agree_on_pauli_noise():
    m = preset("H1-2").without_dephasing()
    spec = ExperimentSpec("CNOT1f", "X", 0)
    a = run_variant(spec, m, 1500, 1, backend="stabilizer")
    b = run_variant(spec, m, 1500, 2, backend="statevector")
    pa, pb = a.either_wrong / a.accepted, b.either_wrong / b.accepted
    sigma = math.sqrt(pa * (1 - pa) / a.accepted + pb * (1 - pb) / b.accepted)
    assert abs(pa - pb) <= 3 * max(sigma, 1e-3)


def test_cnot1f_bell_fidelity_near_reported_value():
    row = run_family("CNOT1f", "Bell", preset("H1-2"), 834, 2024)
    assert abs(row.fidelity - 0.928) <= 0.03
