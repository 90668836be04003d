"""State fidelities from shot data, Choi-matrix utilities and SDP bounds on
the average fidelity of a two-qubit gate from partial state-fidelity data."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import cvxpy as cp
import numpy as np

TOL = 1e-9


class FidelityError(ValueError):
    pass


class InfeasibleConstraints(FidelityError):
    def __init__(self, msg: str, violation: float):
        super().__init__(f"{msg} (max constraint violation {violation:.3g})")
        self.violation = violation


# states and gates ------------------------------------------------------------

KET = {
    "0": np.array([1, 0], complex),
    "1": np.array([0, 1], complex),
    "+": np.array([1, 1], complex) / math.sqrt(2),
    "-": np.array([1, -1], complex) / math.sqrt(2),
}
PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], complex),
    "Y": np.array([[0, -1j], [1j, 0]], complex),
    "Z": np.diag([1, -1]).astype(complex),
}
CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], complex)

# input labels of the three truth tables (control first)
X_STATES = ("++", "+-", "-+", "--")
Z_STATES = ("00", "01", "10", "11")
BELL_STATES = ("+0", "-0", "+1", "-1")
ALL_STATES = X_STATES + Z_STATES + BELL_STATES


def product_ket(label: str) -> np.ndarray:
    out = np.ones(1, complex)
    for ch in label:
        out = np.kron(out, KET[ch])
    return out


def projector(psi: np.ndarray) -> np.ndarray:
    return np.outer(psi, psi.conj())


def _check_unitary(u: np.ndarray) -> np.ndarray:
    u = np.asarray(u, complex)
    if u.ndim != 2 or u.shape[0] != u.shape[1] or not np.allclose(u.conj().T @ u, np.eye(len(u)), atol=1e-10):
        raise FidelityError("matrix is not unitary")
    return u


# Choi matrices ------------------------------------------------------------------


@dataclass(frozen=True)
class ChoiMatrix:
    """chi = (I (x) E)(|phi><phi|) with |phi> = sum_i |ii>/sqrt(d); trace one."""

    d: int
    chi: np.ndarray

    def validate(self, tol: float = 1e-8) -> None:
        c = self.chi
        if c.shape != (self.d ** 2, self.d ** 2):
            raise FidelityError("Choi matrix has the wrong shape")
        if not np.allclose(c, c.conj().T, atol=tol):
            raise FidelityError("Choi matrix is not Hermitian")
        if np.linalg.eigvalsh((c + c.conj().T) / 2).min() < -tol:
            raise FidelityError("Choi matrix is not positive semidefinite")
        if not np.allclose(partial_trace_out(c, self.d), np.eye(self.d) / self.d, atol=tol):
            raise FidelityError("Choi matrix violates the trace-preservation constraint")


def partial_trace_out(chi: np.ndarray, d: int) -> np.ndarray:
    """Trace over the second (output) factor."""
    return np.trace(chi.reshape(d, d, d, d), axis1=1, axis2=3)


def max_entangled(d: int) -> np.ndarray:
    return np.eye(d, dtype=complex).reshape(d * d) / math.sqrt(d)


def choi_of_kraus(kraus: Sequence[np.ndarray]) -> ChoiMatrix:
    d = kraus[0].shape[1]
    phi = max_entangled(d)
    chi = np.zeros((d * d, d * d), complex)
    for k in kraus:
        v = np.kron(np.eye(d), k) @ phi
        chi += np.outer(v, v.conj())
    return ChoiMatrix(d, chi)


def choi_of_unitary(u: np.ndarray) -> ChoiMatrix:
    return choi_of_kraus([_check_unitary(u)])


def apply_via_choi(ch: ChoiMatrix, rho: np.ndarray) -> np.ndarray:
    """E(rho) = d Tr_1[chi (rho^T (x) I)]."""
    d = ch.d
    m = ch.chi @ np.kron(rho.T, np.eye(d))
    return d * np.trace(m.reshape(d, d, d, d), axis1=0, axis2=2)


def process_fidelity(ch: ChoiMatrix, u: np.ndarray) -> float:
    return float(np.real(np.trace(ch.chi @ choi_of_unitary(u).chi)))


def avg_fidelity(f: float, d: int) -> float:
    return (d * f + 1.0) / (d + 1.0)


def depolarized_unitary_kraus(u: np.ndarray, p: float) -> list[np.ndarray]:
    """Kraus operators of rho -> (1-p) U rho U^dag + p I/d (d a power of two)."""
    d = u.shape[0]
    nq = int(round(math.log2(d)))
    paulis = [np.ones((1, 1), complex)]
    for _ in range(nq):
        paulis = [np.kron(a, PAULI[k]) for a in paulis for k in "IXYZ"]
    out = [math.sqrt(1 - p + p / d ** 2) * u]
    out += [math.sqrt(p / d ** 2) * P @ u for P in paulis[1:]]
    return out


def random_channel(d: int, rng: np.random.Generator, kraus_rank: int = 4) -> ChoiMatrix:
    """Random CPTP map from a Haar-like isometry (Stinespring)."""
    g = rng.normal(size=(d * kraus_rank, d)) + 1j * rng.normal(size=(d * kraus_rank, d))
    q, _ = np.linalg.qr(g)
    return choi_of_kraus([q[i * d:(i + 1) * d, :] for i in range(kraus_rank)])


def noisy_unitary_channel(u: np.ndarray, rng: np.random.Generator, strength: float) -> ChoiMatrix:
    """Mixture of the ideal unitary and a random channel: stays near the target."""
    d = u.shape[0]
    ideal = choi_of_unitary(u).chi
    other = random_channel(d, rng).chi
    return ChoiMatrix(d, (1 - strength) * ideal + strength * other)


# state fidelities from data ----------------------------------------------------

_BELL_SIGNS = {"+0": (1, -1, 1), "-0": (-1, 1, 1), "+1": (1, 1, -1), "-1": (-1, -1, -1)}


def cnot_output(label: str) -> np.ndarray:
    return CNOT @ product_ket(label)


def bell_signs(label: str) -> tuple[int, int, int]:
    """Signs of <XX>, <YY>, <ZZ> on CNOT|label> for a mixed-family input."""
    try:
        return _BELL_SIGNS[label]
    except KeyError:
        raise FidelityError(f"{label!r} is not a Bell-family input") from None


def bell_fidelity(xx: float, yy: float, zz: float, signs: Sequence[int] = (1, -1, 1)) -> float:
    """Overlap with the Bell state whose correlators are ``signs``."""
    for v in (xx, yy, zz):
        if not -1 - TOL <= v <= 1 + TOL:
            raise FidelityError(f"expectation {v} outside [-1, 1]")
    sx, sy, sz = signs
    return 0.25 * (1 + sx * xx + sy * yy + sz * zz)


def state_fidelity_from_counts(outcomes: Sequence[Sequence[int]], expected: Sequence[int]) -> tuple[float, float]:
    """Fraction of accepted shots whose logical bits all match ``expected``,
    with the binomial standard error."""
    n = len(outcomes)
    if n == 0:
        raise FidelityError("no shots")
    k = len(expected)
    hits = 0
    for o in outcomes:
        if len(o) < k:
            raise FidelityError("outcome shorter than the expected bit string")
        hits += all(int(a) == int(b) for a, b in zip(o, expected))
    f = hits / n
    return f, math.sqrt(f * (1 - f) / n)


def correlator_from_bits(bits: Sequence[int]) -> tuple[float, float]:
    """<P P> from parity bits (0 -> +1); returns (mean, standard error)."""
    n = len(bits)
    if n == 0:
        raise FidelityError("no shots")
    vals = np.array([1 - 2 * int(b) for b in bits], float)
    m = float(vals.mean())
    return m, math.sqrt(max(1 - m * m, 0.0) / n)


def bell_fidelity_from_parities(label: str, xx_bits, yy_bits, zz_bits) -> tuple[float, float]:
    (xx, ex), (yy, ey), (zz, ez) = (correlator_from_bits(b) for b in (xx_bits, yy_bits, zz_bits))
    f = bell_fidelity(xx, yy, zz, bell_signs(label))
    return f, 0.25 * math.sqrt(ex ** 2 + ey ** 2 + ez ** 2)


# POVMs -----------------------------------------------------------------------


@dataclass(frozen=True)
class POVMSet:
    """Single-qubit readout model from p(i|j). ``z_err`` = (p(1|0), p(0|1)),
    ``x_err`` = (p(-|+), p(+|-)). Elements are diagonal in their own basis."""

    z_err: tuple[float, float] = (0.0, 0.0)
    x_err: tuple[float, float] = (0.0, 0.0)

    @classmethod
    def symmetric(cls, x_spam_fidelity: float, z_spam_fidelity: float) -> "POVMSet":
        ex, ez = 1 - x_spam_fidelity, 1 - z_spam_fidelity
        return cls((ez, ez), (ex, ex))

    def element(self, outcome: str) -> np.ndarray:
        if outcome in "01":
            e10, e01 = self.z_err
            diag = (1 - e10, e01) if outcome == "0" else (e10, 1 - e01)
            basis = [KET["0"], KET["1"]]
        elif outcome in "+-":
            emp, epm = self.x_err
            diag = (1 - emp, epm) if outcome == "+" else (emp, 1 - epm)
            basis = [KET["+"], KET["-"]]
        else:
            raise FidelityError(f"unknown outcome {outcome!r}")
        m = sum(w * projector(v) for w, v in zip(diag, basis))
        if np.linalg.eigvalsh(m).min() < -TOL:
            raise FidelityError("POVM element is not positive semidefinite")
        return m

    def two_qubit(self, outcomes: str) -> np.ndarray:
        return np.kron(self.element(outcomes[0]), self.element(outcomes[1]))

    def check(self) -> None:
        for a, b in (("0", "1"), ("+", "-")):
            if not np.allclose(self.element(a) + self.element(b), np.eye(2)):
                raise FidelityError("POVM elements do not sum to the identity")

    def to_json(self) -> dict:
        return {"z_err": list(self.z_err), "x_err": list(self.x_err)}


# constraints and the SDP -----------------------------------------------------------


@dataclass(frozen=True)
class FidelityConstraint:
    """Tr(chi A) in [lo/d, hi/d] with A = |psi><psi|^T (x) U E U^dag."""

    label: str
    A: np.ndarray
    lo: float
    hi: float

    def to_json(self) -> dict:
        return {"label": self.label, "lo": self.lo, "hi": self.hi}


def _interval(f: float, eps: float) -> tuple[float, float]:
    lo, hi = min(max(f - eps, 0.0), 1.0), min(max(f + eps, 0.0), 1.0)
    if lo > hi:
        raise FidelityError("empty fidelity interval")
    return lo, hi


def _observable(povm: POVMSet, basis: str) -> np.ndarray:
    """E_+ - E_- of one qubit; Y readout is modeled with the X-basis error rates."""
    if basis == "Z":
        return povm.element("0") - povm.element("1")
    ox = povm.element("+") - povm.element("-")
    if basis == "X":
        return ox
    r = np.array([[1, 0], [0, 1j]], complex)  # S maps X to Y
    return r @ ox @ r.conj().T


def measured_operator(label: str, u: np.ndarray = CNOT, povm: Optional[POVMSet] = None) -> np.ndarray:
    """Operator on the gate output whose expectation is the reported fidelity.

    Without a POVM this is the ideal output projector. With one, product
    outputs use the noisy two-qubit element of the expected outcome string,
    and Bell outputs use the three noisy correlators."""
    psi = product_ket(label)
    if povm is None:
        return u @ projector(psi) @ u.conj().T
    povm.check()
    if label in BELL_STATES:
        sx, sy, sz = bell_signs(label)
        op = np.eye(4, dtype=complex)
        for s, b in ((sx, "X"), (sy, "Y"), (sz, "Z")):
            o = _observable(povm, b)
            op = op + s * np.kron(o, o)
        return op / 4
    return povm.two_qubit(_cnot_product_label(label, u))


def make_constraint(label: str, f: float, eps: float, u: np.ndarray = CNOT,
                    povm: Optional[POVMSet] = None) -> FidelityConstraint:
    psi = product_ket(label)
    A = np.kron(projector(psi).T, measured_operator(label, u, povm))
    lo, hi = _interval(f, eps)
    return FidelityConstraint(label, A, lo, hi)


def constraints_from_data(data: Mapping[str, tuple[float, float]], u: np.ndarray = CNOT,
                          povm: Optional[POVMSet] = None) -> list[FidelityConstraint]:
    """``data`` maps input labels (e.g. '+-', '10', '+0') to (f, eps)."""
    return [make_constraint(k, f, e, u, povm) for k, (f, e) in data.items()]


def spam_corrected_constraints(povm: POVMSet, data: Mapping[str, tuple[float, float]],
                               u: np.ndarray = CNOT) -> list[FidelityConstraint]:
    """Constraints built with the noisy measurement operators of ``povm``
    (state preparation is taken as perfect)."""
    return constraints_from_data(data, u, povm)


def _cnot_product_label(label: str, u: np.ndarray) -> str:
    out = u @ product_ket(label)
    letters = "01" if set(label) <= set("01") else "+-"
    for a in letters:
        for b in letters:
            if abs(abs(np.vdot(product_ket(a + b), out)) - 1) < 1e-9:
                return a + b
    raise FidelityError(f"output of {label!r} is not a product state")


@dataclass
class Bounds:
    lo: float
    hi: float
    process: tuple[float, float] = (0.0, 0.0)
    diagnostics: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"lo": self.lo, "hi": self.hi, "process_lo": self.process[0],
                "process_hi": self.process[1], "diagnostics": self.diagnostics}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)


def _solve(prob: cp.Problem) -> None:
    """SCS at tight tolerances closes the duality gap to ~1e-11 on these small
    problems, where interior-point codes stall near 1e-7; Clarabel is the
    fallback when SCS does not converge."""
    try:
        prob.solve(solver=cp.SCS, eps_abs=1e-11, eps_rel=1e-11, max_iters=100_000)
        if prob.status == "optimal":
            return
    except cp.error.SolverError:
        pass
    prob.solve(solver=cp.CLARABEL, tol_gap_abs=1e-10, tol_gap_rel=1e-10, tol_feas=1e-10, max_iter=400)


def _primal(cons: Sequence[FidelityConstraint], C: np.ndarray, d: int):
    chi = cp.Variable((d * d, d * d), hermitian=True)
    rows = [chi >> 0, cp.partial_trace(chi, [d, d], axis=1) == np.eye(d) / d]
    for c in cons:
        t = cp.real(cp.trace(chi @ c.A))
        if c.hi - c.lo <= 0:
            rows.append(t == c.lo / d)
        else:
            rows += [t >= c.lo / d, t <= c.hi / d]
    prob = cp.Problem(cp.Minimize(cp.real(cp.trace(chi @ C))), rows)
    _solve(prob)
    return prob, chi


def _dual(cons: Sequence[FidelityConstraint], C: np.ndarray, d: int):
    """max sum(a l - b h)/d + Tr(W)/d  s.t.  C - sum (a - b) A - W (x) I >= 0, a, b >= 0."""
    W = cp.Variable((d, d), hermitian=True)
    slack = C - cp.kron(W, np.eye(d))
    obj = cp.real(cp.trace(W)) / d
    for c in cons:
        if c.hi - c.lo <= 0:  # one free multiplier; a pair would have an unbounded optimal set
            y = cp.Variable()
            slack = slack - y * c.A
            obj = obj + y * c.lo / d
        else:
            a, b = cp.Variable(nonneg=True), cp.Variable(nonneg=True)
            slack = slack - (a - b) * c.A
            obj = obj + (a * c.lo - b * c.hi) / d
    prob = cp.Problem(cp.Maximize(obj), [(slack + slack.H) / 2 >> 0])
    _solve(prob)
    return prob


def _violation(chi: np.ndarray, cons: Sequence[FidelityConstraint], d: int) -> float:
    v = max(0.0, -float(np.linalg.eigvalsh((chi + chi.conj().T) / 2).min()))
    v = max(v, float(np.abs(partial_trace_out(chi, d) - np.eye(d) / d).max()))
    for c in cons:
        t = float(np.real(np.trace(chi @ c.A)))
        v = max(v, c.lo / d - t, t - c.hi / d)
    return v


FEAS_TOL = 1e-7


def min_widening(cons: Sequence[FidelityConstraint], d: int) -> float:
    """Smallest s >= 0 such that some channel has every Tr(chi A) inside
    [lo - s, hi + s] / d. Zero means the constraints are feasible."""
    chi = cp.Variable((d * d, d * d), hermitian=True)
    s = cp.Variable(nonneg=True)
    rows = [chi >> 0, cp.partial_trace(chi, [d, d], axis=1) == np.eye(d) / d]
    for c in cons:
        t = cp.real(cp.trace(chi @ c.A)) * d
        rows += [t >= c.lo - s, t <= c.hi + s]
    prob = cp.Problem(cp.Minimize(s), rows)
    _solve(prob)
    if s.value is None:
        raise FidelityError(f"feasibility phase failed ({prob.status})")
    return max(0.0, float(s.value))


def sdp_extreme(cons: Sequence[FidelityConstraint], u: np.ndarray, direction: str) -> tuple[float, dict]:
    """Extremal process fidelity with diagnostics (duality gap, residuals)."""
    if direction not in ("min", "max"):
        raise FidelityError("direction must be 'min' or 'max'")
    u = _check_unitary(u)
    d = u.shape[0]
    cu = choi_of_unitary(u).chi
    C = cu if direction == "min" else -cu
    need = min_widening(cons, d)
    if need > FEAS_TOL:
        raise InfeasibleConstraints(f"no channel meets the constraints; widen every interval by {need:.3g}",
                                    need)
    prob, chi = _primal(cons, C, d)
    if prob.status not in ("optimal", "optimal_inaccurate") or chi.value is None:
        raise InfeasibleConstraints(f"SDP status {prob.status}", float("inf"))
    dual = _dual(cons, C, d)
    primal_val = float(prob.value)
    gap = abs(primal_val - float(dual.value))
    value = primal_val if direction == "min" else -primal_val
    diag = {"status": prob.status, "duality_gap": gap, "dual_status": dual.status,
            "residual": _violation(chi.value, cons, d),
            "iterations": int(prob.solver_stats.num_iters or 0)}
    return value, diag


def sdp_bounds(cons: Sequence[FidelityConstraint], u: np.ndarray = CNOT) -> Bounds:
    """Average-fidelity interval over all channels meeting ``cons``."""
    d = u.shape[0]
    lo, dlo = sdp_extreme(cons, u, "min")
    hi, dhi = sdp_extreme(cons, u, "max")
    lo, hi = min(max(lo, 0.0), 1.0), min(max(hi, 0.0), 1.0)
    return Bounds(avg_fidelity(lo, d), avg_fidelity(hi, d), (lo, hi), {"min": dlo, "max": dhi})


def per_basis_data(fx: tuple[float, float], fz: tuple[float, float], fb: tuple[float, float]
                   ) -> dict[str, tuple[float, float]]:
    """Apply one (f, eps) per input family to each of its four states."""
    out = {s: fx for s in X_STATES}
    out.update({s: fz for s in Z_STATES})
    out.update({s: fb for s in BELL_STATES})
    return out


def exact_data(ch: ChoiMatrix, u: np.ndarray = CNOT, states: Sequence[str] = ALL_STATES
               ) -> dict[str, tuple[float, float]]:
    """Exact output-state fidelities of a channel (for soundness checks)."""
    out = {}
    for s in states:
        rho = apply_via_choi(ch, projector(product_ket(s)))
        tgt = u @ product_ket(s)
        out[s] = (float(np.real(np.vdot(tgt, rho @ tgt))), 0.0)
    return out


def load_data(text: str) -> tuple[dict[str, tuple[float, float]], Optional[POVMSet]]:
    """JSON: {"states": {label: [f, eps]}, "povm": {"z_err": [..], "x_err": [..]}}
    or {"per_basis": {"X": [f, eps], "Z": [...], "Bell": [...]}}."""
    d = json.loads(text)
    if "states" in d:
        data = {k: (float(v[0]), float(v[1])) for k, v in d["states"].items()}
    elif "per_basis" in d:
        pb = d["per_basis"]
        data = per_basis_data(tuple(pb["X"]), tuple(pb["Z"]), tuple(pb["Bell"]))
    else:
        raise FidelityError("data needs 'states' or 'per_basis'")
    for k in data:
        if k not in ALL_STATES:
            raise FidelityError(f"unknown input label {k!r}")
    povm = None
    if "povm" in d:
        p = d["povm"]
        povm = POVMSet(tuple(p["z_err"]), tuple(p["x_err"]))
    return data, povm
