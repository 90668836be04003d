"""Shared dense-matrix oracles, independent of the package's own matrix code."""

import numpy as np
import pytest

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.diag([1, -1]).astype(complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
S = np.diag([1, 1j])
LETTER = {"I": I2, "X": X, "Y": Y, "Z": Z}
GATE_1Q = {"H": H, "S": S, "Sdg": S.conj().T, "X": X, "Y": Y, "Z": Z}


def dense(text: str) -> np.ndarray:
    """Matrix of a signed Pauli string such as '-iXYZ', qubit 0 leftmost."""
    phase = 1
    for prefix, val in (("+i", 1j), ("-i", -1j), ("+", 1), ("-", -1)):
        if text.startswith(prefix):
            phase, text = val, text[len(prefix):]
            break
    out = np.array([[1.0 + 0j]])
    for ch in text:
        out = np.kron(out, LETTER[ch])
    return phase * out


def embed_gate(gate: str, qubits, n: int) -> np.ndarray:
    if gate == "CNOT":
        c, t = qubits
        dim = 1 << n
        u = np.zeros((dim, dim), dtype=complex)
        for i in range(dim):
            bits = [(i >> (n - 1 - q)) & 1 for q in range(n)]
            if bits[c]:
                bits[t] ^= 1
            j = sum(b << (n - 1 - q) for q, b in enumerate(bits))
            u[j, i] = 1
        return u
    out = np.array([[1.0 + 0j]])
    for q in range(n):
        out = np.kron(out, GATE_1Q[gate] if q == qubits[0] else I2)
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# acceptance report ------------------------------------------------------------

ACCEPTANCE: dict[str, str] = {}


def _criterion_key(k: str):
    digits = "".join(ch for ch in k if ch.isdigit())
    return int(digits), k


@pytest.fixture
def verdict(capsys):
    """verdict(key, ok, detail): record and print one PASS/FAIL line for a criterion ('1', '7a', ...)."""
    def record(key, ok: bool, detail: str) -> bool:
        key = str(key)
        line = f"criterion {key:>3}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE[key] = line
        with capsys.disabled():
            print("\n" + line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE, key=_criterion_key):
            terminalreporter.write_line(ACCEPTANCE[k])
