"""Dense state-vector state with numba kernels. Qubit q is bit q of the index."""

from __future__ import annotations

import math
import random
from typing import Optional

import numpy as np
from numba import njit

DEFAULT_QUBIT_CAP = 22

_SQ2 = 1.0 / math.sqrt(2.0)


@njit(cache=True)
def _apply_1q(psi, q, a, b, c, d):
    # [[a, b], [c, d]] on qubit q
    step = 1 << q
    n = psi.shape[0]
    for base in range(0, n, 2 * step):
        for off in range(base, base + step):
            u = psi[off]
            v = psi[off + step]
            psi[off] = a * u + b * v
            psi[off + step] = c * u + d * v


@njit(cache=True)
def _apply_diag(psi, q, d0, d1):
    step = 1 << q
    for i in range(psi.shape[0]):
        if i & step:
            psi[i] *= d1
        else:
            psi[i] *= d0


@njit(cache=True)
def _apply_cnot(psi, c, t):
    cm = 1 << c
    tm = 1 << t
    for i in range(psi.shape[0]):
        if (i & cm) and not (i & tm):
            j = i | tm
            tmp = psi[i]
            psi[i] = psi[j]
            psi[j] = tmp


@njit(cache=True)
def _prob_one(psi, q):
    m = 1 << q
    acc = 0.0
    for i in range(psi.shape[0]):
        if i & m:
            acc += psi[i].real ** 2 + psi[i].imag ** 2
    return acc


@njit(cache=True)
def _collapse(psi, q, bit, norm):
    m = 1 << q
    scale = 1.0 / norm
    for i in range(psi.shape[0]):
        if ((i & m) != 0) == (bit == 1):
            psi[i] *= scale
        else:
            psi[i] = 0.0


_GATES = {
    "H": (_SQ2, _SQ2, _SQ2, -_SQ2),
    "X": (0.0, 1.0, 1.0, 0.0),
    "Y": (0.0, -1j, 1j, 0.0),
}
_DIAG = {"Z": (1.0, -1.0), "S": (1.0, 1j), "Sdg": (1.0, -1j)}


class StateVector:
    """Mutable n-qubit pure state initialised to |0...0>."""

    def __init__(self, n: int, cap: int = DEFAULT_QUBIT_CAP):
        if n > cap:
            raise ValueError(f"{n} qubits exceeds the state-vector cap of {cap}")
        self.n = n
        self.psi = np.zeros(1 << n, dtype=np.complex128)
        self.psi[0] = 1.0

    def copy(self) -> "StateVector":
        out = object.__new__(StateVector)
        out.n = self.n
        out.psi = self.psi.copy()
        return out

    def apply(self, gate: str, qubits) -> None:
        q = qubits[0]
        if gate == "CNOT":
            _apply_cnot(self.psi, q, qubits[1])
        elif gate in _DIAG:
            d0, d1 = _DIAG[gate]
            _apply_diag(self.psi, q, complex(d0), complex(d1))
        elif gate in _GATES:
            a, b, c, d = _GATES[gate]
            _apply_1q(self.psi, q, complex(a), complex(b), complex(c), complex(d))
        else:
            raise ValueError(f"unsupported gate {gate}")

    def rz(self, q: int, angle: float) -> None:
        """exp(-i angle Z / 2)."""
        h = 0.5 * angle
        _apply_diag(self.psi, q, complex(math.cos(h), -math.sin(h)), complex(math.cos(h), math.sin(h)))

    def apply_pauli_letter(self, q: int, letter: str) -> None:
        if letter != "I":
            self.apply(letter, (q,))

    def is_deterministic_z(self, q: int) -> bool:
        p1 = _prob_one(self.psi, q)
        return p1 < 1e-12 or p1 > 1 - 1e-12

    def measure_z_bit(self, q: int, rand: float, forced: int = -1) -> tuple[int, bool]:
        p1 = _prob_one(self.psi, q)
        det = p1 < 1e-12 or p1 > 1 - 1e-12
        if det:
            bit = 1 if p1 > 0.5 else 0
            if forced >= 0 and forced != bit:
                raise ValueError(f"qubit {q} deterministically gives {bit}")
        elif forced >= 0:
            bit = forced
        else:
            bit = 1 if rand < p1 else 0
        p = p1 if bit else 1.0 - p1
        _collapse(self.psi, q, bit, math.sqrt(p))
        return bit, det

    def reset(self, q: int, rng: Optional[random.Random] = None) -> None:
        bit, _ = self.measure_z_bit(q, (rng or random).random())
        if bit:
            self.apply("X", (q,))

    def expectation_z(self, qubits) -> float:
        mask = 0
        for q in qubits:
            mask |= 1 << q
        idx = np.arange(self.psi.shape[0])
        par = np.zeros_like(idx)
        v = idx & mask
        while np.any(v):
            par ^= v & 1
            v >>= 1
        probs = np.abs(self.psi) ** 2
        return float(np.sum(probs * (1 - 2 * par)))
