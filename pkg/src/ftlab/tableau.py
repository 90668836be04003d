"""Stabilizer tableau with destabilizer rows.

Rows ``0..n-1`` hold destabilizers and rows ``n..2n-1`` stabilizers; every row is
a hermitian Pauli ``(-1)**r`` times a tensor product of I/X/Y/Z. The update rules
are the usual CHP ones; the hot loops are compiled with numba.
"""

from __future__ import annotations

import random
from typing import Optional

import numpy as np
from numba import njit

from ftlab.pauli import PauliString


@njit(cache=True)
def _g(x1, z1, x2, z2):
    # exponent of i picked up when multiplying single-qubit Paulis (x1,z1)(x2,z2)
    x1 = np.int64(x1)
    z1 = np.int64(z1)
    x2 = np.int64(x2)
    z2 = np.int64(z2)
    if x1 == 0 and z1 == 0:
        return 0
    if x1 == 1 and z1 == 1:
        return z2 - x2
    if x1 == 1 and z1 == 0:
        return z2 * (2 * x2 - 1)
    return x2 * (1 - 2 * z2)


@njit(cache=True)
def _rowsum(x, z, r, h, i):
    """Row h <- row i * row h."""
    n = x.shape[1]
    total = 2 * r[h] + 2 * r[i]
    for q in range(n):
        total += _g(x[i, q], z[i, q], x[h, q], z[h, q])
    r[h] = 1 if (total % 4) == 2 else 0
    for q in range(n):
        x[h, q] ^= x[i, q]
        z[h, q] ^= z[i, q]


@njit(cache=True)
def _h(x, z, r, q):
    for i in range(x.shape[0]):
        r[i] ^= x[i, q] & z[i, q]
        t = x[i, q]
        x[i, q] = z[i, q]
        z[i, q] = t


@njit(cache=True)
def _s(x, z, r, q):
    for i in range(x.shape[0]):
        r[i] ^= x[i, q] & z[i, q]
        z[i, q] ^= x[i, q]


@njit(cache=True)
def _sdg(x, z, r, q):
    for i in range(x.shape[0]):
        r[i] ^= x[i, q] & (1 - z[i, q])
        z[i, q] ^= x[i, q]


@njit(cache=True)
def _pauli(x, z, r, q, px, pz):
    # conjugation by a Pauli flips rows that anticommute with it
    for i in range(x.shape[0]):
        r[i] ^= (x[i, q] & pz) ^ (z[i, q] & px)


@njit(cache=True)
def _cnot(x, z, r, c, t):
    for i in range(x.shape[0]):
        r[i] ^= x[i, c] & z[i, t] & (x[i, t] ^ z[i, c] ^ 1)
        x[i, t] ^= x[i, c]
        z[i, c] ^= z[i, t]


@njit(cache=True)
def _measure(x, z, r, px, pz, psign, rand_bit, forced):
    """Measure the hermitian Pauli (-1)^psign (px, pz).

    Returns (outcome_bit, deterministic). ``forced`` is -1 for a free choice.
    Outcome bit 0 means eigenvalue +1.
    """
    n = x.shape[1]
    m = 2 * n
    anti = np.zeros(m, dtype=np.uint8)
    for i in range(m):
        acc = 0
        for q in range(n):
            acc ^= (x[i, q] & pz[q]) ^ (z[i, q] & px[q])
        anti[i] = acc
    p = -1
    for i in range(n, m):
        if anti[i]:
            p = i
            break
    if p >= 0:
        outcome = rand_bit if forced < 0 else forced
        for i in range(m):
            if i != p and anti[i]:
                _rowsum(x, z, r, i, p)
        for q in range(n):
            x[p - n, q] = x[p, q]
            z[p - n, q] = z[p, q]
            x[p, q] = px[q]
            z[p, q] = pz[q]
        r[p - n] = r[p]
        r[p] = outcome ^ psign
        return outcome, False
    # deterministic: accumulate the stabilizer product in a scratch row
    sx = np.zeros((1, n), dtype=np.uint8)
    sz = np.zeros((1, n), dtype=np.uint8)
    sr = np.zeros(1, dtype=np.uint8)
    for i in range(n):
        if anti[i]:
            total = 2 * sr[0] + 2 * r[i + n]
            for q in range(n):
                total += _g(x[i + n, q], z[i + n, q], sx[0, q], sz[0, q])
            sr[0] = 1 if (total % 4) == 2 else 0
            for q in range(n):
                sx[0, q] ^= x[i + n, q]
                sz[0, q] ^= z[i + n, q]
    return sr[0] ^ psign, True


@njit(cache=True)
def _measure_z(x, z, r, q, rand_bit, forced):
    n = x.shape[1]
    m = 2 * n
    p = -1
    for i in range(n, m):
        if x[i, q]:
            p = i
            break
    if p >= 0:
        outcome = rand_bit if forced < 0 else forced
        for i in range(m):
            if i != p and x[i, q]:
                _rowsum(x, z, r, i, p)
        for k in range(n):
            x[p - n, k] = x[p, k]
            z[p - n, k] = z[p, k]
            x[p, k] = 0
            z[p, k] = 0
        z[p, q] = 1
        r[p - n] = r[p]
        r[p] = outcome
        return outcome, False
    sr = 0
    sx = np.zeros(n, dtype=np.uint8)
    sz = np.zeros(n, dtype=np.uint8)
    for i in range(n):
        if x[i, q]:
            total = 2 * sr + 2 * r[i + n]
            for k in range(n):
                total += _g(x[i + n, k], z[i + n, k], sx[k], sz[k])
            sr = 1 if (total % 4) == 2 else 0
            for k in range(n):
                sx[k] ^= x[i + n, k]
                sz[k] ^= z[i + n, k]
    return sr, True


class DeterministicOutcomeError(ValueError):
    """A forced outcome contradicts a deterministic measurement."""


class StabilizerTableau:
    """Mutable stabilizer state on ``n`` qubits, initialised to |0...0>."""

    __slots__ = ("n", "x", "z", "r")

    def __init__(self, n: int):
        self.n = n
        self.x = np.zeros((2 * n, n), dtype=np.uint8)
        self.z = np.zeros((2 * n, n), dtype=np.uint8)
        self.r = np.zeros(2 * n, dtype=np.uint8)
        for q in range(n):
            self.x[q, q] = 1
            self.z[n + q, q] = 1

    def copy(self) -> "StabilizerTableau":
        out = object.__new__(StabilizerTableau)
        out.n = self.n
        out.x = self.x.copy()
        out.z = self.z.copy()
        out.r = self.r.copy()
        return out

    # gates ------------------------------------------------------------------

    def apply(self, gate: str, qubits) -> None:
        q = qubits[0]
        if gate == "CNOT":
            _cnot(self.x, self.z, self.r, q, qubits[1])
        elif gate == "H":
            _h(self.x, self.z, self.r, q)
        elif gate == "S":
            _s(self.x, self.z, self.r, q)
        elif gate == "Sdg":
            _sdg(self.x, self.z, self.r, q)
        elif gate == "X":
            _pauli(self.x, self.z, self.r, q, 1, 0)
        elif gate == "Z":
            _pauli(self.x, self.z, self.r, q, 0, 1)
        elif gate == "Y":
            _pauli(self.x, self.z, self.r, q, 1, 1)
        else:
            raise ValueError(f"unsupported gate {gate}")

    def apply_pauli(self, p: PauliString) -> None:
        """Act with the Pauli operator ``p`` on the state (global phase ignored)."""
        for q in range(self.n):
            xb = (p.x >> q) & 1
            zb = (p.z >> q) & 1
            if xb or zb:
                _pauli(self.x, self.z, self.r, q, xb, zb)

    def apply_pauli_letter(self, q: int, letter: str) -> None:
        if letter == "X":
            _pauli(self.x, self.z, self.r, q, 1, 0)
        elif letter == "Z":
            _pauli(self.x, self.z, self.r, q, 0, 1)
        elif letter == "Y":
            _pauli(self.x, self.z, self.r, q, 1, 1)

    # measurement ------------------------------------------------------------

    def is_deterministic_z(self, q: int) -> bool:
        return not self.x[self.n:, q].any()

    def measure_z_bit(self, q: int, rand_bit: int = 0, forced: int = -1) -> tuple[int, bool]:
        """Z measurement on qubit ``q`` returning (bit, deterministic); bit 1 means -1."""
        out, det = _measure_z(self.x, self.z, self.r, q, rand_bit, forced)
        if det and forced >= 0 and forced != out:
            raise DeterministicOutcomeError(f"qubit {q} deterministically gives {out}")
        return int(out), bool(det)

    def measure(self, p: PauliString, forced: Optional[int] = None,
                rng: Optional[random.Random] = None) -> tuple[int, bool]:
        """Measure the hermitian Pauli ``p``; returns (+1 or -1, deterministic)."""
        if p.n != self.n:
            raise ValueError("size mismatch")
        if not p.is_hermitian():
            raise ValueError(f"{p} is not hermitian")
        px = np.array([(p.x >> q) & 1 for q in range(self.n)], dtype=np.uint8)
        pz = np.array([(p.z >> q) & 1 for q in range(self.n)], dtype=np.uint8)
        psign = 0 if p.sign == 1 else 1
        forced_bit = -1 if forced is None else (0 if forced == 1 else 1)
        rand_bit = (rng or random).getrandbits(1)
        # a deterministic result must not be overwritten, so probe before forcing
        out, det = _measure(self.x, self.z, self.r, px, pz, psign, rand_bit, forced_bit)
        if det and forced_bit >= 0 and forced_bit != out:
            raise DeterministicOutcomeError(f"{p} deterministically gives {1 - 2 * int(out)}")
        return 1 - 2 * int(out), bool(det)

    def reset(self, q: int, rng: Optional[random.Random] = None) -> None:
        bit, _ = self.measure_z_bit(q, (rng or random).getrandbits(1))
        if bit:
            _pauli(self.x, self.z, self.r, q, 1, 0)

    # inspection -------------------------------------------------------------

    def row(self, i: int) -> PauliString:
        xb = zb = 0
        for q in range(self.n):
            xb |= int(self.x[i, q]) << q
            zb |= int(self.z[i, q]) << q
        p = PauliString(self.n, xb, zb, (xb & zb).bit_count())
        return p.negate() if self.r[i] else p

    def stabilizers(self) -> list[PauliString]:
        return [self.row(self.n + i) for i in range(self.n)]

    def destabilizers(self) -> list[PauliString]:
        return [self.row(i) for i in range(self.n)]

    def expectation(self, p: PauliString) -> int:
        """+1/-1 if ``p`` (up to sign) is in the stabilizer group, else 0."""
        probe = self.copy()
        value, det = probe.measure(p, rng=random.Random(0))
        return value if det else 0

    def validate(self) -> None:
        """Raise AssertionError if the tableau invariants are broken."""
        stabs = self.stabilizers()
        destabs = self.destabilizers()
        for i in range(self.n):
            for j in range(self.n):
                if not stabs[i].commutes(stabs[j]):
                    raise AssertionError(f"stabilizers {i},{j} anticommute")
                if not destabs[i].commutes(destabs[j]):
                    raise AssertionError(f"destabilizers {i},{j} anticommute")
                if destabs[i].commutes(stabs[j]) == (i == j):
                    raise AssertionError(f"destabilizer {i} / stabilizer {j} pairing broken")


def tableau_for_stabilizers(stabilizers: list[PauliString]) -> StabilizerTableau:
    """Tableau whose stabilizer group is generated by ``stabilizers`` (must be n independent, commuting)."""
    from ftlab.synthesis import state_preparation_gates

    n = stabilizers[0].n
    t = StabilizerTableau(n)
    for gate, qubits in state_preparation_gates(stabilizers):
        t.apply(gate, qubits)
    return t
