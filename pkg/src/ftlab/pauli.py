"""Signed Pauli strings and Clifford conjugation.

A :class:`PauliString` on ``n`` qubits is stored bit-packed: bit ``q`` of ``x``
and ``z`` marks an X or Z component on qubit ``q``. The operator represented is

    i**k * X**x * Z**z

with all X factors ordered before all Z factors. In this form the product of two
strings only needs one popcount, and the Clifford gates used in this package act
on ``(x, z, k)`` with a handful of integer operations.
"""

from __future__ import annotations

from typing import Iterable, Optional, Sequence

_SIGN_PREFIX = {"+": 0, "+i": 1, "i": 1, "-": 2, "-i": 3, "": 0}
_SIGN_TEXT = {0: "+", 1: "+i", 2: "-", 3: "-i"}

ONE_QUBIT_GATES = ("H", "S", "Sdg", "X", "Y", "Z")
TWO_QUBIT_GATES = ("CNOT",)


def _popcount(v: int) -> int:
    return v.bit_count()


class PauliString:
    """An ``n``-qubit Pauli operator with phase in {+1, -1, +i, -i}."""

    __slots__ = ("n", "x", "z", "k")

    def __init__(self, n: int, x: int = 0, z: int = 0, k: int = 0):
        if n < 0:
            raise ValueError("qubit count must be non-negative")
        mask = (1 << n) - 1
        if x & ~mask or z & ~mask:
            raise ValueError("Pauli support exceeds qubit count")
        self.n = n
        self.x = x
        self.z = z
        self.k = k & 3

    # construction ---------------------------------------------------------

    @classmethod
    def identity(cls, n: int) -> "PauliString":
        return cls(n)

    @classmethod
    def from_str(cls, text: str) -> "PauliString":
        """Parse ``"-YIXIY"``, ``"+iXZ"`` and friends; the sign prefix is optional."""
        text = text.strip()
        body_start = 0
        while body_start < len(text) and text[body_start] in "+-i":
            body_start += 1
        prefix, body = text[:body_start], text[body_start:]
        if prefix not in _SIGN_PREFIX:
            raise ValueError(f"bad sign prefix {prefix!r}")
        x = z = 0
        for q, ch in enumerate(body):
            if ch in "X":
                x |= 1 << q
            elif ch == "Z":
                z |= 1 << q
            elif ch == "Y":
                x |= 1 << q
                z |= 1 << q
            elif ch not in "I_":
                raise ValueError(f"bad Pauli character {ch!r} in {text!r}")
        n = len(body)
        # Y = i X Z, so the displayed sign needs i**popcount(x & z) folded in
        k = _SIGN_PREFIX[prefix] + _popcount(x & z)
        return cls(n, x, z, k)

    @classmethod
    def single(cls, n: int, qubit: int, label: str) -> "PauliString":
        if not 0 <= qubit < n:
            raise IndexError(f"qubit {qubit} out of range for n={n}")
        body = ["I"] * n
        body[qubit] = label
        return cls.from_str("".join(body))

    @classmethod
    def from_sparse(cls, n: int, ops: dict[int, str], sign: int = 1) -> "PauliString":
        body = ["I"] * n
        for q, label in ops.items():
            body[q] = label
        p = cls.from_str("".join(body))
        return p if sign == 1 else p.negate()

    # basic properties -----------------------------------------------------

    @property
    def sign_exponent(self) -> int:
        """Exponent e with the operator equal to i**e times a tensor product of I/X/Y/Z."""
        return (self.k - _popcount(self.x & self.z)) & 3

    @property
    def weight(self) -> int:
        return _popcount(self.x | self.z)

    @property
    def support(self) -> list[int]:
        s = self.x | self.z
        return [q for q in range(self.n) if (s >> q) & 1]

    def is_hermitian(self) -> bool:
        return self.sign_exponent % 2 == 0

    def is_identity(self) -> bool:
        """True when the operator is proportional to the identity."""
        return self.x == 0 and self.z == 0

    def label(self, q: int) -> str:
        return "IXZY"[((self.x >> q) & 1) | (((self.z >> q) & 1) << 1)]

    def unsigned(self) -> "PauliString":
        """Same tensor factors with phase +1."""
        return PauliString(self.n, self.x, self.z, _popcount(self.x & self.z))

    def negate(self) -> "PauliString":
        return PauliString(self.n, self.x, self.z, self.k + 2)

    def with_sign(self, sign: int) -> "PauliString":
        u = self.unsigned()
        return u if sign == 1 else u.negate()

    @property
    def sign(self) -> int:
        """+1 or -1 for hermitian strings."""
        e = self.sign_exponent
        if e & 1:
            raise ValueError(f"{self} is not hermitian")
        return 1 if e == 0 else -1

    # algebra --------------------------------------------------------------

    def _check(self, other: "PauliString") -> None:
        if self.n != other.n:
            raise ValueError(f"length mismatch: {self.n} vs {other.n}")

    def __mul__(self, other: "PauliString") -> "PauliString":
        self._check(other)
        k = self.k + other.k + 2 * _popcount(self.z & other.x)
        return PauliString(self.n, self.x ^ other.x, self.z ^ other.z, k)

    def commutes(self, other: "PauliString") -> bool:
        self._check(other)
        return (_popcount(self.x & other.z) + _popcount(self.z & other.x)) % 2 == 0

    def equal_up_to_phase(self, other: "PauliString") -> bool:
        return self.n == other.n and self.x == other.x and self.z == other.z

    def restrict(self, qubits: Sequence[int]) -> "PauliString":
        """Sub-string on ``qubits`` (in the given order), keeping the displayed sign."""
        x = z = 0
        for i, q in enumerate(qubits):
            x |= ((self.x >> q) & 1) << i
            z |= ((self.z >> q) & 1) << i
        return PauliString(len(qubits), x, z, _popcount(x & z) + self.sign_exponent)

    def embed(self, n: int, qubits: Sequence[int]) -> "PauliString":
        """Place this string on ``qubits`` of a larger ``n``-qubit register."""
        if len(qubits) != self.n:
            raise ValueError("qubit map length mismatch")
        x = z = 0
        for i, q in enumerate(qubits):
            x |= ((self.x >> i) & 1) << q
            z |= ((self.z >> i) & 1) << q
        return PauliString(n, x, z, self.sign_exponent + _popcount(x & z))

    def tensor(self, other: "PauliString") -> "PauliString":
        n = self.n + other.n
        x = self.x | (other.x << self.n)
        z = self.z | (other.z << self.n)
        return PauliString(n, x, z, self.sign_exponent + other.sign_exponent + _popcount(x & z))

    # gate conjugation -----------------------------------------------------

    def conjugated_by_gate(self, gate: str, qubits: Sequence[int]) -> "PauliString":
        """Return G P G^dagger for one of the supported Clifford gates."""
        x, z, k = apply_gate_bits(self.x, self.z, self.k, gate, qubits)
        return PauliString(self.n, x, z, k)

    # dunder ---------------------------------------------------------------

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PauliString):
            return NotImplemented
        return (self.n, self.x, self.z, self.k) == (other.n, other.x, other.z, other.k)

    def __hash__(self) -> int:
        return hash((self.n, self.x, self.z, self.k))

    def __str__(self) -> str:
        body = "".join(self.label(q) for q in range(self.n))
        return _SIGN_TEXT[self.sign_exponent] + body

    def __repr__(self) -> str:
        return f"PauliString({str(self)!r})"

    def to_matrix(self):
        """Dense matrix, qubit 0 as the most significant tensor factor."""
        import numpy as np

        mats = {"I": np.eye(2), "X": np.array([[0, 1], [1, 0]]),
                "Y": np.array([[0, -1j], [1j, 0]]), "Z": np.diag([1, -1])}
        out = np.array([[1.0 + 0j]])
        for q in range(self.n):
            out = np.kron(out, mats[self.label(q)])
        return (1j ** self.sign_exponent) * out


def apply_gate_bits(x: int, z: int, k: int, gate: str, qubits: Sequence[int]) -> tuple[int, int, int]:
    """Conjugate the bit-packed Pauli ``i^k X^x Z^z`` by a Clifford gate."""
    if gate == "CNOT":
        c, t = qubits
        x ^= ((x >> c) & 1) << t
        z ^= ((z >> t) & 1) << c
        return x, z, k
    q = qubits[0]
    xb = (x >> q) & 1
    zb = (z >> q) & 1
    if gate == "H":
        if xb != zb:
            x ^= 1 << q
            z ^= 1 << q
        elif xb:
            k += 2
    elif gate == "S":
        if xb:
            k += 1
            z ^= 1 << q
    elif gate == "Sdg":
        if xb:
            k += 3
            z ^= 1 << q
    elif gate == "X":
        if zb:
            k += 2
    elif gate == "Z":
        if xb:
            k += 2
    elif gate == "Y":
        if xb ^ zb:
            k += 2
    else:
        raise ValueError(f"not a supported Clifford gate: {gate}")
    return x, z, k & 3


INVERSE_GATE = {"H": "H", "S": "Sdg", "Sdg": "S", "X": "X", "Y": "Y", "Z": "Z", "CNOT": "CNOT"}


class CliffordMap:
    """A Clifford unitary stored by the images of X_q and Z_q under conjugation."""

    __slots__ = ("n", "x_images", "z_images")

    def __init__(self, n: int, x_images: Sequence[PauliString], z_images: Sequence[PauliString]):
        if len(x_images) != n or len(z_images) != n:
            raise ValueError("need one image per qubit")
        for a in list(x_images) + list(z_images):
            if a.n != n or not a.is_hermitian():
                raise ValueError("images must be hermitian n-qubit Paulis")
        for i in range(n):
            for j in range(n):
                if x_images[i].commutes(z_images[j]) != (i != j):
                    raise ValueError("images do not preserve commutation relations")
                if j > i and not (x_images[i].commutes(x_images[j]) and z_images[i].commutes(z_images[j])):
                    raise ValueError("images do not preserve commutation relations")
        self.n = n
        self.x_images = tuple(x_images)
        self.z_images = tuple(z_images)

    @classmethod
    def identity(cls, n: int) -> "CliffordMap":
        return cls(n, [PauliString.single(n, q, "X") for q in range(n)],
                   [PauliString.single(n, q, "Z") for q in range(n)])

    @classmethod
    def from_gates(cls, n: int, gates: Iterable[tuple[str, Sequence[int]]]) -> "CliffordMap":
        """Compose gates in time order (first gate applied first)."""
        m = cls.identity(n)
        for gate, qubits in gates:
            m = m.then(gate, qubits)
        return m

    def then(self, gate: str, qubits: Sequence[int]) -> "CliffordMap":
        """The map for this unitary followed by ``gate``."""
        xs = [p.conjugated_by_gate(gate, qubits) for p in self.x_images]
        zs = [p.conjugated_by_gate(gate, qubits) for p in self.z_images]
        out = object.__new__(CliffordMap)
        out.n, out.x_images, out.z_images = self.n, tuple(xs), tuple(zs)
        return out

    def conjugate(self, p: PauliString) -> PauliString:
        """Return U p U^dagger."""
        if p.n != self.n:
            raise ValueError(f"size mismatch: Pauli on {p.n} qubits, map on {self.n}")
        out = PauliString(self.n, 0, 0, p.k)
        for q in range(self.n):
            if (p.x >> q) & 1:
                out = out * self.x_images[q]
        for q in range(self.n):
            if (p.z >> q) & 1:
                out = out * self.z_images[q]
        return out

    def compose(self, after: "CliffordMap") -> "CliffordMap":
        """``after`` applied following ``self`` (U_after U_self)."""
        if after.n != self.n:
            raise ValueError("size mismatch")
        out = object.__new__(CliffordMap)
        out.n = self.n
        out.x_images = tuple(after.conjugate(p) for p in self.x_images)
        out.z_images = tuple(after.conjugate(p) for p in self.z_images)
        return out

    def inverse(self) -> "CliffordMap":
        n = self.n
        # Symplectic inverse over GF(2): row i of M holds the image bits of basis element i.
        rows = [(p.x | (p.z << n)) for p in self.x_images + self.z_images]
        inv_rows = _gf2_inverse(rows, 2 * n)
        xs, zs = [], []
        for target_index in range(2 * n):
            bits = inv_rows[target_index]
            pre = PauliString(n, bits & ((1 << n) - 1), bits >> n)
            pre = pre.unsigned()
            img = self.conjugate(pre)
            # img == i^e * target; the hermitian preimage absorbs the sign
            sign = img.sign
            xs_or_zs = xs if target_index < n else zs
            xs_or_zs.append(pre if sign == 1 else pre.negate())
        return CliffordMap(n, xs, zs)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CliffordMap):
            return NotImplemented
        return self.x_images == other.x_images and self.z_images == other.z_images

    def __hash__(self) -> int:
        return hash((self.x_images, self.z_images))


def _gf2_inverse(rows: list[int], size: int) -> list[int]:
    """Invert a GF(2) matrix given as row bitmasks; returns rows of the inverse.

    With row-vector convention v -> v M, row ``j`` of the result is the vector whose image is e_j.
    """
    a = list(rows)
    inv = [1 << i for i in range(size)]
    for col in range(size):
        pivot = next((r for r in range(col, size) if (a[r] >> col) & 1), None)
        if pivot is None:
            raise ValueError("matrix is singular")
        a[col], a[pivot] = a[pivot], a[col]
        inv[col], inv[pivot] = inv[pivot], inv[col]
        for r in range(size):
            if r != col and (a[r] >> col) & 1:
                a[r] ^= a[col]
                inv[r] ^= inv[col]
    # a is now identity: inv * M = I, so inv rows are preimages of unit vectors
    return inv


def commutation_syndrome(p: PauliString, generators: Sequence[PauliString]) -> tuple[int, ...]:
    """Bit i is 1 when ``p`` anticommutes with ``generators[i]``."""
    return tuple(0 if p.commutes(g) else 1 for g in generators)


def gf2_rank(vectors: Iterable[int]) -> int:
    basis: list[int] = []
    for v in vectors:
        for b in basis:
            v = min(v, v ^ b)
        if v:
            basis.append(v)
    return len(basis)


def in_span(p: PauliString, generators: Sequence[PauliString]) -> bool:
    """True if ``p`` lies in the group generated by ``generators`` up to phase."""
    n = p.n
    vecs = [g.x | (g.z << n) for g in generators]
    return gf2_rank(vecs + [p.x | (p.z << n)]) == gf2_rank(vecs)


def gf2_solve(p: PauliString, generators: Sequence[PauliString]) -> Optional[tuple[int, ...]]:
    """Exponent vector e with prod(g_i^e_i) equal to ``p`` up to phase, or None."""
    n = p.n
    # each basis row carries the mask of generators combined into it
    basis: list[tuple[int, int]] = []
    for i, g in enumerate(generators):
        v, mask = g.x | (g.z << n), 1 << i
        for b, bm in basis:
            if v ^ b < v:
                v, mask = v ^ b, mask ^ bm
        if v:
            basis.append((v, mask))
            basis.sort(reverse=True)
    v, mask = p.x | (p.z << n), 0
    for b, bm in basis:
        if v ^ b < v:
            v, mask = v ^ b, mask ^ bm
    if v:
        return None
    return tuple((mask >> i) & 1 for i in range(len(generators)))


def group_product(generators: Sequence[PauliString], exponents: Sequence[int]) -> PauliString:
    out = PauliString.identity(generators[0].n)
    for g, e in zip(generators, exponents):
        if e:
            out = out * g
    return out


def signed_membership(p: PauliString, generators: Sequence[PauliString]) -> int:
    """+1 if ``p`` is in the group, -1 if ``-p`` is, 0 if neither (up to phase)."""
    e = gf2_solve(p, generators)
    if e is None:
        return 0
    q = group_product(generators, e)
    d = (p.k - q.k) % 4
    if d == 0:
        return 1
    if d == 2:
        return -1
    return 0
