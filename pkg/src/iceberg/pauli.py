"""Exact n-qubit Pauli operators with phase tracking.

A :class:`PauliString` stores the operator ``i**phase * prod_q X_q**x_q Z_q**z_q``
where ``x`` and ``z`` are packed into Python integers (bit ``q`` is qubit ``q``).
In this convention ``Y = i X Z``, so a bare ``Y`` has ``phase == 1``.

Text form uses the conventional Hermitian reading, e.g. ``"+XIZY"`` or ``"-iYY"``;
the leftmost character is qubit 0.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

__all__ = [
    "PauliString",
    "PauliError",
    "UnsupportedGateError",
    "multiply",
    "commutes",
    "conjugate_through",
]

_PHASE_TEXT = {0: "+", 1: "+i", 2: "-", 3: "-i"}
_TEXT_PHASE = {"": 0, "+": 0, "+i": 1, "i": 1, "-": 2, "-i": 3, "+1": 0, "-1": 2}
_PAULI_RE = re.compile(r"^\s*([+-]?i?)([IXYZ]+)\s*$")


class PauliError(ValueError):
    """Raised for malformed Pauli strings or mismatched sizes."""


class UnsupportedGateError(ValueError):
    """Raised when a gate cannot be conjugated as a Clifford."""


def _popcount(v: int) -> int:
    return bin(v).count("1")


@dataclass(frozen=True)
class PauliString:
    n_qubits: int
    x: int = 0
    z: int = 0
    phase: int = 0

    def __post_init__(self):
        if self.n_qubits < 1:
            raise PauliError("n_qubits must be positive")
        mask = (1 << self.n_qubits) - 1
        if self.x & ~mask or self.z & ~mask or self.x < 0 or self.z < 0:
            raise PauliError("x/z bits exceed n_qubits")
        object.__setattr__(self, "phase", self.phase % 4)

    # -- construction -------------------------------------------------------

    @classmethod
    def identity(cls, n: int) -> PauliString:
        return cls(n)

    @classmethod
    def from_label(cls, label: str) -> PauliString:
        """Parse ``"+XIZY"``-style text (Hermitian letters, optional phase prefix)."""
        m = _PAULI_RE.match(label)
        if m is None:
            raise PauliError(f"cannot parse Pauli string {label!r}")
        prefix, letters = m.groups()
        phase = _TEXT_PHASE[prefix]
        x = z = 0
        for q, c in enumerate(letters):
            if c in "XY":
                x |= 1 << q
            if c in "ZY":
                z |= 1 << q
            if c == "Y":
                phase += 1
        return cls(len(letters), x, z, phase)

    @classmethod
    def from_ops(cls, n: int, ops: dict[int, str], sign: int = 1) -> PauliString:
        """Build from a ``{qubit: 'X'|'Y'|'Z'}`` mapping with Hermitian sign ``+-1``."""
        letters = ["I"] * n
        for q, c in ops.items():
            if not 0 <= q < n:
                raise PauliError(f"qubit {q} out of range for n={n}")
            letters[q] = c
        return cls.from_label(("-" if sign < 0 else "+") + "".join(letters))

    @classmethod
    def from_bits(cls, n: int, xs, zs, phase: int = 0) -> PauliString:
        """Build from explicit 0/1 sequences; ``phase`` is the raw power of i."""
        if len(xs) != n or len(zs) != n:
            raise PauliError("x_part and z_part must have length n_qubits")
        x = sum(1 << q for q, b in enumerate(xs) if b)
        z = sum(1 << q for q, b in enumerate(zs) if b)
        return cls(n, x, z, phase)

    # -- views --------------------------------------------------------------

    @property
    def x_part(self) -> tuple[int, ...]:
        return tuple((self.x >> q) & 1 for q in range(self.n_qubits))

    @property
    def z_part(self) -> tuple[int, ...]:
        return tuple((self.z >> q) & 1 for q in range(self.n_qubits))

    @property
    def n_y(self) -> int:
        return _popcount(self.x & self.z)

    @property
    def hermitian_phase(self) -> int:
        """Phase as a power of i in front of the Hermitian (X/Y/Z letter) form."""
        return (self.phase - self.n_y) % 4

    @property
    def support(self) -> tuple[int, ...]:
        s = self.x | self.z
        return tuple(q for q in range(self.n_qubits) if (s >> q) & 1)

    @property
    def weight(self) -> int:
        return _popcount(self.x | self.z)

    def is_identity(self, up_to_phase: bool = True) -> bool:
        return self.x == 0 and self.z == 0 and (up_to_phase or self.phase == 0)

    def letter(self, q: int) -> str:
        return "IXZY"[((self.x >> q) & 1) | (((self.z >> q) & 1) << 1)]

    def letters(self) -> str:
        return "".join(self.letter(q) for q in range(self.n_qubits))

    def to_label(self) -> str:
        return _PHASE_TEXT[self.hermitian_phase] + self.letters()

    def __str__(self) -> str:
        return self.to_label()

    def unsigned(self) -> PauliString:
        """Same letters with Hermitian phase +1."""
        return PauliString(self.n_qubits, self.x, self.z, self.n_y)

    def equal_up_to_phase(self, other: PauliString) -> bool:
        return (self.n_qubits, self.x, self.z) == (other.n_qubits, other.x, other.z)

    def restrict(self, qubits) -> PauliString:
        """Pauli on the listed qubits (in order); phase kept, other qubits dropped."""
        qubits = list(qubits)
        x = z = 0
        for new, old in enumerate(qubits):
            x |= ((self.x >> old) & 1) << new
            z |= ((self.z >> old) & 1) << new
        # keep the Hermitian phase of the kept letters
        kept = PauliString(len(qubits), x, z, 0)
        return PauliString(len(qubits), x, z, self.hermitian_phase + kept.n_y)

    def to_matrix(self):
        """Dense matrix, qubit 0 is the most significant tensor factor."""
        import numpy as np

        mats = {
            "I": np.eye(2, dtype=complex),
            "X": np.array([[0, 1], [1, 0]], dtype=complex),
            "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
            "Z": np.array([[1, 0], [0, -1]], dtype=complex),
        }
        out = np.ones((1, 1), dtype=complex)
        for c in self.letters():
            out = np.kron(out, mats[c])
        return (1j ** self.hermitian_phase) * out

    # -- algebra ------------------------------------------------------------

    def __mul__(self, other: PauliString) -> PauliString:
        return multiply(self, other)

    def commutes(self, other: PauliString) -> bool:
        return commutes(self, other)

    def with_phase(self, phase: int) -> PauliString:
        return PauliString(self.n_qubits, self.x, self.z, phase)


def _check_sizes(a: PauliString, b: PauliString) -> None:
    if a.n_qubits != b.n_qubits:
        raise PauliError(f"size mismatch: {a.n_qubits} vs {b.n_qubits}")


def multiply(a: PauliString, b: PauliString) -> PauliString:
    """Operator product ``a @ b`` with the exact phase."""
    _check_sizes(a, b)
    # moving b's X part left through a's Z part costs (-1) per overlapping qubit
    phase = a.phase + b.phase + 2 * _popcount(a.z & b.x)
    return PauliString(a.n_qubits, a.x ^ b.x, a.z ^ b.z, phase)


def commutes(a: PauliString, b: PauliString) -> bool:
    _check_sizes(a, b)
    return _popcount((a.x & b.z) ^ (a.z & b.x)) % 2 == 0


def _rotation_multiple(theta: float) -> int | None:
    m = theta / (math.pi / 2)
    r = round(m)
    if abs(m - r) > 1e-9:
        return None
    return r % 4


def conjugate_through(gate, p: PauliString) -> PauliString:
    """Return ``U p U^dagger`` for the Clifford instruction ``gate``.

    ``gate`` must expose ``name``, ``qubits`` and (for rotations) ``theta``;
    :class:`iceberg.circuits.Gate` does.  Rotations ``MS``, ``Rz`` and ``Rx``
    are accepted only at multiples of pi/2.
    """
    name = gate.name
    qs = gate.qubits
    n = p.n_qubits
    x, z, ph = p.x, p.z, p.phase
    if name in ("H", "S", "Sdg", "X", "Y", "Z"):
        q = qs[0]
        bx = (x >> q) & 1
        bz = (z >> q) & 1
        bit = 1 << q
        if name == "H":
            # X^a Z^b -> Z^a X^b = (-1)^(ab) X^b Z^a
            ph += 2 * (bx & bz)
            x = (x & ~bit) | (bz << q)
            z = (z & ~bit) | (bx << q)
        elif name == "S":
            ph += bx
            z ^= bx << q
        elif name == "Sdg":
            ph += 3 * bx
            z ^= bx << q
        elif name == "X":
            ph += 2 * bz
        elif name == "Z":
            ph += 2 * bx
        else:
            ph += 2 * (bx ^ bz)
        return PauliString(n, x, z, ph)
    if name == "CNOT":
        c, t = qs
        x ^= ((x >> c) & 1) << t
        z ^= ((z >> t) & 1) << c
        return PauliString(n, x, z, ph)
    if name in ("MS", "Rz", "Rx"):
        m = _rotation_multiple(gate.theta)
        if m is None:
            raise UnsupportedGateError(f"{name}({gate.theta}) is not Clifford")
        letters = {"MS": "ZZ", "Rz": "Z", "Rx": "X"}[name]
        gen = PauliString.from_ops(n, dict(zip(qs, letters)))
        if m == 0 or commutes(gen, p):
            return p
        # U = exp(-i m pi/4 G); anticommuting P -> exp(-i m pi/2 G) P = (-iG)^m P
        out = p
        step = gen.with_phase(gen.phase + 3)
        for _ in range(m):
            out = multiply(step, out)
        return out
    raise UnsupportedGateError(f"cannot conjugate through {name}")
