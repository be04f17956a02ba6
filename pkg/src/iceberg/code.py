"""The [[k+2, k, 2]] Iceberg code: layout, stabilizers and the logical operator map.

Qubit labels
------------
Physical data qubits are labelled ``1..k, t, b``; ancillas are ``a1`` and ``a2``.
Internally every qubit is a 0-based index::

    logical-numbered qubit i (1..k) -> i - 1
    t  -> k
    b  -> k + 1
    a1 -> k + 2
    a2 -> k + 3

Logical qubit ``i`` (1..k) is index ``i - 1`` of a k-qubit logical Pauli.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

from .pauli import PauliString, commutes, multiply

__all__ = [
    "CodeLayout",
    "LogicalPauli",
    "NotCompilableError",
    "stabilizers",
    "logical_from_physical_pair",
    "physical_from_logical",
    "lift_logical",
    "decode_readout",
]


class NotCompilableError(ValueError):
    """The logical operator has no two-qubit physical representative."""


@dataclass(frozen=True)
class CodeLayout:
    k: int

    def __post_init__(self):
        if not isinstance(self.k, int) or self.k < 2 or self.k % 2:
            raise ValueError(f"k must be an even integer >= 2, got {self.k!r}")

    @property
    def n(self) -> int:
        return self.k + 2

    @property
    def n_total(self) -> int:
        return self.k + 4

    @property
    def t(self) -> int:
        return self.k

    @property
    def b(self) -> int:
        return self.k + 1

    @property
    def a1(self) -> int:
        return self.k + 2

    @property
    def a2(self) -> int:
        return self.k + 3

    @property
    def data(self) -> tuple[int, ...]:
        return tuple(range(self.n))

    def qubit(self, label) -> int:
        """Internal index of a text label (``1..k``, ``'t'``, ``'b'``, ``'a1'``, ``'a2'``)."""
        named = {"t": self.t, "b": self.b, "a1": self.a1, "a2": self.a2}
        if isinstance(label, str) and label in named:
            return named[label]
        i = int(label)
        if not 1 <= i <= self.k:
            raise ValueError(f"invalid qubit label {label!r} for k={self.k}")
        return i - 1

    def label(self, index: int) -> str:
        names = {self.t: "t", self.b: "b", self.a1: "a1", self.a2: "a2"}
        if index in names:
            return names[index]
        if 0 <= index < self.k:
            return str(index + 1)
        raise ValueError(f"qubit index {index} out of range")

    def _check_data(self, q: int) -> None:
        if not 0 <= q < self.n:
            raise ValueError(f"{q} is not a data qubit index (n={self.n})")

    @cached_property
    def _pair_table(self) -> dict:
        table = {}
        for basis in "XYZ":
            for i in range(self.n):
                for j in range(i + 1, self.n):
                    lp = logical_from_physical_pair(self, basis, i, j)
                    table[(lp.pauli.x, lp.pauli.z)] = (basis, i, j, lp.sign)
        return table


def stabilizers(layout: CodeLayout) -> tuple[PauliString, PauliString]:
    """``(S_X, S_Z)``: all-X and all-Z on the data qubits."""
    full = (1 << layout.n) - 1
    return PauliString(layout.n, x=full), PauliString(layout.n, z=full)


@dataclass(frozen=True)
class LogicalPauli:
    """``sign * pauli`` where ``pauli`` is a Hermitian k-qubit Pauli written with a ``+`` sign."""

    pauli: PauliString
    sign: int = 1

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")
        if self.pauli.hermitian_phase != 0:
            raise ValueError("pauli must carry Hermitian phase +1; put the sign in `sign`")

    @classmethod
    def from_label(cls, label: str) -> LogicalPauli:
        p = PauliString.from_label(label)
        if p.hermitian_phase not in (0, 2):
            raise ValueError("logical Paulis must be Hermitian")
        return cls(p.unsigned(), -1 if p.hermitian_phase == 2 else 1)

    @property
    def k(self) -> int:
        return self.pauli.n_qubits

    @property
    def weight(self) -> int:
        return self.pauli.weight

    def as_pauli(self) -> PauliString:
        return self.pauli.with_phase(self.pauli.phase + (0 if self.sign > 0 else 2))

    def to_label(self) -> str:
        return ("+" if self.sign > 0 else "-") + self.pauli.letters()

    def __str__(self) -> str:
        return self.to_label()


def _logical(k: int, ops: dict[int, str], sign: int = 1) -> LogicalPauli:
    return LogicalPauli(PauliString.from_ops(k, ops), sign)


def logical_from_physical_pair(layout: CodeLayout, basis: str, i: int, j: int) -> LogicalPauli:
    """Logical operator ``L`` with ``sigma_i sigma_j = sign * L`` on the code space."""
    if basis not in ("X", "Y", "Z"):
        raise ValueError(f"basis must be X, Y or Z, got {basis!r}")
    layout._check_data(i)
    layout._check_data(j)
    if i == j:
        raise ValueError("i and j must differ")
    k, t, b = layout.k, layout.t, layout.b
    i, j = sorted((i, j))
    others = lambda skip, letter: {q: letter for q in range(k) if q != skip}  # noqa: E731

    if basis == "X":
        if j == t and i < k:
            return _logical(k, {i: "X"})
        if j < k:
            return _logical(k, {i: "X", j: "X"})
        if j == b and i < k:
            return _logical(k, others(i, "X"))
        return _logical(k, {q: "X" for q in range(k)})
    if basis == "Z":
        if j == b and i < k:
            return _logical(k, {i: "Z"})
        if j < k:
            return _logical(k, {i: "Z", j: "Z"})
        if j == t and i < k:
            return _logical(k, others(i, "Z"))
        return _logical(k, {q: "Z" for q in range(k)})
    if j < k:
        return _logical(k, {i: "Y", j: "Y"})
    if j == t and i < k:
        return _logical(k, {**others(i, "Z"), i: "X"}, -1)
    if j == b and i < k:
        return _logical(k, {**others(i, "X"), i: "Z"}, -1)
    return _logical(k, {q: "Y" for q in range(k)}, (-1) ** (1 + k // 2))


def physical_from_logical(layout: CodeLayout, logical: LogicalPauli) -> tuple[str, int, int, int]:
    """Inverse map: ``(basis, i, j, sign)`` with ``logical = sign * sigma_i sigma_j``.

    Raises :class:`NotCompilableError` if no two-qubit physical Pauli represents it.
    """
    if logical.k != layout.k:
        raise ValueError(f"logical acts on {logical.k} qubits, layout has k={layout.k}")
    key = (logical.pauli.x, logical.pauli.z)
    try:
        basis, i, j, s = layout._pair_table[key]
    except KeyError:
        raise NotCompilableError(f"{logical} has no two-qubit physical support") from None
    return basis, i, j, s * logical.sign


def lift_logical(layout: CodeLayout, logical: PauliString | LogicalPauli) -> PauliString:
    """A physical representative built from ``Xbar_i = X_t X_i`` and ``Zbar_i = Z_i Z_b``."""
    if isinstance(logical, LogicalPauli):
        logical = logical.as_pauli()
    if logical.n_qubits != layout.k:
        raise ValueError("logical Pauli size does not match layout.k")
    n, t, b = layout.n, layout.t, layout.b
    out = PauliString(n, phase=logical.phase)
    for q in range(layout.k):
        if (logical.x >> q) & 1:
            out = multiply(out, PauliString(n, x=(1 << q) | (1 << t)))
        if (logical.z >> q) & 1:
            out = multiply(out, PauliString(n, z=(1 << q) | (1 << b)))
    return out


def stabilizer_group(layout: CodeLayout) -> tuple[PauliString, ...]:
    """The four elements ``I, S_X, S_Z, S_X S_Z`` (each acts as +1 on the code space)."""
    sx, sz = stabilizers(layout)
    return (PauliString(layout.n), sx, sz, multiply(sx, sz))


def same_on_code_space(layout: CodeLayout, p: PauliString, q: PauliString) -> bool:
    """True iff ``p`` and ``q`` act identically on the code space (phase included)."""
    r = multiply(p, _inverse(q))
    return any(
        r.x == g.x and r.z == g.z and r.phase == g.phase for g in stabilizer_group(layout)
    )


def _inverse(p: PauliString) -> PauliString:
    # P^-1 = P^dagger; for i^a X^x Z^z the inverse is i^-a Z^z X^x = i^-a (-1)^{x.z} X^x Z^z
    return PauliString(p.n_qubits, p.x, p.z, -p.phase + 2 * p.n_y)


def decode_readout(layout: CodeLayout, bits: Sequence[int]) -> tuple[int, tuple[int, ...]]:
    """Decode n data bits into ``(s_z, logical_z)`` eigenvalues (each +1 or -1)."""
    bits = [int(v) for v in bits]
    if len(bits) != layout.n:
        raise ValueError(f"expected {layout.n} data bits, got {len(bits)}")
    s_z = -1 if sum(bits) % 2 else 1
    bb = bits[layout.b]
    return s_z, tuple(-1 if bits[i] ^ bb else 1 for i in range(layout.k))


def decode_bitmask(layout: CodeLayout, value: int) -> tuple[bool, int]:
    """Fast decode of a data-register integer (bit q = qubit q).

    Returns ``(s_z_ok, logical_bits)`` where bit i of ``logical_bits`` is 1 iff
    logical Z_i reads -1.
    """
    ok = bin(value).count("1") % 2 == 0
    mask = (1 << layout.k) - 1
    logical = value & mask
    if (value >> layout.b) & 1:
        logical ^= mask
    return ok, logical


def logical_commutation_ok(layout: CodeLayout, p: PauliString) -> bool:
    """True iff ``p`` commutes with both stabilizers."""
    sx, sz = stabilizers(layout)
    return commutes(p, sx) and commutes(p, sz)
