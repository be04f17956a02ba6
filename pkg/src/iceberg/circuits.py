"""Circuit representation and the fault-tolerant Iceberg circuits.

A :class:`Circuit` is an immutable list of :class:`Gate` instructions over
``n_qubits`` qubits and ``n_clbits`` classical bits.  Named *roles* map to tuples
of classical bit indices; every role other than ``"data"`` is a detection
register whose non-zero value means the shot is discarded.

Tensor ordering for :func:`unitary_of` and :func:`gate_matrix`: qubit 0 is the
most significant factor (``kron(U_0, U_1, ...)``).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .code import CodeLayout

__all__ = [
    "Gate",
    "Circuit",
    "CircuitBuilder",
    "SyndromeTemplate",
    "InitTemplate",
    "FinalTemplate",
    "build_init",
    "build_syndrome",
    "build_final",
    "unitary_of",
    "gate_matrix",
    "circuit_to_json",
    "circuit_from_json",
    "SCHEMA_VERSION",
]

SCHEMA_NAME = "iceberg.circuit"
SCHEMA_VERSION = 1

ONE_QUBIT = frozenset({"H", "S", "Sdg", "X", "Y", "Z", "Rz", "Rx"})
TWO_QUBIT = frozenset({"CNOT", "MS"})
ROTATIONS = frozenset({"MS", "Rz", "Rx"})
NON_UNITARY = frozenset({"Reset", "MeasureZ"})
OPCODES = ONE_QUBIT | TWO_QUBIT | NON_UNITARY


@dataclass(frozen=True)
class Gate:
    name: str
    qubits: tuple[int, ...]
    theta: float | None = None
    clbit: int | None = None

    def __post_init__(self):
        if self.name not in OPCODES:
            raise ValueError(f"unknown gate {self.name!r}")
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        arity = 2 if self.name in TWO_QUBIT else 1
        if len(self.qubits) != arity:
            raise ValueError(f"{self.name} acts on {arity} qubit(s), got {self.qubits}")
        if len(set(self.qubits)) != len(self.qubits):
            raise ValueError(f"repeated qubit in {self.name}{self.qubits}")
        if (self.name in ROTATIONS) != (self.theta is not None):
            raise ValueError(f"{self.name}: theta required exactly for rotations")
        if (self.name == "MeasureZ") != (self.clbit is not None):
            raise ValueError("clbit required exactly for MeasureZ")

    @property
    def is_unitary(self) -> bool:
        return self.name not in NON_UNITARY

    def inverse(self) -> Gate:
        if self.name in ROTATIONS:
            return Gate(self.name, self.qubits, -self.theta)
        if self.name == "S":
            return Gate("Sdg", self.qubits)
        if self.name == "Sdg":
            return Gate("S", self.qubits)
        if self.name in NON_UNITARY:
            raise ValueError(f"{self.name} has no inverse")
        return self


@dataclass(frozen=True)
class Circuit:
    n_qubits: int
    gates: tuple[Gate, ...] = ()
    n_clbits: int = 0
    roles: dict[str, tuple[int, ...]] = field(default_factory=dict)
    kind: str = ""

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        object.__setattr__(self, "roles", {r: tuple(v) for r, v in self.roles.items()})
        written = set()
        for g in self.gates:
            if any(q >= self.n_qubits or q < 0 for q in g.qubits):
                raise ValueError(f"{g} targets a qubit outside 0..{self.n_qubits - 1}")
            if g.clbit is not None:
                if not 0 <= g.clbit < self.n_clbits:
                    raise ValueError(f"classical bit {g.clbit} out of range")
                if g.clbit in written:
                    raise ValueError(f"classical bit {g.clbit} written twice")
                written.add(g.clbit)

    def __len__(self) -> int:
        return len(self.gates)

    def __iter__(self):
        return iter(self.gates)

    @property
    def detection_bits(self) -> tuple[int, ...]:
        return tuple(sorted(b for r, bits in self.roles.items() if r != "data" for b in bits))

    @property
    def data_bits(self) -> tuple[int, ...]:
        return self.roles.get("data", ())

    def count(self, name: str) -> int:
        return sum(g.name == name for g in self.gates)

    def gate_names(self) -> set[str]:
        return {g.name for g in self.gates}

    def compose(self, other: Circuit, prefix: str = "") -> Circuit:
        """Append ``other``; its classical bits are shifted and roles (except ``data``) prefixed."""
        if other.n_qubits != self.n_qubits:
            raise ValueError("qubit counts differ")
        off = self.n_clbits
        shifted = [
            Gate(g.name, g.qubits, g.theta, None if g.clbit is None else g.clbit + off)
            for g in other.gates
        ]
        roles = dict(self.roles)
        for r, bits in other.roles.items():
            name = r if r == "data" else prefix + r
            if name in roles:
                raise ValueError(f"duplicate role {name!r}")
            roles[name] = tuple(b + off for b in bits)
        return Circuit(self.n_qubits, self.gates + tuple(shifted), off + other.n_clbits, roles, self.kind)

    def inverse(self) -> Circuit:
        return Circuit(self.n_qubits, tuple(g.inverse() for g in reversed(self.gates)))


class CircuitBuilder:
    """Mutable helper for assembling a :class:`Circuit`."""

    def __init__(self, n_qubits: int, kind: str = ""):
        self.n_qubits = n_qubits
        self.kind = kind
        self.gates: list[Gate] = []
        self.n_clbits = 0
        self.roles: dict[str, list[int]] = {}

    def add(self, name: str, *qubits: int, theta: float | None = None) -> CircuitBuilder:
        self.gates.append(Gate(name, qubits, theta))
        return self

    def extend(self, gates: Iterable[Gate]) -> CircuitBuilder:
        for g in gates:
            if g.name == "MeasureZ":
                raise ValueError("use measure() so the bit gets a role")
            self.gates.append(g)
        return self

    def h(self, q):
        return self.add("H", q)

    def cnot(self, c, t):
        return self.add("CNOT", c, t)

    def reset(self, *qubits):
        for q in qubits:
            self.add("Reset", q)
        return self

    def measure(self, q: int, role: str) -> int:
        bit = self.n_clbits
        self.n_clbits += 1
        self.gates.append(Gate("MeasureZ", (q,), clbit=bit))
        self.roles.setdefault(role, []).append(bit)
        return bit

    def build(self) -> Circuit:
        return Circuit(self.n_qubits, tuple(self.gates), self.n_clbits, dict(self.roles), self.kind)


# ---------------------------------------------------------------------------
# Fault-tolerant Iceberg circuits
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class InitTemplate:
    """GHZ ladder over ``t, 1..k, b`` plus an a1 parity check on two ladder positions.

    Positions index the ladder (0 = first qubit, -1 = last).
    """

    check: tuple[int, int] = (0, -1)


@dataclass(frozen=True)
class SyndromeTemplate:
    """Per data qubit, one block with ``CNOT(q->a1)`` and ``CNOT(a2->q)``.

    ``order_a`` is the CNOT order of the first and last block ("zx": the a1
    coupling first, "xz": the a2 coupling first); middle blocks use the other
    order.  ``flags`` places ``CNOT(a2->a1)`` couplings after the first block
    and/or before the last block.  ``order_b`` overrides the middle-block
    order (the default, ``None``, means the opposite of ``order_a``).
    """

    order_a: str = "zx"
    flags: str = "none"
    order_b: str | None = None

    def __post_init__(self):
        if self.order_a not in ("zx", "xz"):
            raise ValueError("order_a must be 'zx' or 'xz'")
        if self.flags not in ("none", "start", "end", "both"):
            raise ValueError("flags must be none/start/end/both")
        if self.order_b not in (None, "zx", "xz"):
            raise ValueError("order_b must be None, 'zx' or 'xz'")


@dataclass(frozen=True)
class FinalTemplate:
    """Flagged S_X extraction: a2 couples to every data qubit, a1 flags a2.

    ``flag_after`` / ``flag_before`` give how many data couplings precede the
    first flag CNOT and follow the second one.
    """

    flag_after: int = 1
    flag_before: int = 1


def _ladder(layout: CodeLayout) -> list[int]:
    return [layout.t, *range(layout.k), layout.b]


# The templates below were selected with iceberg.ftcheck.search_templates, which
# certifies them for every even k up to 16.
DEFAULT_INIT = InitTemplate()
DEFAULT_SYNDROME = SyndromeTemplate(order_a="zx", flags="none")
DEFAULT_FINAL = FinalTemplate()


def build_init(layout: CodeLayout, template: InitTemplate = DEFAULT_INIT) -> Circuit:
    """Prepare ``|0...0>_L`` = GHZ on the data qubits; a1 checks one Z-parity."""
    chain = _ladder(layout)
    cb = CircuitBuilder(layout.n_total, kind="init")
    cb.reset(*layout.data, layout.a1)
    cb.h(chain[0])
    for c, t in zip(chain, chain[1:]):
        cb.cnot(c, t)
    p, q = (chain[i] for i in template.check)
    cb.cnot(p, layout.a1)
    cb.cnot(q, layout.a1)
    cb.measure(layout.a1, "a1")
    return cb.build()


def _syndrome_block(cb: CircuitBuilder, layout: CodeLayout, q: int, order: str) -> None:
    if order == "zx":
        cb.cnot(q, layout.a1)
        cb.cnot(layout.a2, q)
    else:
        cb.cnot(layout.a2, q)
        cb.cnot(q, layout.a1)


def build_syndrome(layout: CodeLayout, template: SyndromeTemplate = DEFAULT_SYNDROME) -> Circuit:
    """One round measuring S_Z into a1 and S_X into a2 with mutual flagging."""
    order_b = template.order_b or ("xz" if template.order_a == "zx" else "zx")
    chain = _ladder(layout)
    a1, a2 = layout.a1, layout.a2
    cb = CircuitBuilder(layout.n_total, kind="syndrome")
    cb.reset(a1, a2)
    cb.h(a2)
    for pos, q in enumerate(chain):
        if pos == len(chain) - 1 and template.flags in ("end", "both"):
            cb.cnot(a2, a1)
        _syndrome_block(cb, layout, q, template.order_a if pos in (0, len(chain) - 1) else order_b)
        if pos == 0 and template.flags in ("start", "both"):
            cb.cnot(a2, a1)
    cb.h(a2)
    cb.measure(a2, "a2")
    cb.measure(a1, "a1")
    return cb.build()


def build_final(layout: CodeLayout, template: FinalTemplate = DEFAULT_FINAL) -> Circuit:
    """Flagged S_X extraction followed by Z readout of every data qubit."""
    chain = _ladder(layout)
    a1, a2 = layout.a1, layout.a2
    cb = CircuitBuilder(layout.n_total, kind="final")
    cb.reset(a1, a2)
    cb.h(a2)
    n = len(chain)
    for pos, q in enumerate(chain):
        if pos == template.flag_after:
            cb.cnot(a2, a1)
        if pos == n - template.flag_before:
            cb.cnot(a2, a1)
        cb.cnot(a2, q)
    cb.h(a2)
    cb.measure(a2, "a2")
    cb.measure(a1, "a1")
    data_bits = [cb.measure(q, "data") for q in layout.data]
    assert data_bits == list(cb.roles["data"])
    return cb.build()


# ---------------------------------------------------------------------------
# Dense matrices (test support and simulation)
# ---------------------------------------------------------------------------

_FIXED = {
    "H": np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2),
    "S": np.array([[1, 0], [0, 1j]], dtype=complex),
    "Sdg": np.array([[1, 0], [0, -1j]], dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
    "CNOT": np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex),
}


def gate_matrix(g: Gate) -> np.ndarray:
    """Matrix of a unitary gate on its own qubits (first listed qubit most significant)."""
    if g.name in _FIXED:
        return _FIXED[g.name]
    if g.name == "MS":
        a = g.theta / 2
        return np.diag([np.exp(-1j * a), np.exp(1j * a), np.exp(1j * a), np.exp(-1j * a)])
    if g.name == "Rz":
        a = g.theta / 2
        return np.diag([np.exp(-1j * a), np.exp(1j * a)])
    if g.name == "Rx":
        c, s = math.cos(g.theta / 2), math.sin(g.theta / 2)
        return np.array([[c, -1j * s], [-1j * s, c]])
    raise ValueError(f"{g.name} is not unitary")


def embed(u: np.ndarray, qubits: Sequence[int], n: int) -> np.ndarray:
    """Full ``2**n`` matrix of ``u`` acting on ``qubits``."""
    k = len(qubits)
    t = u.reshape((2,) * (2 * k))
    eye = np.eye(2**n, dtype=complex).reshape((2,) * (2 * n))
    # contract u's input legs with the identity's output legs on the target axes
    out = np.tensordot(t, eye, axes=(list(range(k, 2 * k)), list(qubits)))
    out = np.moveaxis(out, list(range(k)), list(qubits))
    return out.reshape(2**n, 2**n)


def unitary_of(circuit: Circuit) -> np.ndarray:
    """Exact unitary of a measurement-free circuit (qubit 0 most significant)."""
    n = circuit.n_qubits
    if n > 12:
        raise ValueError("unitary_of is limited to 12 qubits")
    u = np.eye(2**n, dtype=complex)
    for g in circuit.gates:
        if not g.is_unitary:
            raise ValueError(f"non-unitary instruction {g.name}")
        u = embed(gate_matrix(g), g.qubits, n) @ u
    return u


# ---------------------------------------------------------------------------
# JSON serialisation
# ---------------------------------------------------------------------------


def circuit_to_dict(circuit: Circuit) -> dict:
    gates = []
    for g in circuit.gates:
        d: dict = {"op": g.name, "qubits": list(g.qubits)}
        if g.theta is not None:
            d["theta"] = float(g.theta)
        if g.clbit is not None:
            d["clbit"] = g.clbit
        gates.append(d)
    return {
        "schema": SCHEMA_NAME,
        "version": SCHEMA_VERSION,
        "n_qubits": circuit.n_qubits,
        "n_clbits": circuit.n_clbits,
        "kind": circuit.kind,
        "roles": {r: list(b) for r, b in circuit.roles.items()},
        "gates": gates,
    }


def circuit_to_json(circuit: Circuit, indent: int | None = None) -> str:
    return json.dumps(circuit_to_dict(circuit), indent=indent)


class SchemaError(ValueError):
    pass


def circuit_from_dict(doc: dict) -> Circuit:
    if doc.get("schema") != SCHEMA_NAME:
        raise SchemaError(f"$.schema: expected {SCHEMA_NAME!r}")
    if doc.get("version") != SCHEMA_VERSION:
        raise SchemaError(f"$.version: unsupported version {doc.get('version')!r}")
    try:
        n_qubits = int(doc["n_qubits"])
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError("$.n_qubits: missing or not an integer") from exc
    gates = []
    for i, d in enumerate(doc.get("gates", [])):
        try:
            g = Gate(d["op"], tuple(d["qubits"]), d.get("theta"), d.get("clbit"))
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"$.gates[{i}]: {exc}") from exc
        if any(not 0 <= q < n_qubits for q in g.qubits):
            raise SchemaError(f"$.gates[{i}].qubits: {list(g.qubits)} outside 0..{n_qubits - 1}")
        gates.append(g)
    try:
        return Circuit(
            n_qubits,
            tuple(gates),
            int(doc.get("n_clbits", 0)),
            {r: tuple(b) for r, b in doc.get("roles", {}).items()},
            doc.get("kind", ""),
        )
    except (KeyError, ValueError) as exc:
        raise SchemaError(f"$: {exc}") from exc


def circuit_from_json(text: str) -> Circuit:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"$: invalid JSON ({exc.msg} at line {exc.lineno})") from None
    if not isinstance(doc, dict):
        raise SchemaError("$: expected a JSON object")
    return circuit_from_dict(doc)
