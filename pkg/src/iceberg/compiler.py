"""Lowering logical circuits to physical circuits.

Encoded target: every logical rotation ``exp(-i theta L / 2)`` whose generator
has a two-qubit physical representative ``sigma_i sigma_j`` becomes one MS gate
wrapped in single-qubit Clifford basis changes, and the logical circuit is
framed by the fault-tolerant init / syndrome / final circuits.

Unencoded target: rotations become phase gadgets (CNOT ladder around one MS),
single-qubit rotations stay single-qubit.

Also here: two-qubit KAK decomposition, ZXZ squashing of single-qubit runs,
boundary-Z stripping and SU(4) block merging used by the quantum-volume pipeline.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .circuits import Circuit, CircuitBuilder, Gate, build_final, build_init, build_syndrome
from .code import CodeLayout, LogicalPauli, NotCompilableError, physical_from_logical
from .pauli import PauliString

__all__ = [
    "LogicalRotation",
    "LogicalCircuit",
    "SyndromePolicy",
    "KAKDecomposition",
    "compile_pair_rotation",
    "compile_phase_gadget",
    "kak_decompose",
    "interaction_unitary",
    "squash_1q",
    "strip_boundary_z",
    "merge_su4",
    "encode_logical_circuit",
    "compile_unencoded",
    "su4_layers_to_logical",
    "logical_statevector",
    "NotCompilableError",
]


# ---------------------------------------------------------------------------
# Logical circuits
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LogicalRotation:
    """``exp(-i theta G / 2)`` for a logical Pauli generator ``G`` (sign included)."""

    generator: LogicalPauli
    theta: float

    def __post_init__(self):
        if self.generator.pauli.is_identity():
            raise ValueError("rotation generator must be non-trivial")

    @classmethod
    def from_label(cls, label: str, theta: float) -> LogicalRotation:
        return cls(LogicalPauli.from_label(label), float(theta))

    @property
    def support(self) -> tuple[int, ...]:
        return self.generator.pauli.support

    @property
    def signed_theta(self) -> float:
        return self.generator.sign * self.theta

    def inverse(self) -> LogicalRotation:
        return LogicalRotation(self.generator, -self.theta)

    def to_dict(self) -> dict:
        return {"pauli": self.generator.to_label(), "theta": float(self.theta)}


@dataclass(frozen=True)
class LogicalCircuit:
    """Serial list of logical rotations on ``k`` logical qubits.

    ``layer_bounds`` are exclusive end indices into ``rotations`` marking the
    end of each circuit layer (used for layer-based syndrome placement).
    """

    k: int
    rotations: tuple[LogicalRotation, ...] = ()
    layer_bounds: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "rotations", tuple(self.rotations))
        object.__setattr__(self, "layer_bounds", tuple(self.layer_bounds))
        for r in self.rotations:
            if r.generator.k != self.k:
                raise ValueError("rotation acts on the wrong number of qubits")

    def to_dict(self) -> dict:
        return {
            "schema": "iceberg.logical-circuit",
            "version": 1,
            "k": self.k,
            "rotations": [r.to_dict() for r in self.rotations],
            "layer_bounds": list(self.layer_bounds),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> LogicalCircuit:
        from .circuits import SchemaError

        if doc.get("schema") != "iceberg.logical-circuit":
            raise SchemaError("$.schema: expected 'iceberg.logical-circuit'")
        try:
            k = int(doc["k"])
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError("$.k: missing or not an integer") from exc
        rots = []
        for i, d in enumerate(doc.get("rotations", [])):
            try:
                rots.append(LogicalRotation.from_label(d["pauli"], float(d["theta"])))
            except (KeyError, TypeError, ValueError) as exc:
                raise SchemaError(f"$.rotations[{i}]: {exc}") from exc
            if rots[-1].generator.k != k:
                raise SchemaError(f"$.rotations[{i}].pauli: expected {k} letters")
        return cls(k, tuple(rots), tuple(int(b) for b in doc.get("layer_bounds", [])))


@dataclass(frozen=True)
class SyndromePolicy:
    """Where mid-circuit syndrome rounds go.

    ``none``: no rounds; ``rounds``: ``count`` rounds splitting the compiled
    gate list into equal chunks; ``every``: one round after every ``layers``
    logical layers (never after the last layer, which the final readout covers).
    """

    mode: str = "none"
    count: int = 0
    layers: int = 0

    def __post_init__(self):
        if self.mode not in ("none", "rounds", "every"):
            raise ValueError(f"unknown policy mode {self.mode!r}")
        if self.count < 0 or self.layers < 0:
            raise ValueError("policy parameters must be non-negative")
        if self.mode == "every" and self.layers < 1:
            raise ValueError("'every' policy needs layers >= 1")

    @classmethod
    def none(cls) -> SyndromePolicy:
        return cls("none")

    @classmethod
    def rounds(cls, count: int) -> SyndromePolicy:
        return cls("rounds", count=count)

    @classmethod
    def every(cls, layers: int) -> SyndromePolicy:
        return cls("every", layers=layers)

    @classmethod
    def parse(cls, text: str) -> SyndromePolicy:
        """``"none"``, ``"rounds:2"`` or ``"every:16"``."""
        mode, _, arg = text.partition(":")
        if mode == "none":
            return cls.none()
        if mode == "rounds":
            return cls.rounds(int(arg))
        if mode == "every":
            return cls.every(int(arg))
        raise ValueError(f"cannot parse syndrome policy {text!r}")

    def __str__(self) -> str:
        if self.mode == "rounds":
            return f"rounds:{self.count}"
        if self.mode == "every":
            return f"every:{self.layers}"
        return "none"


# ---------------------------------------------------------------------------
# Rotation compilation
# ---------------------------------------------------------------------------


def _to_z(basis: str, q: int) -> list[Gate]:
    """Gates V with V sigma V^dagger = Z (applied before the Z-type kernel)."""
    if basis == "X":
        return [Gate("H", (q,))]
    if basis == "Y":
        return [Gate("Sdg", (q,)), Gate("H", (q,))]
    return []


def _from_z(basis: str, q: int) -> list[Gate]:
    return [g.inverse() for g in reversed(_to_z(basis, q))]


def compile_pair_rotation(basis: str, i: int, j: int, theta: float, sign: int = 1) -> list[Gate]:
    """``exp(-i sign theta sigma_i sigma_j / 2)`` as basis changes around ``MS(i, j)``."""
    if i == j:
        raise ValueError("i and j must differ")
    if basis not in ("X", "Y", "Z"):
        raise ValueError(f"bad basis {basis!r}")
    return [
        *_to_z(basis, i),
        *_to_z(basis, j),
        Gate("MS", (i, j), sign * theta),
        *_from_z(basis, i),
        *_from_z(basis, j),
    ]


def compile_phase_gadget(generator: PauliString | LogicalPauli, theta: float, qubits: Sequence[int] | None = None) -> list[Gate]:
    """``exp(-i theta P / 2)`` for a Pauli ``P`` on unencoded qubits.

    Weight 1 becomes a single rotation; weight >= 2 uses a CNOT parity ladder
    over the support onto the penultimate support qubit and one MS on the last
    two.  ``qubits`` optionally maps generator positions to circuit qubits.
    """
    if isinstance(generator, LogicalPauli):
        generator = generator.as_pauli()
    hp = generator.hermitian_phase
    if hp not in (0, 2):
        raise ValueError("generator must be Hermitian")
    if generator.is_identity():
        raise ValueError("trivial generator")
    theta = -theta if hp == 2 else theta
    qmap = list(qubits) if qubits is not None else list(range(generator.n_qubits))
    sup = generator.support
    letters = {q: generator.letter(q) for q in sup}
    if len(sup) == 1:
        (q,) = sup
        c, pq = letters[q], qmap[q]
        if c == "Z":
            return [Gate("Rz", (pq,), theta)]
        if c == "X":
            return [Gate("Rx", (pq,), theta)]
        return [Gate("Sdg", (pq,)), Gate("Rx", (pq,), theta), Gate("S", (pq,))]
    phys = [qmap[q] for q in sup]
    pre = [g for q in sup for g in _to_z(letters[q], qmap[q])]
    post = [g for q in sup for g in _from_z(letters[q], qmap[q])]
    ladder = [Gate("CNOT", (a, b)) for a, b in zip(phys[:-2], phys[1:-1])]
    kernel = Gate("MS", (phys[-2], phys[-1]), theta)
    return pre + ladder + [kernel] + ladder[::-1] + post


def _encoded_gates(rot: LogicalRotation, layout: CodeLayout) -> list[Gate]:
    basis, i, j, sign = physical_from_logical(layout, rot.generator)
    return compile_pair_rotation(basis, i, j, rot.theta, sign)


def _round_positions(mode: SyndromePolicy, lc: LogicalCircuit, sizes: list[int]) -> list[int]:
    """Group indices after which a syndrome round is inserted (0 = before any group)."""
    if mode.mode == "none":
        return []
    if mode.mode == "every":
        n = len(lc.rotations)
        return [
            lc.layer_bounds[m - 1]
            for m in range(mode.layers, len(lc.layer_bounds) + 1, mode.layers)
            if lc.layer_bounds[m - 1] < n
        ]
    total = sum(sizes)
    cum = np.cumsum([0] + sizes)
    out = []
    for m in range(1, mode.count + 1):
        target = m * total / (mode.count + 1)
        # first group boundary at or beyond the target gate count
        out.append(int(np.searchsorted(cum, target - 1e-9, side="left")))
    return out


def encode_logical_circuit(
    lc: LogicalCircuit,
    layout: CodeLayout,
    policy: SyndromePolicy = SyndromePolicy(),
    init: Circuit | None = None,
    syndrome: Circuit | None = None,
    final: Circuit | None = None,
) -> Circuit:
    """Init, chunks of compiled logical gates separated by syndrome rounds, final readout."""
    if lc.k != layout.k:
        raise ValueError("logical circuit and layout disagree on k")
    groups = [_encoded_gates(r, layout) for r in lc.rotations]
    positions = sorted(_round_positions(policy, lc, [len(g) for g in groups]))
    init = init or build_init(layout)
    syndrome = syndrome or build_syndrome(layout)
    final = final or build_final(layout)
    circ = Circuit(layout.n_total, init.gates, init.n_clbits, {f"init/{r}": b for r, b in init.roles.items()}, "encoded")
    pending: list[Gate] = []
    r = 0
    pos_iter = iter(positions)
    nxt = next(pos_iter, None)
    for gi in range(len(groups) + 1):
        while nxt is not None and nxt == gi:
            circ = _append_gates(circ, pending)
            pending = []
            r += 1
            circ = circ.compose(syndrome, prefix=f"round{r}/")
            nxt = next(pos_iter, None)
        if gi < len(groups):
            pending.extend(groups[gi])
    circ = _append_gates(circ, pending)
    return circ.compose(final, prefix="final/")


def _append_gates(circ: Circuit, gates: list[Gate]) -> Circuit:
    if not gates:
        return circ
    return Circuit(circ.n_qubits, circ.gates + tuple(gates), circ.n_clbits, circ.roles, circ.kind)


def syndrome_round_count(circuit: Circuit) -> int:
    return len({r.split("/")[0] for r in circuit.roles if r.startswith("round")})


def compile_unencoded(lc: LogicalCircuit) -> Circuit:
    """Plain k-qubit circuit: reset, phase gadgets for every rotation, measure all."""
    cb = CircuitBuilder(lc.k, kind="unencoded")
    cb.reset(*range(lc.k))
    for rot in lc.rotations:
        cb.extend(compile_phase_gadget(rot.generator, rot.theta))
    for q in range(lc.k):
        cb.measure(q, "data")
    return cb.build()


# ---------------------------------------------------------------------------
# KAK decomposition
# ---------------------------------------------------------------------------

_I2 = np.eye(2, dtype=complex)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)
_H = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
_S = np.diag([1, 1j]).astype(complex)
_RX90 = np.array([[1, -1j], [-1j, 1]], dtype=complex) / math.sqrt(2)
_PAULIS2 = (np.kron(_X, _X), np.kron(_Y, _Y), np.kron(_Z, _Z))

_MAGIC = np.array(
    [[1, 0, 0, 1j], [0, 1j, 1, 0], [0, 1j, -1, 0], [1, 0, 0, -1j]], dtype=complex
) / math.sqrt(2)
# XX, YY, ZZ are diagonal in the magic basis; these are their eigenvalue signs
_MAGIC_SIGNS = np.array([np.real(np.diag(_MAGIC.conj().T @ p @ _MAGIC)) for p in _PAULIS2])


def interaction_unitary(txx: float, tyy: float, tzz: float) -> np.ndarray:
    """``exp(-i (txx XX + tyy YY + tzz ZZ) / 2)``."""
    u = np.eye(4, dtype=complex)
    for t, p in zip((txx, tyy, tzz), _PAULIS2):
        u = (math.cos(t / 2) * np.eye(4) - 1j * math.sin(t / 2) * p) @ u
    return u


@dataclass
class KAKDecomposition:
    """``U = phase * kron(*post) @ interaction(angles) @ kron(*pre)``.

    ``pre`` acts first in time, ``post`` last; each pair is (first qubit, second qubit).
    """

    pre: tuple[np.ndarray, np.ndarray]
    angles: tuple[float, float, float]
    post: tuple[np.ndarray, np.ndarray]
    phase: complex

    def unitary(self) -> np.ndarray:
        return (
            self.phase
            * np.kron(*self.post)
            @ interaction_unitary(*self.angles)
            @ np.kron(*self.pre)
        )


def _kron_factor(k: np.ndarray) -> tuple[np.ndarray, np.ndarray, complex]:
    """Split ``k = g * kron(a, b)`` with ``a, b`` in SU(2)."""
    t = k.reshape(2, 2, 2, 2).transpose(0, 2, 1, 3).reshape(4, 4)
    u, s, vh = np.linalg.svd(t)
    a = u[:, 0].reshape(2, 2) * math.sqrt(s[0])
    b = vh[0, :].reshape(2, 2) * math.sqrt(s[0])
    da, db = np.sqrt(np.linalg.det(a)), np.sqrt(np.linalg.det(b))
    return a / da, b / db, complex(da * db)


def _orthogonal_eigvecs(m: np.ndarray) -> np.ndarray:
    """Real orthogonal P diagonalising the symmetric unitary ``m``."""
    re, im = m.real, m.imag
    for c in (1.0, 0.6180339887, 1.4142135623, 0.3819660113, 2.7182818284, 0.2360679775):
        _, p = np.linalg.eigh(re + c * im)
        d = p.T @ m @ p
        if np.allclose(d, np.diag(np.diag(d)), atol=1e-10):
            if np.linalg.det(p) < 0:
                p[:, 0] *= -1
            return p
    raise np.linalg.LinAlgError("failed to diagonalise the KAK symmetric matrix")


def _canonicalize(pre, angles, post, phase):
    """Move angles into pi/2 >= a >= b >= |c| with equivalent local corrections."""
    v = list(angles)
    b1, b2 = pre
    a1, a2 = post
    paulis1 = (_X, _Y, _Z)

    # 1. reduce into (-pi/2, pi/2] using exp(-+i pi P/2) = -+i P (local)
    for i in range(3):
        while v[i] > math.pi / 2 + 1e-12:
            v[i] -= math.pi
            b1, b2 = paulis1[i] @ b1, paulis1[i] @ b2
            phase *= -1j
        while v[i] <= -math.pi / 2 + 1e-12:
            v[i] += math.pi
            b1, b2 = paulis1[i] @ b1, paulis1[i] @ b2
            phase *= 1j

    # 2. sort by magnitude with local Clifford swaps: (C x C) N(v) (C x C)^dag = N(swapped)
    swappers = {(0, 1): _S, (0, 2): _H, (1, 2): _RX90}
    for _ in range(3):
        for i, j in ((0, 1), (1, 2), (0, 1)):
            if abs(v[i]) + 1e-12 < abs(v[j]):
                c = swappers[(i, j)]
                v[i], v[j] = v[j], v[i]
                a1, a2 = a1 @ c.conj().T, a2 @ c.conj().T
                b1, b2 = c @ b1, c @ b2

    # 3. signs: conjugating by one local Pauli flips the two angles it anticommutes with
    if v[0] < 0:
        v[0], v[2] = -v[0], -v[2]
        a1, b1 = a1 @ _Y, _Y @ b1
    if v[1] < 0:
        v[1], v[2] = -v[1], -v[2]
        a1, b1 = a1 @ _X, _X @ b1
    return (b1, b2), tuple(float(x) for x in v), (a1, a2), phase


def kak_decompose(u: np.ndarray, canonical: bool = True) -> KAKDecomposition:
    """Two-qubit KAK decomposition via the magic basis.

    With ``canonical`` the interaction angles satisfy
    ``pi/2 >= txx >= tyy >= |tzz|``.
    """
    u = np.asarray(u, dtype=complex)
    if u.shape != (4, 4) or not np.allclose(u.conj().T @ u, np.eye(4), atol=1e-10):
        raise ValueError("input must be a 4x4 unitary")
    det = np.linalg.det(u)
    g0 = det ** 0.25
    su = u / g0
    up = _MAGIC.conj().T @ su @ _MAGIC
    m = up.T @ up
    p = _orthogonal_eigvecs(m)
    d = np.diag(p.T @ m @ p)
    s = np.sqrt(d)
    k1 = up @ p @ np.diag(1 / s)
    if np.linalg.det(k1.real) < 0:
        s[0] = -s[0]
        k1 = up @ p @ np.diag(1 / s)
    k1 = k1.real
    # solve angle(s_k) = g - (a sx_k + b sy_k + c sz_k)/2
    mat = np.column_stack([np.ones(4), -0.5 * _MAGIC_SIGNS.T])
    g, a, b, c = np.linalg.solve(mat, np.angle(s))
    left = _MAGIC @ k1 @ _MAGIC.conj().T
    right = _MAGIC @ p.T @ _MAGIC.conj().T
    a1, a2, ga = _kron_factor(left)
    b1, b2, gb = _kron_factor(right)
    phase = complex(g0 * ga * gb * np.exp(1j * g))
    pre, angles, post = (b1, b2), (float(a), float(b), float(c)), (a1, a2)
    if canonical:
        pre, angles, post, phase = _canonicalize(pre, angles, post, phase)
    return KAKDecomposition(pre, angles, post, complex(phase))


# ---------------------------------------------------------------------------
# Single-qubit squashing
# ---------------------------------------------------------------------------

_AXIS = {"X": _X, "Y": _Y, "Z": _Z}


def rotation_matrix(axis: str, theta: float) -> np.ndarray:
    return math.cos(theta / 2) * _I2 - 1j * math.sin(theta / 2) * _AXIS[axis]


def sequence_matrix(seq: Iterable[tuple[str, float]]) -> np.ndarray:
    """Product of rotations listed in time order."""
    u = _I2.copy()
    for axis, theta in seq:
        u = rotation_matrix(axis, theta) @ u
    return u


def zxz_angles(u: np.ndarray) -> tuple[float, float, float]:
    """``(alpha, beta, gamma)`` with ``u ~ Rz(alpha) Rx(beta) Rz(gamma)`` up to global phase."""
    u = u / np.sqrt(np.linalg.det(u))
    c, s = abs(u[0, 0]), abs(u[1, 0])
    beta = 2 * math.atan2(s, c)
    tot = 2 * np.angle(u[1, 1]) if c > 1e-12 else None
    diff = 2 * np.angle(1j * u[1, 0]) if s > 1e-12 else None
    if tot is None:
        tot = diff
    if diff is None:
        diff = tot
    return float((tot + diff) / 2), float(beta), float((tot - diff) / 2)


def _trivial(theta: float, tol: float = 1e-12) -> bool:
    r = math.remainder(theta, 2 * math.pi)
    return abs(r) < tol


def squash_1q(seq: Sequence[tuple[str, float]], tol: float = 1e-12) -> list[tuple[str, float]]:
    """Replace a run of single-qubit rotations by at most Rz, Rx, Rz (time order).

    Rotations that are multiples of 2*pi are dropped (identity up to phase).
    """
    if not seq:
        return []
    alpha, beta, gamma = zxz_angles(sequence_matrix(seq))
    out: list[tuple[str, float]] = []
    for axis, theta in (("Z", gamma), ("X", beta), ("Z", alpha)):
        if _trivial(theta, tol):
            continue
        if out and out[-1][0] == axis:
            merged = out[-1][1] + theta
            out.pop()
            if not _trivial(merged, tol):
                out.append((axis, merged))
        else:
            out.append((axis, theta))
    return out


# ---------------------------------------------------------------------------
# Logical-circuit passes for the QV pipeline
# ---------------------------------------------------------------------------


def _single(k: int, q: int, axis: str, theta: float) -> LogicalRotation:
    return LogicalRotation(LogicalPauli(PauliString.from_ops(k, {q: axis})), theta)


def _is_1q(rot: LogicalRotation) -> bool:
    return rot.generator.weight == 1


def squash_logical(lc: LogicalCircuit) -> LogicalCircuit:
    """Squash every maximal run of single-qubit rotations on each qubit."""
    k = lc.k
    pending: dict[int, list[tuple[str, float]]] = {q: [] for q in range(k)}
    out: list[LogicalRotation] = []

    def flush(q):
        for axis, theta in squash_1q(pending[q]):
            out.append(_single(k, q, axis, theta))
        pending[q] = []

    for rot in lc.rotations:
        if _is_1q(rot):
            (q,) = rot.support
            pending[q].append((rot.generator.pauli.letter(q), rot.signed_theta))
            continue
        for q in rot.support:
            flush(q)
        out.append(rot)
    for q in range(k):
        flush(q)
    return LogicalCircuit(k, tuple(out))


def strip_boundary_z(lc: LogicalCircuit) -> LogicalCircuit:
    """Drop single-qubit Z rotations acting right after |0> preparation or right before Z readout."""
    rots = list(lc.rotations)
    keep = [True] * len(rots)
    for q in range(lc.k):
        touching = [i for i, r in enumerate(rots) if q in r.support]
        for order in (touching, touching[::-1]):
            for i in order:
                r = rots[i]
                if _is_1q(r) and r.generator.pauli.letter(q) == "Z":
                    keep[i] = False
                else:
                    break
    return LogicalCircuit(lc.k, tuple(r for r, kp in zip(rots, keep) if kp))


@dataclass
class SU4Block:
    qubits: tuple[int, int]
    matrix: np.ndarray


def _orient(block: SU4Block) -> SU4Block:
    a, b = block.qubits
    if a < b:
        return block
    swap = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)
    return SU4Block((b, a), swap @ block.matrix @ swap)


def merge_su4(layers: Sequence[Sequence[SU4Block]]) -> list[list[SU4Block]]:
    """Fuse consecutive blocks on the same qubit pair (the later one is multiplied in).

    A block is merged into an earlier one only if no other block touched either
    qubit in between; the merged block stays in the earlier layer.
    """
    out: list[list[SU4Block]] = []
    last: dict[int, tuple[int, int]] = {}  # qubit -> (layer index, position)
    for layer in layers:
        new_layer: list[SU4Block] = []
        out.append(new_layer)
        li = len(out) - 1
        for blk in layer:
            blk = _orient(blk)
            a, b = blk.qubits
            prev_a, prev_b = last.get(a), last.get(b)
            if prev_a is not None and prev_a == prev_b:
                pl, pp = prev_a
                target = out[pl][pp]
                out[pl][pp] = SU4Block(target.qubits, blk.matrix @ target.matrix)
                continue
            new_layer.append(SU4Block(blk.qubits, blk.matrix.copy()))
            last[a] = last[b] = (li, len(new_layer) - 1)
    return out


def _unitary_rotations(k: int, q: int, u: np.ndarray) -> list[LogicalRotation]:
    alpha, beta, gamma = zxz_angles(u)
    return [_single(k, q, "Z", gamma), _single(k, q, "X", beta), _single(k, q, "Z", alpha)]


def su4_layers_to_logical(k: int, layers: Sequence[Sequence[SU4Block]], squash: bool = True, strip: bool = True) -> LogicalCircuit:
    """KAK-decompose each block into logical X/Z and XX/YY/ZZ rotations, then optimise."""
    rots: list[LogicalRotation] = []
    bounds = []
    for layer in layers:
        for blk in layer:
            blk = _orient(blk)
            p, q = blk.qubits
            kak = kak_decompose(blk.matrix)
            rots += _unitary_rotations(k, p, kak.pre[0]) + _unitary_rotations(k, q, kak.pre[1])
            for letter, theta in zip("XYZ", kak.angles):
                if not _trivial(theta):
                    gen = LogicalPauli(PauliString.from_ops(k, {p: letter, q: letter}))
                    rots.append(LogicalRotation(gen, theta))
            rots += _unitary_rotations(k, p, kak.post[0]) + _unitary_rotations(k, q, kak.post[1])
        bounds.append(len(rots))
    lc = LogicalCircuit(k, tuple(rots), tuple(bounds))
    if squash:
        lc = squash_logical(lc)
    if strip:
        lc = strip_boundary_z(lc)
    return lc


# ---------------------------------------------------------------------------
# Direct logical simulation (ideal reference)
# ---------------------------------------------------------------------------


def _apply_pauli_vec(psi: np.ndarray, p: PauliString) -> np.ndarray:
    """``p |psi>`` for a flat state with qubit 0 most significant."""
    n = p.n_qubits
    idx = np.arange(psi.size)
    xmask = sum(1 << (n - 1 - q) for q in range(n) if (p.x >> q) & 1)
    zmask = sum(1 << (n - 1 - q) for q in range(n) if (p.z >> q) & 1)
    # (X^x Z^z)|j> = (-1)^{z.j} |j ^ x>
    zpar = np.array([bin(v).count("1") & 1 for v in (idx & zmask)]) if zmask else np.zeros(psi.size, int)
    out = np.empty_like(psi)
    out[idx ^ xmask] = psi * (1 - 2 * zpar)
    return out * (1j ** p.phase)


def logical_statevector(lc: LogicalCircuit, psi: np.ndarray | None = None) -> np.ndarray:
    """Apply the rotations of ``lc`` to ``psi`` (default ``|0...0>``) exactly."""
    dim = 2**lc.k
    if psi is None:
        psi = np.zeros(dim, dtype=complex)
        psi[0] = 1
    psi = np.asarray(psi, dtype=complex).copy()
    for rot in lc.rotations:
        p = rot.generator.as_pauli()
        psi = math.cos(rot.theta / 2) * psi - 1j * math.sin(rot.theta / 2) * _apply_pauli_vec(psi, p)
    return psi


def logical_unitary(lc: LogicalCircuit) -> np.ndarray:
    dim = 2**lc.k
    return np.column_stack([logical_statevector(lc, np.eye(dim, dtype=complex)[:, j]) for j in range(dim)])
