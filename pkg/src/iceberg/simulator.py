"""Monte-Carlo statevector simulation with Pauli Kraus sampling and post-selection.

State layout: an ndarray of shape ``(2,) * m`` where axis ``q`` is qubit ``q``;
flattened, qubit 0 is the most significant bit (same as :func:`unitary_of`).

Each trial samples one Kraus branch per noise location, which turns the noisy
evolution into a unitary one.  Mid-circuit detection measurements are either
sampled (``mode="shots"``) or projected onto the accepting outcome with the
acceptance probability recorded (``mode="postselect"``).
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from itertools import product

import numpy as np

from .circuits import ONE_QUBIT, TWO_QUBIT, Circuit, Gate, gate_matrix
from .code import CodeLayout

__all__ = [
    "NoiseModel",
    "TrialOutcome",
    "ExperimentStats",
    "Program",
    "run_trajectory",
    "survival_probability",
    "unencoded_survival",
    "estimate",
    "sample_kraus",
    "trial_rng",
    "ideal_state",
    "MAX_QUBITS",
]

MAX_QUBITS = 22
TWO_QUBIT_PAULIS = tuple(a + b for a, b in product("IXYZ", repeat=2) if a + b != "II")
ONE_QUBIT_PAULIS = ("X", "Y", "Z")


@dataclass(frozen=True)
class NoiseModel:
    p_init_flip: float = 4e-4
    p_meas_flip: float = 3e-3
    p_1q: float = 4e-4
    p_2q: float = 3e-3

    def __post_init__(self):
        for name, v in asdict(self).items():
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} is not a probability")

    @classmethod
    def zero(cls) -> NoiseModel:
        return cls(0.0, 0.0, 0.0, 0.0)

    @property
    def is_zero(self) -> bool:
        return not any(asdict(self).values())

    def probability(self, g: Gate) -> float:
        if g.name == "Reset":
            return self.p_init_flip
        if g.name == "MeasureZ":
            return self.p_meas_flip
        if g.name in TWO_QUBIT:
            return self.p_2q
        return self.p_1q


def sample_kraus(rng: np.random.Generator, kind: str, p: float) -> str:
    """Sample a Pauli branch; ``""`` is the no-error branch.

    ``kind`` is ``"bitflip"`` (X with probability p), ``"1q"`` (X/Y/Z each p/3)
    or ``"2q"`` (each of the 15 non-identity two-qubit Paulis with p/15).
    """
    if rng.random() >= p:
        return ""
    if kind == "bitflip":
        return "X"
    if kind == "1q":
        return ONE_QUBIT_PAULIS[rng.integers(3)]
    if kind == "2q":
        return TWO_QUBIT_PAULIS[rng.integers(15)]
    raise ValueError(f"unknown channel {kind!r}")


def trial_rng(seed: int, circuit_id: int, trial: int) -> np.random.Generator:
    """Independent stream per (master seed, circuit, trial)."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(circuit_id, trial))
    return np.random.Generator(np.random.PCG64(ss))


# ---------------------------------------------------------------------------
# State manipulation
# ---------------------------------------------------------------------------

_PAULI_MATS = {
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def _slice(m: int, q: int, v: int):
    idx = [slice(None)] * m
    idx[q] = v
    return tuple(idx)


def apply_matrix(psi: np.ndarray, u: np.ndarray, qubits: tuple[int, ...]) -> np.ndarray:
    k = len(qubits)
    if k == 1:
        out = np.tensordot(u, psi, axes=([1], [qubits[0]]))
        return np.moveaxis(out, 0, qubits[0])
    t = u.reshape(2, 2, 2, 2)
    out = np.tensordot(t, psi, axes=([2, 3], list(qubits)))
    return np.moveaxis(out, [0, 1], list(qubits))


def apply_diagonal(psi: np.ndarray, diag: np.ndarray, qubits: tuple[int, ...]) -> np.ndarray:
    m = psi.ndim
    shape = [1] * m
    order = sorted(range(len(qubits)), key=lambda i: qubits[i])
    d = diag.reshape((2,) * len(qubits)).transpose(order)
    for q in qubits:
        shape[q] = 2
    psi *= d.reshape(shape)
    return psi


def apply_pauli(psi: np.ndarray, letters: str, qubits: tuple[int, ...]) -> np.ndarray:
    for c, q in zip(letters, qubits):
        if c == "I":
            continue
        if c in "XY":
            psi = np.flip(psi, axis=q).copy()
        if c == "Z":
            psi[_slice(psi.ndim, q, 1)] *= -1
        elif c == "Y":
            # Y = i X Z; after the flip, amplitudes that came from |1> sit at |0>
            psi[_slice(psi.ndim, q, 0)] *= -1j
            psi[_slice(psi.ndim, q, 1)] *= 1j
    return psi


def _prob_one(psi: np.ndarray, q: int) -> float:
    return float(np.vdot(psi[_slice(psi.ndim, q, 1)], psi[_slice(psi.ndim, q, 1)]).real)


def _sample_outcome(rng: np.random.Generator, p1: float, eps: float = 1e-12) -> int:
    if p1 < eps:
        return 0
    if p1 > 1.0 - eps:
        return 1
    return int(rng.random() < p1)


def _project(psi: np.ndarray, q: int, outcome: int, prob: float) -> np.ndarray:
    psi[_slice(psi.ndim, q, 1 - outcome)] = 0
    psi /= math.sqrt(prob)
    return psi


# ---------------------------------------------------------------------------
# Compiled program: fused unitary segments + measurement/reset steps
# ---------------------------------------------------------------------------


@dataclass
class _Segment:
    qubits: tuple[int, ...]
    gate_ids: list[int]
    matrix: np.ndarray | None = None
    diagonal: np.ndarray | None = None


class Program:
    """A circuit pre-grouped into fused 1-2 qubit unitary segments."""

    def __init__(self, circuit: Circuit, noise: NoiseModel):
        if circuit.n_qubits > MAX_QUBITS:
            raise ValueError(f"{circuit.n_qubits} qubits exceed the limit of {MAX_QUBITS}")
        self.circuit = circuit
        self.noise = noise
        self.probs = np.array([noise.probability(g) for g in circuit.gates])
        self.steps: list = []
        self._detect = set(circuit.detection_bits)
        self._role_of = {b: r for r, bits in circuit.roles.items() for b in bits}
        self._build()

    def _build(self):
        current: _Segment | None = None
        for idx, g in enumerate(self.circuit.gates):
            if g.is_unitary:
                if current is not None and len(set(current.qubits) | set(g.qubits)) <= 2:
                    current.qubits = tuple(sorted(set(current.qubits) | set(g.qubits)))
                    current.gate_ids.append(idx)
                    continue
                if current is not None:
                    self.steps.append(current)
                current = _Segment(tuple(sorted(g.qubits)), [idx])
            else:
                if current is not None:
                    self.steps.append(current)
                    current = None
                self.steps.append(idx)
        if current is not None:
            self.steps.append(current)
        for step in self.steps:
            if isinstance(step, _Segment):
                u = self._fuse(step, {})
                d = np.diag(u)
                if np.allclose(u, np.diag(d), atol=1e-14):
                    step.diagonal = d.copy()
                else:
                    step.matrix = u

    def _fuse(self, seg: _Segment, errors: dict[int, str]) -> np.ndarray:
        qs = seg.qubits
        dim = 2 ** len(qs)
        u = np.eye(dim, dtype=complex)
        for idx in seg.gate_ids:
            g = self.circuit.gates[idx]
            u = _local(gate_matrix(g), g.qubits, qs) @ u
            if idx in errors:
                for c, q in zip(errors[idx], g.qubits):
                    if c != "I":
                        u = _local(_PAULI_MATS[c], (q,), qs) @ u
        return u

    def sample_errors(self, rng: np.random.Generator) -> dict[int, str]:
        hits = np.nonzero(rng.random(len(self.probs)) < self.probs)[0]
        errors = {}
        for idx in hits:
            g = self.circuit.gates[idx]
            if g.name in ("Reset", "MeasureZ"):
                errors[int(idx)] = "X"
            elif g.name in TWO_QUBIT:
                errors[int(idx)] = TWO_QUBIT_PAULIS[rng.integers(15)]
            else:
                errors[int(idx)] = ONE_QUBIT_PAULIS[rng.integers(3)]
        return errors


def _local(u: np.ndarray, gate_qubits: tuple[int, ...], seg_qubits: tuple[int, ...]) -> np.ndarray:
    """Lift ``u`` acting on ``gate_qubits`` to the (sorted) segment qubits."""
    if gate_qubits == seg_qubits:
        return u
    if len(seg_qubits) == 1:
        return u
    if len(gate_qubits) == 1:
        eye = np.eye(2, dtype=complex)
        return np.kron(u, eye) if gate_qubits[0] == seg_qubits[0] else np.kron(eye, u)
    # reversed two-qubit order
    swap = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)
    return swap @ u @ swap


@dataclass
class TrialOutcome:
    mode: str
    bits: np.ndarray | None = None
    state: np.ndarray | None = None
    accept: float = 1.0
    round_accept: dict[str, float] = field(default_factory=dict)
    discarded: bool = False
    n_errors: int = 0


def run_trajectory(
    circuit: Circuit | Program,
    noise: NoiseModel | None = None,
    rng: np.random.Generator | None = None,
    mode: str = "postselect",
) -> TrialOutcome:
    """Run one Kraus-sampled trajectory.

    In ``"postselect"`` mode detection measurements are projected onto 0 and
    data measurements are skipped (the returned ``state`` still holds them);
    in ``"shots"`` mode every measurement is sampled and ``bits`` returned.
    """
    if mode not in ("postselect", "shots"):
        raise ValueError("mode must be 'postselect' or 'shots'")
    prog = circuit if isinstance(circuit, Program) else Program(circuit, noise or NoiseModel.zero())
    if rng is None:
        rng = np.random.default_rng(0)
    circ = prog.circuit
    m = circ.n_qubits
    psi = np.zeros((2,) * m, dtype=complex)
    psi[(0,) * m] = 1.0
    errors = prog.sample_errors(rng) if prog.probs.any() else {}
    out = TrialOutcome(mode, n_errors=len(errors))
    bits = np.zeros(circ.n_clbits, dtype=np.uint8)
    for step in prog.steps:
        if isinstance(step, _Segment):
            if errors and any(i in errors for i in step.gate_ids):
                psi = apply_matrix(psi, prog._fuse(step, errors), step.qubits)
            elif step.diagonal is not None:
                psi = apply_diagonal(psi, step.diagonal, step.qubits)
            else:
                psi = apply_matrix(psi, step.matrix, step.qubits)
            continue
        g = circ.gates[step]
        q = g.qubits[0]
        if g.name == "Reset":
            p1 = _prob_one(psi, q)
            outcome = _sample_outcome(rng, p1)
            psi = _project(psi, q, outcome, p1 if outcome else 1.0 - p1)
            if outcome:
                psi = np.flip(psi, axis=q).copy()
            if step in errors:
                psi = apply_pauli(psi, "X", (q,))
            continue
        # MeasureZ, noise acts before the measurement
        if step in errors:
            psi = apply_pauli(psi, "X", (q,))
        is_detect = g.clbit in prog._detect
        if mode == "postselect":
            if not is_detect:
                continue
            p0 = 1.0 - _prob_one(psi, q)
            role = prog._role_of.get(g.clbit, "")
            out.round_accept[role] = out.round_accept.get(role, 1.0) * max(p0, 0.0)
            out.accept *= max(p0, 0.0)
            if p0 <= 1e-14:
                out.accept = 0.0
                out.discarded = True
                return out
            psi = _project(psi, q, 0, p0)
        else:
            p1 = _prob_one(psi, q)
            outcome = _sample_outcome(rng, p1)
            psi = _project(psi, q, outcome, p1 if outcome else 1.0 - p1)
            bits[g.clbit] = outcome
    out.state = psi
    if mode == "shots":
        out.bits = bits
    return out


def ideal_state(circuit: Circuit) -> np.ndarray:
    """Noiseless post-selected final state."""
    out = run_trajectory(circuit, NoiseModel.zero(), np.random.default_rng(0), "postselect")
    if out.state is None:
        raise ValueError("circuit rejects with certainty in the noiseless case")
    return out.state


# ---------------------------------------------------------------------------
# Survival / decoding
# ---------------------------------------------------------------------------


def data_probabilities(state: np.ndarray, data_qubits) -> np.ndarray:
    """Marginal distribution over ``data_qubits`` (first listed = most significant)."""
    probs = np.abs(state) ** 2
    data_qubits = list(data_qubits)
    others = tuple(q for q in range(state.ndim) if q not in data_qubits)
    marg = probs.sum(axis=others) if others else probs
    # remaining axes are in increasing qubit order; reorder to data_qubits order
    kept = sorted(data_qubits)
    marg = np.transpose(marg, [kept.index(q) for q in data_qubits])
    return marg.reshape(-1)


def _decode_tables(layout: CodeLayout):
    n = layout.n
    idx = np.arange(2**n)
    bit = lambda q: (idx >> (n - 1 - q)) & 1  # noqa: E731
    parity = np.zeros_like(idx)
    for q in range(n):
        parity ^= bit(q)
    logical = np.zeros_like(idx)
    for i in range(layout.k):
        logical |= (bit(i) ^ bit(layout.b)) << (layout.k - 1 - i)
    return parity.astype(bool), logical


_DECODE_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def decode_tables(layout: CodeLayout):
    """``(odd_parity, logical_index)`` per data basis index; logical qubit 0 most significant."""
    if layout.k not in _DECODE_CACHE:
        _DECODE_CACHE[layout.k] = _decode_tables(layout)
    return _DECODE_CACHE[layout.k]


def logical_distribution(state: np.ndarray, layout: CodeLayout) -> tuple[np.ndarray, float]:
    """Probabilities of logical bitstrings with s_z = +1, and the s_z = -1 mass."""
    probs = data_probabilities(state, layout.data)
    odd, logical = decode_tables(layout)
    dist = np.bincount(logical[~odd], weights=probs[~odd], minlength=2**layout.k)
    return dist, float(probs[odd].sum())


def survival_probability(state: np.ndarray, layout: CodeLayout) -> tuple[float, float]:
    """``(survival, final_discard)``: mass decoding to s_z=+1 and logical all-zeros, and s_z=-1 mass."""
    dist, discard = logical_distribution(state, layout)
    return float(dist[0]), discard


def unencoded_survival(state: np.ndarray, qubits=None) -> float:
    """Probability of the all-zeros string on ``qubits`` (all by default)."""
    if qubits is None:
        return float(abs(state.reshape(-1)[0]) ** 2)
    return float(data_probabilities(state, qubits)[0])


# ---------------------------------------------------------------------------
# Estimation
# ---------------------------------------------------------------------------


@dataclass
class ExperimentStats:
    survival: float
    discard_rate: float
    survival_ci: tuple[float, float]
    discard_ci: tuple[float, float]
    trials: int
    seed: int
    per_trial_survival: list[float] = field(default_factory=list)
    per_trial_retained: list[float] = field(default_factory=list)

    def to_dict(self, per_trial: bool = False) -> dict:
        d = asdict(self)
        d["survival_ci"] = list(self.survival_ci)
        d["discard_ci"] = list(self.discard_ci)
        if not per_trial:
            d.pop("per_trial_survival")
            d.pop("per_trial_retained")
        return d

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(**kw), sort_keys=True)


def _trial_values(prog: Program, layout: CodeLayout | None, seed: int, circuit_id: int, trial: int):
    rng = trial_rng(seed, circuit_id, trial)
    out = run_trajectory(prog, rng=rng, mode="postselect")
    if out.discarded:
        return 0.0, 0.0
    if layout is None:
        data = list(dict.fromkeys(q for g in prog.circuit.gates if g.name == "MeasureZ" for q in g.qubits))
        return unencoded_survival(out.state, data or None), 1.0
    surv, disc = survival_probability(out.state, layout)
    # joint masses: survive-and-retained, retained
    return out.accept * surv, out.accept * (1.0 - disc)


def _ratio(num: np.ndarray, den: np.ndarray) -> float:
    s = den.sum()
    return float(num.sum() / s) if s > 0 else float("nan")


def estimate(
    circuit: Circuit,
    noise: NoiseModel,
    trials: int,
    seed: int,
    layout: CodeLayout | None = None,
    circuit_id: int = 0,
    bootstrap: int = 1000,
) -> ExperimentStats:
    """Post-selected survival and discard rate averaged over Kraus-sampled trials.

    ``survival`` is the retained-conditioned probability of reading the initial
    state, ``sum(accept*surv) / sum(accept*(1-final_discard))`` over trials.
    Unencoded circuits (``layout=None``) never discard.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    prog = Program(circuit, noise)
    vals = np.array([_trial_values(prog, layout, seed, circuit_id, t) for t in range(trials)])
    num, den = vals[:, 0], vals[:, 1]
    surv = _ratio(num, den)
    disc = 1.0 - float(den.mean())
    brng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(circuit_id, 1 << 30)))
    idx = brng.integers(0, trials, size=(bootstrap, trials))
    bn, bd = num[idx].sum(axis=1), den[idx].sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        bs = np.where(bd > 0, bn / np.where(bd > 0, bd, 1), np.nan)
    bdisc = 1.0 - bd / trials
    s_ci = tuple(float(v) for v in np.nanpercentile(bs, [2.5, 97.5])) if np.isfinite(bs).any() else (math.nan, math.nan)
    d_ci = tuple(float(v) for v in np.percentile(bdisc, [2.5, 97.5]))
    per = np.divide(num, den, out=np.full_like(num, np.nan), where=den > 0)
    return ExperimentStats(surv, disc, s_ci, d_ci, trials, seed, per.tolist(), den.tolist())
