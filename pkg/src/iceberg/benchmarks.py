"""Random mirror circuits and the logical quantum-volume test."""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .circuits import Circuit
from .code import CodeLayout, decode_bitmask, logical_from_physical_pair
from .compiler import (
    LogicalCircuit,
    LogicalRotation,
    SU4Block,
    SyndromePolicy,
    compile_unencoded,
    encode_logical_circuit,
    logical_statevector,
    merge_su4,
    su4_layers_to_logical,
)
from .simulator import ExperimentStats, NoiseModel, Program, estimate, run_trajectory, trial_rng

__all__ = [
    "MirrorSpec",
    "MirrorInstance",
    "gen_mirror",
    "mirror_experiment",
    "mirror_sweep",
    "batch_typicality",
    "QVSpec",
    "QVCircuit",
    "HOFReport",
    "gen_qv_blocks",
    "gen_qv_circuit",
    "haar_unitary",
    "heavy_set",
    "hof",
    "qv_test",
    "bootstrap_bounds",
    "default_shots",
    "LAYER_GRID",
    "to_csv",
    "plot_data",
]

LAYER_GRID = (4, 8, 16, 32, 64, 128)
_MIRROR_TAG = 0x4D495252
_QV_TAG = 0x51560000
_BOOT_TAG = 0x424F4F54


def _pmap(fn: Callable, items: Sequence, jobs: int = 1) -> list:
    """Order-preserving map; results do not depend on ``jobs``."""
    if jobs <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, items))


# ---------------------------------------------------------------------------
# Mirror circuits
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MirrorSpec:
    """``layers`` counts U and its inverse together.

    ``policy``: ``"none"``, ``"midpoint"`` (one round between U and its
    inverse when ``layers >= 32``), or any :meth:`SyndromePolicy.parse` string
    such as ``"every:16"``.
    """

    k: int
    layers: int
    include_globals: bool = True
    seed: int = 0
    policy: str = "none"

    def __post_init__(self):
        CodeLayout(self.k)
        if self.layers < 2 or self.layers % 2:
            raise ValueError("layers must be even and >= 2")
        self.syndrome_policy()

    def syndrome_policy(self) -> SyndromePolicy:
        if self.policy == "midpoint":
            return SyndromePolicy.every(self.layers // 2) if self.layers >= 32 else SyndromePolicy.none()
        return SyndromePolicy.parse(self.policy)


@dataclass
class MirrorInstance:
    spec: MirrorSpec
    instance: int
    physical: list[list[tuple[str, int, int, float]]]
    logical: LogicalCircuit
    encoded: Circuit
    unencoded: Circuit

    @property
    def forward(self) -> tuple[LogicalRotation, ...]:
        return self.logical.rotations[: len(self.logical.rotations) // 2]


def _mirror_rng(seed: int, instance: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=[seed, _MIRROR_TAG], spawn_key=(instance,)))


def _random_layer(rng: np.random.Generator, layout: CodeLayout, include_globals: bool):
    n, k, t, b = layout.n, layout.k, layout.t, layout.b
    while True:
        perm = rng.permutation(n)
        pairs = [tuple(sorted((int(perm[2 * m]), int(perm[2 * m + 1])))) for m in range(n // 2)]
        if include_globals or (t, b) not in pairs:
            break
    layer = []
    for i, j in pairs:
        if include_globals or j < k:
            basis = "XYZ"[rng.integers(3)]
        else:
            basis = "X" if j == t else "Z"
        theta = float(rng.uniform(0.0, 2 * math.pi))
        layer.append((basis, i, j, theta))
    return layer


def gen_mirror(spec: MirrorSpec, instance: int = 0) -> MirrorInstance:
    """Random layered physical rotations U followed by the exact inverse."""
    layout = CodeLayout(spec.k)
    rng = _mirror_rng(spec.seed, instance)
    half = spec.layers // 2
    physical = [_random_layer(rng, layout, spec.include_globals) for _ in range(half)]
    forward = [
        LogicalRotation(logical_from_physical_pair(layout, basis, i, j), theta)
        for layer in physical
        for basis, i, j, theta in layer
    ]
    backward = [r.inverse() for r in reversed(forward)]
    per_layer = layout.n // 2
    bounds = tuple(per_layer * m for m in range(1, spec.layers + 1))
    lc = LogicalCircuit(spec.k, tuple(forward + backward), bounds)
    encoded = encode_logical_circuit(lc, layout, spec.syndrome_policy())
    return MirrorInstance(spec, instance, physical, lc, encoded, compile_unencoded(lc))


def mirror_experiment(
    spec: MirrorSpec, noise: NoiseModel, trials: int, instance: int = 0
) -> tuple[ExperimentStats, ExperimentStats]:
    """(encoded, unencoded) statistics from matched trial seeds."""
    inst = gen_mirror(spec, instance)
    layout = CodeLayout(spec.k)
    enc = estimate(inst.encoded, noise, trials, spec.seed, layout, circuit_id=instance)
    unenc = estimate(inst.unencoded, noise, trials, spec.seed, None, circuit_id=instance)
    return enc, unenc


def _mirror_row(args):
    spec, noise, trials, instance = args
    enc, unenc = mirror_experiment(spec, noise, trials, instance)
    return {
        "layers": spec.layers,
        "instance": instance,
        "seed": spec.seed,
        "encoded_survival": enc.survival,
        "encoded_discard": enc.discard_rate,
        "unencoded_survival": unenc.survival,
    }


def mirror_sweep(
    k: int,
    layers: Iterable[int] = LAYER_GRID,
    instances: int = 32,
    trials: int = 32,
    noise: NoiseModel | None = None,
    seed: int = 0,
    policy: str = "none",
    include_globals: bool = True,
    jobs: int = 1,
) -> dict:
    """Per-instance rows and per-depth medians for encoded and unencoded mirrors."""
    noise = NoiseModel() if noise is None else noise
    layers = list(layers)
    work = [
        (MirrorSpec(k, l, include_globals, seed, policy), noise, trials, i)
        for l in layers
        for i in range(instances)
    ]
    rows = _pmap(_mirror_row, work, jobs)
    summary = []
    for l in layers:
        sel = [r for r in rows if r["layers"] == l]
        summary.append(
            {
                "layers": l,
                "encoded_median": float(np.nanmedian([r["encoded_survival"] for r in sel])),
                "unencoded_median": float(np.median([r["unencoded_survival"] for r in sel])),
                "discard_mean": float(np.mean([r["encoded_discard"] for r in sel])),
            }
        )
    return {"k": k, "trials": trials, "instances": instances, "policy": policy, "rows": rows, "summary": summary}


def crossing_layer(layers: Sequence[float], values: Sequence[float], level: float = 0.5) -> float:
    """Layer count where ``values`` first falls to ``level`` (log-linear interpolation).

    Returns ``inf`` when the curve stays above ``level`` over the grid.
    """
    xs, ys = list(layers), list(values)
    if ys and ys[0] <= level:
        return float(xs[0])
    for (x0, y0), (x1, y1) in zip(zip(xs, ys), zip(xs[1:], ys[1:])):
        if y1 <= level < y0:
            f = (y0 - level) / (y0 - y1)
            return float(math.exp(math.log(x0) + f * (math.log(x1) - math.log(x0))))
    return math.inf


def box_stats(values: Sequence[float]) -> dict:
    """Quartiles, whiskers and outliers with the 1.5 x IQR rule."""
    v = np.asarray(values, dtype=float)
    q1, med, q3 = (float(x) for x in np.percentile(v, [25, 50, 75]))
    iqr = q3 - q1
    lo, hi = q1 - 1.5 * iqr, q3 + 1.5 * iqr
    inside = v[(v >= lo) & (v <= hi)]
    return {
        "n": int(v.size),
        "q1": q1,
        "median": med,
        "q3": q3,
        "iqr": iqr,
        "whisker_low": float(inside.min()),
        "whisker_high": float(inside.max()),
        "outliers": sorted(float(x) for x in v[(v < lo) | (v > hi)]),
    }


def batch_typicality(
    spec: MirrorSpec, instances: int = 100, noise: NoiseModel | None = None, trials: int = 32, jobs: int = 1
) -> dict:
    """Box-plot summary of encoded and unencoded survival over independent instances."""
    noise = NoiseModel() if noise is None else noise
    rows = _pmap(_mirror_row, [(spec, noise, trials, i) for i in range(instances)], jobs)
    enc = [r["encoded_survival"] for r in rows]
    unenc = [r["unencoded_survival"] for r in rows]
    return {
        "layers": spec.layers,
        "k": spec.k,
        "encoded": box_stats(enc),
        "unencoded": box_stats(unenc),
        "rows": rows,
    }


# ---------------------------------------------------------------------------
# Quantum volume
# ---------------------------------------------------------------------------


def default_shots(rounds: int) -> int:
    return {0: 75, 1: 100}.get(rounds, 150)


@dataclass(frozen=True)
class QVSpec:
    k: int = 8
    n_circuits: int = 100
    shots: int | None = None
    seed: int = 0
    rounds: int = 0

    def __post_init__(self):
        if self.k < 2 or self.k % 2:
            raise ValueError("QV needs an even k >= 2")
        if self.n_circuits < 1 or self.rounds < 0:
            raise ValueError("n_circuits >= 1 and rounds >= 0 required")
        if self.shots is not None and self.shots < 1:
            raise ValueError("shots must be >= 1")

    @property
    def n_shots(self) -> int:
        return self.shots if self.shots is not None else default_shots(self.rounds)


def haar_unitary(rng: np.random.Generator, dim: int = 4) -> np.ndarray:
    """Haar-random U(dim) from QR of a complex Ginibre matrix (diag(R) phases removed)."""
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def _qv_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=[seed, _QV_TAG], spawn_key=(index,)))


def gen_qv_blocks(k: int, seed: int, index: int) -> list[list[SU4Block]]:
    """``k`` layers; each a uniform random pairing with one Haar SU(4) per pair."""
    if k % 2:
        raise ValueError("QV circuits need an even number of qubits")
    rng = _qv_rng(seed, index)
    layers = []
    for _ in range(k):
        perm = rng.permutation(k)
        layer = []
        for m in range(k // 2):
            u = haar_unitary(rng)
            u = u / np.linalg.det(u) ** 0.25
            layer.append(SU4Block((int(perm[2 * m]), int(perm[2 * m + 1])), u))
        layers.append(layer)
    return layers


@dataclass
class QVCircuit:
    index: int
    blocks: list[list[SU4Block]]
    merged: list[list[SU4Block]]
    logical: LogicalCircuit
    ideal: np.ndarray
    heavy: np.ndarray  # boolean mask over logical outcomes


def gen_qv_circuit(spec: QVSpec, index: int) -> QVCircuit:
    blocks = gen_qv_blocks(spec.k, spec.seed, index)
    merged = merge_su4(blocks)
    lc = su4_layers_to_logical(spec.k, merged)
    ideal = np.abs(logical_statevector(lc)) ** 2
    return QVCircuit(index, blocks, merged, lc, ideal, heavy_set(ideal))


def blocks_statevector(k: int, layers: Sequence[Sequence[SU4Block]]) -> np.ndarray:
    """Apply SU(4) blocks directly to ``|0...0>`` (qubit 0 most significant)."""
    from .simulator import apply_matrix

    psi = np.zeros((2,) * k, dtype=complex)
    psi[(0,) * k] = 1
    for layer in layers:
        for blk in layer:
            psi = apply_matrix(psi, blk.matrix, blk.qubits)
    return psi.reshape(-1)


def heavy_set(probs: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Boolean mask of outcomes with probability strictly above the median."""
    p = np.asarray(probs, dtype=float)
    if abs(p.sum() - 1.0) > tol:
        raise ValueError("distribution does not sum to 1")
    return p > np.median(p)


def hof(outcomes: Sequence[int], heavy: np.ndarray) -> float:
    """Fraction of ``outcomes`` (logical basis indices) inside the heavy set; nan if empty."""
    outcomes = np.asarray(outcomes, dtype=int)
    if outcomes.size == 0:
        return math.nan
    return float(np.mean(heavy[outcomes]))


def bootstrap_bounds(
    hofs: Sequence[float], counts: Sequence[int], resamples: int = 10_000, seed: int = 0
) -> tuple[float, float, float]:
    """Two-level bootstrap: ``(mean - 2 sigma, mean + 2 sigma, sigma)``.

    Circuits are resampled with replacement, then each chosen circuit's shots
    are resampled (binomial with its own HOF).  Circuits with no retained
    shots are ignored.  Fewer than two usable circuits gives nan bounds.
    """
    h = np.asarray(hofs, dtype=float)
    n = np.asarray(counts, dtype=int)
    ok = (n > 0) & np.isfinite(h)
    h, n = h[ok], n[ok]
    if h.size < 2:
        return math.nan, math.nan, math.nan
    rng = np.random.default_rng(np.random.SeedSequence(entropy=[seed, _BOOT_TAG]))
    idx = rng.integers(0, h.size, size=(resamples, h.size))
    heavy = rng.binomial(n[idx], h[idx])
    means = (heavy / n[idx]).mean(axis=1)
    sigma = float(means.std(ddof=1))
    mean = float(h.mean())
    return mean - 2 * sigma, mean + 2 * sigma, sigma


@dataclass
class HOFReport:
    k: int
    rounds: int
    shots: int
    seed: int
    per_circuit_hof: list[float]
    ideal_hof: list[float]
    retained: list[int]
    cumulative_mean: list[float]
    mean_hof: float
    lower: float
    upper: float
    discard_rate: float
    discard_by_stage: dict[str, int] = field(default_factory=dict)
    bounds_defined: bool = True

    @property
    def passed(self) -> bool:
        return bool(self.bounds_defined and self.lower > 2 / 3)

    @property
    def mean_ideal_hof(self) -> float:
        return float(np.mean(self.ideal_hof))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        d["mean_ideal_hof"] = self.mean_ideal_hof
        return d

    def to_json(self) -> str:
        return json.dumps(_clean(self.to_dict()), sort_keys=True, indent=2)

    def rows(self) -> list[dict]:
        return [
            {
                "circuit": i,
                "seed": self.seed,
                "hof": h,
                "ideal_hof": ih,
                "retained_shots": n,
                "discard_rate": 1 - n / self.shots,
                "cumulative_mean": cm,
            }
            for i, (h, ih, n, cm) in enumerate(
                zip(self.per_circuit_hof, self.ideal_hof, self.retained, self.cumulative_mean)
            )
        ]


def _clean(obj):
    """Replace non-finite floats with None for strict JSON."""
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def _stage_order(circuit: Circuit) -> list[str]:
    stages = []
    for bit_role in circuit.roles:
        stage = bit_role.split("/")[0]
        if bit_role != "data" and stage not in stages:
            stages.append(stage)
    return stages


def _qv_circuit_shots(args):
    spec, noise, index = args
    qc = gen_qv_circuit(spec, index)
    layout = CodeLayout(spec.k)
    circ = encode_logical_circuit(qc.logical, layout, SyndromePolicy.rounds(spec.rounds))
    prog = Program(circ, noise)
    det_by_stage = {
        s: np.array([b for r, bits in circ.roles.items() if r.split("/")[0] == s for b in bits], dtype=int)
        for s in _stage_order(circ)
    }
    data_bits = np.array(circ.data_bits, dtype=int)
    weights = 1 << np.arange(layout.n)
    outcomes = []
    stages: dict[str, int] = {}
    for shot in range(spec.n_shots):
        out = run_trajectory(prog, rng=trial_rng(spec.seed, index, shot), mode="shots")
        bits = out.bits
        flagged = next((s for s, b in det_by_stage.items() if bits[b].any()), None)
        if flagged is None:
            ok, logical = decode_bitmask(layout, int(bits[data_bits] @ weights))
            if ok:
                # decode_bitmask: bit i = logical qubit i; ideal index has qubit 0 most significant
                outcomes.append(int(format(logical, f"0{spec.k}b")[::-1], 2))
                continue
            flagged = "parity"
        stages[flagged] = stages.get(flagged, 0) + 1
    ideal_hof = float(qc.ideal[qc.heavy].sum())
    return hof(outcomes, qc.heavy), ideal_hof, len(outcomes), stages


def qv_test(spec: QVSpec, noise: NoiseModel | None = None, jobs: int = 1, resamples: int = 10_000) -> HOFReport:
    """Encode, simulate in shot mode, post-process discards and score heavy outputs."""
    noise = NoiseModel() if noise is None else noise
    results = _pmap(_qv_circuit_shots, [(spec, noise, i) for i in range(spec.n_circuits)], jobs)
    hofs = [r[0] for r in results]
    retained = [r[2] for r in results]
    stages: dict[str, int] = {}
    for r in results:
        for s, c in r[3].items():
            stages[s] = stages.get(s, 0) + c
    finite = np.array([h if math.isfinite(h) else np.nan for h in hofs])
    counts = np.cumsum(np.isfinite(finite))
    sums = np.cumsum(np.nan_to_num(finite))
    cumulative = [float(s / c) if c else math.nan for s, c in zip(sums, counts)]
    lo, hi, _ = bootstrap_bounds(hofs, retained, resamples, spec.seed)
    total = spec.n_shots * spec.n_circuits
    return HOFReport(
        k=spec.k,
        rounds=spec.rounds,
        shots=spec.n_shots,
        seed=spec.seed,
        per_circuit_hof=hofs,
        ideal_hof=[r[1] for r in results],
        retained=retained,
        cumulative_mean=cumulative,
        mean_hof=float(np.nanmean(finite)) if np.isfinite(finite).any() else math.nan,
        lower=lo,
        upper=hi,
        discard_rate=1 - sum(retained) / total,
        discard_by_stage=dict(sorted(stages.items())),
        bounds_defined=math.isfinite(lo),
    )


# ---------------------------------------------------------------------------
# Export
# ---------------------------------------------------------------------------


def to_csv(rows: Sequence[dict], header: Sequence[str] | None = None) -> str:
    header = list(header or (rows[0].keys() if rows else []))
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=header, extrasaction="ignore", lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: _fmt(r.get(k)) for k in header})
    return buf.getvalue()


def _fmt(v):
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else ""
    return v


def plot_data(series: dict[str, tuple[Sequence[float], Sequence[float]]], x_label: str, y_label: str) -> str:
    doc = {
        "x_label": x_label,
        "y_label": y_label,
        "series": [{"name": name, "x": list(x), "y": list(y)} for name, (x, y) in series.items()],
    }
    return json.dumps(_clean(doc), sort_keys=True, indent=2)
