"""Acceptance gate: one test per criterion, tolerances pinned below.

Each test records a one-line verdict (printed in the terminal summary) before
asserting, so failures still report what was measured.
"""

import json
import math
import time
from collections import Counter
from itertools import combinations

import numpy as np
import pytest

from conftest import ACCEPTANCE
from helpers import density_reference, encoding_isometry, equal_up_to_phase, haar, rotation
from iceberg.benchmarks import (
    MirrorSpec,
    QVSpec,
    crossing_layer,
    gen_mirror,
    gen_qv_blocks,
    gen_qv_circuit,
    mirror_sweep,
    qv_test,
)
from iceberg.circuits import Circuit, CircuitBuilder, gate_matrix, unitary_of
from iceberg.cli import main
from iceberg.code import CodeLayout, LogicalPauli, lift_logical, logical_from_physical_pair, physical_from_logical, same_on_code_space
from iceberg.compiler import (
    LogicalCircuit,
    LogicalRotation,
    compile_pair_rotation,
    kak_decompose,
    logical_unitary,
    merge_su4,
    sequence_matrix,
    squash_1q,
    su4_layers_to_logical,
)
from iceberg.ftcheck import build_circuit, verify
from iceberg.pauli import PauliString
from iceberg.simulator import (
    TWO_QUBIT_PAULIS,
    NoiseModel,
    Program,
    estimate,
    run_trajectory,
    sample_kraus,
    trial_rng,
)

# pinned tolerances and budgets
FT_RUNTIME_S = 60.0
ISOMETRY_TOL = 1e-10
NOISELESS_TOL = 1e-9
COMPILE_TOL = 1e-9
KAK_TOL = 1e-9
MERGE_SQUASH_TOL = 1e-10
SIGMAS = 3.0
KRAUS_SAMPLES = 100_000
DENSITY_TRIALS = 10_000
SCALING_RATIO = (2.0, 6.0)
SCALING_RUNTIME_S = 2 * 3600
IDEAL_HOF_RANGE = (0.82, 0.88)
QV_MIN_CIRCUITS = 45
QV_SHOTS = 150

pytestmark = pytest.mark.slow


def record(cid: str, ok: bool, detail: str) -> None:
    ACCEPTANCE[cid] = (bool(ok), detail)
    print(f"[{'PASS' if ok else 'FAIL'}] criterion {cid}: {detail}")
    assert ok, detail


# ---------------------------------------------------------------------------


def test_1_fault_tolerance():
    t0 = time.perf_counter()
    bad = []
    for k in range(2, 17, 2):
        lay = CodeLayout(k)
        for kind in ("init", "syndrome", "final"):
            rep = verify(build_circuit(kind, lay), lay)
            if rep.n_undetected_logical:
                bad.append((k, kind, rep.n_undetected_logical))
    dt = time.perf_counter() - t0
    record("1 fault tolerance", not bad and dt < FT_RUNTIME_S, f"undetected logical faults {bad or 0}, {dt:.1f}s")


def test_2_code_algebra():
    problems = []
    for k in (2, 4, 6, 8):
        lay = CodeLayout(k)
        images = Counter()
        for basis in "XYZ":
            for i, j in combinations(range(lay.n), 2):
                lp = logical_from_physical_pair(lay, basis, i, j)
                images[lp.to_label()] += 1
                phys = PauliString.from_ops(lay.n, {i: basis, j: basis})
                if not same_on_code_space(lay, phys, lift_logical(lay, lp)):
                    problems.append(f"k={k} {basis}{i}{j} sign")
        total = 3 * math.comb(lay.n, 2)
        if len(images) != total:
            problems.append(f"k={k}: {len(images)} distinct of {total}")
    v = encoding_isometry(2)
    lay = CodeLayout(2)
    worst = 0.0
    for basis in "XYZ":
        for i, j in combinations(range(lay.n), 2):
            lp = logical_from_physical_pair(lay, basis, i, j)
            phys = PauliString.from_ops(lay.n, {i: basis, j: basis}).to_matrix()
            worst = max(worst, float(np.max(np.abs(phys @ v - v @ lp.as_pauli().to_matrix()))))
    if worst >= ISOMETRY_TOL:
        problems.append(f"isometry error {worst:.1e}")
    record("2 code algebra", not problems, "; ".join(problems) or f"all pairs distinct, isometry error {worst:.1e}")


def test_3_noiseless_mirror():
    worst, disc = 0.0, 0.0
    for layers in (4, 32):
        for policy in ("none", "every:16"):
            inst = gen_mirror(MirrorSpec(8, layers, seed=0, policy=policy), 0)
            enc = estimate(inst.encoded, NoiseModel.zero(), 1, 0, CodeLayout(8))
            unenc = estimate(inst.unencoded, NoiseModel.zero(), 1, 0, None)
            worst = max(worst, abs(enc.survival - 1), abs(unenc.survival - 1))
            disc = max(disc, enc.discard_rate)
    record("3 noiseless mirror", worst < NOISELESS_TOL and disc == 0.0, f"max |1-survival| {worst:.1e}, discard {disc}")


def test_4_compiler_equivalence():
    rng = np.random.default_rng(4)
    lay = CodeLayout(2)
    v = encoding_isometry(2)
    pairs = [(b, i, j) for b in "XYZ" for i, j in combinations(range(lay.n), 2)]
    rot_err = 0.0
    for _ in range(200):
        basis, i, j = pairs[rng.integers(len(pairs))]
        lp = logical_from_physical_pair(lay, basis, i, j)
        lp = LogicalPauli(lp.pauli, lp.sign * int(rng.choice([1, -1])))
        rot = LogicalRotation(lp, float(rng.uniform(-2 * math.pi, 2 * math.pi)))
        b, p, q, s = physical_from_logical(lay, rot.generator)
        u = unitary_of(Circuit(lay.n, tuple(compile_pair_rotation(b, p, q, rot.theta, s))))
        target = rotation(lp.as_pauli().to_matrix(), rot.theta)
        rot_err = max(rot_err, float(np.max(np.abs(u @ v - v @ target))))
    kak_err = 0.0
    for _ in range(100):
        m = haar(rng, 4)
        kak_err = max(kak_err, float(np.max(np.abs(kak_decompose(m).unitary() - m))))
    # merge + squash on k=4 instances, compared with the raw block product
    ms_ok = True
    for idx in range(10):
        layers = gen_qv_blocks(4, seed=21, index=idx)
        raw = _block_unitary(4, layers)
        merged = merge_su4(layers)
        ms_ok &= equal_up_to_phase(_block_unitary(4, merged), raw, MERGE_SQUASH_TOL)
        lc = su4_layers_to_logical(4, merged, squash=True, strip=False)
        ms_ok &= equal_up_to_phase(logical_unitary(lc), raw, MERGE_SQUASH_TOL)
    for _ in range(200):
        seq = [("XZ"[rng.integers(2)], float(rng.uniform(-7, 7))) for _ in range(rng.integers(1, 9))]
        ms_ok &= equal_up_to_phase(sequence_matrix(squash_1q(seq)), sequence_matrix(seq), MERGE_SQUASH_TOL)
    ok = rot_err < COMPILE_TOL and kak_err < KAK_TOL and ms_ok
    record("4 compiler equivalence", ok, f"rotation {rot_err:.1e}, KAK {kak_err:.1e}, merge/squash ok={ms_ok}")


def _block_unitary(k, layers):
    from iceberg.simulator import apply_matrix

    cols = []
    for j in range(2**k):
        psi = np.zeros(2**k, dtype=complex)
        psi[j] = 1
        psi = psi.reshape((2,) * k)
        for layer in layers:
            for blk in layer:
                psi = apply_matrix(psi, blk.matrix, blk.qubits)
        cols.append(psi.reshape(-1))
    return np.column_stack(cols)


def test_5_noise_statistics():
    rng = np.random.default_rng(55)
    p = 0.25
    worst = 0.0
    for kind, branches in (("1q", "XYZ"), ("2q", TWO_QUBIT_PAULIS)):
        counts = Counter(sample_kraus(rng, kind, p) for _ in range(KRAUS_SAMPLES))
        for b in branches:
            q = p / len(branches)
            z = abs(counts[b] - KRAUS_SAMPLES * q) / math.sqrt(KRAUS_SAMPLES * q * (1 - q))
            worst = max(worst, z)
    cb = CircuitBuilder(3)
    cb.reset(0, 1, 2)
    cb.add("H", 0).add("CNOT", 0, 1).add("MS", 1, 2, theta=0.9).add("Rx", 2, theta=1.3)
    cb.add("CNOT", 2, 0).add("H", 1).add("MS", 0, 1, theta=2.0)
    circ = cb.build()
    noise = NoiseModel(0.02, 0.0, 0.03, 0.06)
    exact = np.real(np.diag(density_reference(circ, noise, gate_matrix)))
    prog = Program(circ, noise)
    samples = np.array(
        [np.abs(run_trajectory(prog, rng=trial_rng(5, 0, t)).state.reshape(-1)) ** 2 for t in range(DENSITY_TRIALS)]
    )
    sem = samples.std(axis=0, ddof=1) / math.sqrt(DENSITY_TRIALS)
    dz = float(np.max(np.abs(samples.mean(axis=0) - exact) / np.maximum(sem, 1e-15)))
    ok = worst <= SIGMAS and dz <= SIGMAS
    record("5 noise statistics", ok, f"worst Kraus branch {worst:.2f} sigma, density-matrix {dz:.2f} sigma")


def test_6_scaling():
    t0 = time.perf_counter()
    layers = [4, 8, 16, 32, 64, 128]
    res = mirror_sweep(10, layers, instances=32, trials=32, noise=NoiseModel(), seed=0, policy="every:16")
    dt = time.perf_counter() - t0
    summ = res["summary"]
    enc = [s["encoded_median"] for s in summ]
    unenc = [s["unencoded_median"] for s in summ]
    beats = all(e > u for l, e, u in zip(layers, enc, unenc) if l >= 16)
    xe, xu = crossing_layer(layers, enc), crossing_layer(layers, unenc)
    ratio = xe / xu
    ok = beats and SCALING_RATIO[0] <= ratio <= SCALING_RATIO[1] and dt < SCALING_RUNTIME_S
    table = ", ".join(f"l={l}: {e:.3f}/{u:.3f}" for l, e, u in zip(layers, enc, unenc))
    record(
        "6 scaling",
        ok,
        f"encoded>unencoded for l>=16: {beats}; crossings {xe:.1f}/{xu:.1f} ratio {ratio:.2f} "
        f"(need {SCALING_RATIO}); {dt:.0f}s; medians enc/unenc {table}",
    )


def test_7_quantum_volume():
    ideal, sizes_ok = [], True
    for idx in range(100):
        qc = gen_qv_circuit(QVSpec(k=8, seed=0), idx)
        ideal.append(float(qc.ideal[qc.heavy].sum()))
        p = qc.ideal
        sizes_ok &= qc.heavy.sum() <= p.size // 2 and bool(np.all(p[qc.heavy] > np.median(p)))
    mean_ideal = float(np.mean(ideal))
    reports = [
        qv_test(QVSpec(k=8, n_circuits=QV_MIN_CIRCUITS, shots=QV_SHOTS, seed=0, rounds=r), NoiseModel())
        for r in (0, 1, 2)
    ]
    hofs = [r.mean_hof for r in reports]
    discards = [r.discard_rate for r in reports]
    trend = all(a <= b for a, b in zip(hofs, hofs[1:])) and all(a < b for a, b in zip(discards, discards[1:]))
    ok = IDEAL_HOF_RANGE[0] <= mean_ideal <= IDEAL_HOF_RANGE[1] and sizes_ok and trend
    record(
        "7 quantum volume",
        ok,
        f"ideal HOF {mean_ideal:.3f}; heavy sets ok={sizes_ok}; HOF r=0,1,2 "
        f"{[round(h, 3) for h in hofs]}; discard {[round(d, 3) for d in discards]}",
    )


def test_8_determinism(tmp_path):
    lc = LogicalCircuit(4, (LogicalRotation.from_label("XXII", 0.4), LogicalRotation.from_label("ZZZZ", 1.1)))
    src = tmp_path / "lc.json"
    src.write_text(json.dumps(lc.to_dict()))
    experiments = {
        "verify-ft": ["verify-ft", "--k", "2", "4", "--format", "json"],
        "mirror": ["mirror", "--k", "4", "--layers", "4,8", "--instances", "3", "--trials", "4", "--seed", "3"],
        "mirror-batch": ["mirror", "--k", "2", "--layers", "4", "--batch", "3", "--trials", "3"],
        "qv": ["qv", "--k", "4", "--circuits", "3", "--shots", "20", "--rounds", "1", "--resamples", "500"],
        "compile": ["compile", str(src), "--policy", "rounds:1"],
    }
    differing = []
    for name, argv in experiments.items():
        blobs = []
        for run, jobs in enumerate(("1", "1", "2")):
            out = tmp_path / f"{name}-{run}.out"
            extra = ["--jobs", jobs] if name in ("mirror", "mirror-batch", "qv") else []
            main(argv + extra + ["--out", str(out)])
            blobs.append(out.read_bytes())
        if len(set(blobs)) != 1:
            differing.append(name)
    record("8 determinism", not differing, f"non-identical outputs: {differing or 'none'}")
