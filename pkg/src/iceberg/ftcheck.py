"""Exhaustive single-fault verification of Clifford circuits.

Every local Pauli fault (15 after each two-qubit gate, 3 after each one-qubit
gate, X after each reset, X before each measurement) is injected alone,
propagated to the end of the circuit, and classified by whether it trips a
detection bit and by what it leaves behind on the data qubits.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from itertools import product
from typing import Iterable

from .circuits import (
    Circuit,
    FinalTemplate,
    InitTemplate,
    SyndromeTemplate,
    build_final,
    build_init,
    build_syndrome,
)
from .code import CodeLayout, stabilizers
from .pauli import PauliString, UnsupportedGateError, commutes, conjugate_through

__all__ = [
    "FaultSite",
    "FaultRecord",
    "FaultReport",
    "enumerate_fault_sites",
    "propagate",
    "classify",
    "verify",
    "search_templates",
    "build_circuit",
    "MUTATED_TEMPLATES",
    "NO_ERROR",
    "STABILIZER_FLIP",
    "LOGICAL",
]

NO_ERROR = "no-error"
STABILIZER_FLIP = "stabilizer-flip"
LOGICAL = "logical"
CLASSES = (NO_ERROR, STABILIZER_FLIP, LOGICAL)

_ONE_Q_CLIFFORD = {"H", "S", "Sdg", "X", "Y", "Z"}


@dataclass(frozen=True)
class FaultSite:
    """A Pauli injected after (or, for measurements, before) instruction ``location``."""

    location: int
    kind: str
    pauli: PauliString
    before: bool = False


@dataclass(frozen=True)
class FaultRecord:
    site: FaultSite
    flips: frozenset[int]
    residual: PauliString
    detected: bool
    residual_class: str


@dataclass
class FaultReport:
    records: list[FaultRecord] = field(default_factory=list)

    @property
    def counts(self) -> dict[tuple[bool, str], int]:
        c = Counter((r.detected, r.residual_class) for r in self.records)
        return {(d, cls): c.get((d, cls), 0) for d in (True, False) for cls in CLASSES}

    @property
    def n_undetected_logical(self) -> int:
        return self.counts[(False, LOGICAL)]

    @property
    def passed(self) -> bool:
        return self.n_undetected_logical == 0

    def failures(self) -> list[FaultRecord]:
        return [r for r in self.records if not r.detected and r.residual_class == LOGICAL]

    def to_dict(self) -> dict:
        counts = self.counts
        return {
            "total": len(self.records),
            "detected": {cls: counts[(True, cls)] for cls in CLASSES},
            "undetected": {cls: counts[(False, cls)] for cls in CLASSES},
            "passed": self.passed,
        }

    def table(self) -> str:
        counts = self.counts
        head = f"{'':>12}" + "".join(f"{cls:>17}" for cls in CLASSES)
        rows = [head]
        for det in (True, False):
            label = "detected" if det else "undetected"
            rows.append(f"{label:>12}" + "".join(f"{counts[(det, cls)]:>17d}" for cls in CLASSES))
        return "\n".join(rows)


def _two_qubit_paulis(n: int, a: int, b: int) -> list[PauliString]:
    out = []
    for pa, pb in product("IXYZ", repeat=2):
        if pa == pb == "I":
            continue
        ops = {q: c for q, c in ((a, pa), (b, pb)) if c != "I"}
        out.append(PauliString.from_ops(n, ops))
    return out


def enumerate_fault_sites(circuit: Circuit) -> list[FaultSite]:
    n = circuit.n_qubits
    sites = []
    for idx, g in enumerate(circuit.gates):
        if g.name == "CNOT" or (g.name == "MS" and _clifford_angle(g.theta)):
            for p in _two_qubit_paulis(n, *g.qubits):
                sites.append(FaultSite(idx, "after-2q", p))
        elif g.name in _ONE_Q_CLIFFORD or (g.name in ("Rz", "Rx") and _clifford_angle(g.theta)):
            for c in "XYZ":
                sites.append(FaultSite(idx, "after-1q", PauliString.from_ops(n, {g.qubits[0]: c})))
        elif g.name == "Reset":
            sites.append(FaultSite(idx, "after-init", PauliString.from_ops(n, {g.qubits[0]: "X"})))
        elif g.name == "MeasureZ":
            sites.append(
                FaultSite(idx, "before-measure", PauliString.from_ops(n, {g.qubits[0]: "X"}), before=True)
            )
        else:
            raise UnsupportedGateError(f"instruction {idx} ({g.name}) is not Clifford")
    return sites


def _clifford_angle(theta: float) -> bool:
    import math

    m = theta / (math.pi / 2)
    return abs(m - round(m)) < 1e-9


def propagate(circuit: Circuit, site: FaultSite, data_qubits: Iterable[int] | None = None):
    """Push ``site.pauli`` to the end of ``circuit``.

    Returns ``(flips, residual)``: the set of classical bits whose value the
    fault inverts, and the leftover Pauli restricted to ``data_qubits`` (all
    qubits if omitted).  A measurement flips its bit iff the Pauli has an X
    component on the measured qubit; the Z component there is then dropped.
    A reset drops both components.
    """
    p = site.pauli
    start = site.location if site.before else site.location + 1
    flips = set()
    for g in circuit.gates[start:]:
        if g.name == "MeasureZ":
            q = g.qubits[0]
            if (p.x >> q) & 1:
                flips.add(g.clbit)
            p = PauliString(p.n_qubits, p.x, p.z & ~(1 << q), p.phase)
        elif g.name == "Reset":
            bit = ~(1 << g.qubits[0])
            p = PauliString(p.n_qubits, p.x & bit, p.z & bit, p.phase)
        else:
            p = conjugate_through(g, p)
    qubits = range(circuit.n_qubits) if data_qubits is None else data_qubits
    return frozenset(flips), p.restrict(qubits)


def classify(
    flips: Iterable[int],
    residual: PauliString,
    layout: CodeLayout,
    detection_bits: Iterable[int] = (),
    prepared_zero: bool = False,
) -> tuple[bool, str]:
    """Return ``(detected, residual_class)``.

    With ``prepared_zero`` the data are known to hold ``|0...0>_L``, so Z-type
    logical operators act trivially and count as no error.
    """
    flips = set(flips)
    detected = bool(flips & set(detection_bits))
    sx, sz = stabilizers(layout)
    if not (commutes(residual, sx) and commutes(residual, sz)):
        return detected, STABILIZER_FLIP
    full = (1 << layout.n) - 1
    if residual.x in (0, full) and (prepared_zero or residual.z in (0, full)):
        return detected, NO_ERROR
    return detected, LOGICAL


def verify(circuit: Circuit, layout: CodeLayout, prepared_zero: bool | None = None) -> FaultReport:
    """Classify every single fault of ``circuit``; passes iff none is an undetected logical error.

    Circuits with a ``"data"`` role are destructive readouts: the residual is
    the X pattern of flipped data bits and an odd pattern counts as detected
    (reconstructed S_Z = -1).
    """
    if prepared_zero is None:
        prepared_zero = circuit.kind == "init"
    data = layout.data
    data_bits = circuit.data_bits
    detection = set(circuit.detection_bits)
    report = FaultReport()
    for site in enumerate_fault_sites(circuit):
        flips, residual = propagate(circuit, site, data)
        if data_bits:
            mask = sum(1 << q for q, bit in zip(data, data_bits) if bit in flips)
            residual = PauliString(layout.n, x=mask)
            odd = bin(mask).count("1") % 2 == 1
            detected, cls = classify(flips, residual, layout, detection, prepared_zero)
            detected = detected or odd
        else:
            detected, cls = classify(flips, residual, layout, detection, prepared_zero)
        report.records.append(FaultRecord(site, flips, residual, detected, cls))
    return report


def search_templates(ks: Iterable[int] = range(2, 17, 2)):
    """Return the first init / syndrome / final templates that pass for every ``k`` in ``ks``.

    The syndrome candidates are ordered with flag-free variants first.
    """
    ks = list(ks)
    layouts = [CodeLayout(k) for k in ks]

    def ok(builder, template):
        return all(verify(builder(lay, template), lay).passed for lay in layouts)

    init = next(
        (
            InitTemplate((i, j))
            for i in range(4)
            for j in (-1, -2, -3, 1, 2, 3)
            if ok(build_init, InitTemplate((i, j)))
        ),
        None,
    )
    syndrome = next(
        (
            SyndromeTemplate(order, flags)
            for flags in ("none", "both", "start", "end")
            for order in ("zx", "xz")
            if ok(build_syndrome, SyndromeTemplate(order, flags))
        ),
        None,
    )
    final = next(
        (
            FinalTemplate(a, b)
            for a in (1, 2, 0)
            for b in (1, 2, 0)
            if ok(build_final, FinalTemplate(a, b))
        ),
        None,
    )
    return init, syndrome, final


# Negative controls: each breaks one fault-tolerance mechanism of the defaults.
MUTATED_TEMPLATES = {
    "init": InitTemplate((0, 1)),
    "syndrome": SyndromeTemplate("zx", "none", order_b="zx"),
    "final": FinalTemplate(0, 0),
}


def build_circuit(kind: str, layout: CodeLayout, mutated: bool = False) -> Circuit:
    """Default (or deliberately broken) init / syndrome / final circuit."""
    builders = {"init": build_init, "syndrome": build_syndrome, "final": build_final}
    if kind not in builders:
        raise ValueError(f"unknown circuit kind {kind!r}")
    if mutated:
        return builders[kind](layout, MUTATED_TEMPLATES[kind])
    return builders[kind](layout)
