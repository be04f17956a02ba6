import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import pauli_matrix
from iceberg.circuits import Gate, embed, gate_matrix
from iceberg.pauli import PauliError, PauliString, UnsupportedGateError, commutes, conjugate_through, multiply

labels = st.integers(1, 5).flatmap(
    lambda n: st.tuples(st.sampled_from(["", "-", "i", "-i"]), st.text("IXYZ", min_size=n, max_size=n))
).map(lambda t: t[0] + t[1])
PREFIX = {"": 1, "-": -1, "i": 1j, "-i": -1j}


def dense(label: str) -> np.ndarray:
    for pre in ("-i", "i", "-", ""):
        if label.startswith(pre) and label[len(pre):].isalpha():
            return pauli_matrix(label[len(pre):], PREFIX[pre])
    raise AssertionError(label)


def test_matrix_matches_labels():
    assert np.allclose(PauliString.from_label("XY").to_matrix(), pauli_matrix("XY"))
    assert np.allclose(PauliString.from_label("-iZIY").to_matrix(), pauli_matrix("ZIY", -1j))


def test_label_roundtrip_and_support():
    p = PauliString.from_label("-IXIY")
    assert p.to_label() == "-IXIY"
    assert p.support == (1, 3)
    assert p.weight == 2
    assert p.hermitian_phase == 2


@pytest.mark.parametrize("bad", ["", "XQ", "++X", "2X"])
def test_bad_labels_rejected(bad):
    with pytest.raises(PauliError):
        PauliString.from_label(bad)


def test_size_mismatch_rejected():
    with pytest.raises(PauliError):
        multiply(PauliString.from_label("X"), PauliString.from_label("XX"))


@settings(max_examples=200, deadline=None)
@given(st.data())
def test_product_matches_matrices(data):
    a = data.draw(labels)
    n = len(a.lstrip("-i"))
    b = data.draw(st.sampled_from(["", "-", "i"])) + data.draw(st.text("IXYZ", min_size=n, max_size=n))
    pa, pb = PauliString.from_label(a), PauliString.from_label(b)
    assert np.allclose(multiply(pa, pb).to_matrix(), dense(a) @ dense(b))
    ma, mb = dense(a), dense(b)
    assert commutes(pa, pb) == np.allclose(ma @ mb, mb @ ma)


CLIFFORDS = [
    Gate("H", (0,)),
    Gate("S", (1,)),
    Gate("Sdg", (2,)),
    Gate("X", (0,)),
    Gate("Y", (1,)),
    Gate("Z", (2,)),
    Gate("CNOT", (0, 2)),
    Gate("CNOT", (2, 1)),
    Gate("MS", (0, 1), math.pi / 2),
    Gate("MS", (1, 2), -math.pi / 2),
    Gate("MS", (2, 0), math.pi),
    Gate("Rz", (1,), math.pi / 2),
    Gate("Rx", (0,), 3 * math.pi / 2),
]


@pytest.mark.parametrize("gate", CLIFFORDS, ids=lambda g: f"{g.name}{g.qubits}")
@settings(max_examples=30, deadline=None)
@given(letters=st.text("IXYZ", min_size=3, max_size=3), sign=st.sampled_from(["", "-"]))
def test_conjugation_matches_matrices(gate, letters, sign):
    p = PauliString.from_label(sign + letters)
    u = embed(gate_matrix(gate), gate.qubits, 3)
    expected = u @ p.to_matrix() @ u.conj().T
    assert np.allclose(conjugate_through(gate, p).to_matrix(), expected, atol=1e-12)


def test_non_clifford_rotation_rejected():
    with pytest.raises(UnsupportedGateError):
        conjugate_through(Gate("MS", (0, 1), 0.3), PauliString.from_label("XI"))
