from collections import Counter
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import encoding_isometry, pauli_matrix
from iceberg.code import (
    CodeLayout,
    LogicalPauli,
    NotCompilableError,
    decode_bitmask,
    decode_readout,
    lift_logical,
    logical_from_physical_pair,
    physical_from_logical,
    same_on_code_space,
    stabilizers,
)
from iceberg.pauli import PauliString, commutes

EVEN_K = [2, 4, 6, 8]


def all_pairs(layout):
    return [(b, i, j) for b in "XYZ" for i, j in combinations(range(layout.n), 2)]


def physical_pair(layout, basis, i, j):
    return PauliString.from_ops(layout.n, {i: basis, j: basis})


@pytest.mark.parametrize("k", [1, 3, 0, -2])
def test_odd_or_small_k_rejected(k):
    with pytest.raises(ValueError):
        CodeLayout(k)


def test_label_mapping():
    lay = CodeLayout(4)
    assert [lay.qubit(x) for x in (1, 4, "t", "b", "a1", "a2")] == [0, 3, 4, 5, 6, 7]
    assert [lay.label(q) for q in range(8)] == ["1", "2", "3", "4", "t", "b", "a1", "a2"]


@pytest.mark.parametrize("k", EVEN_K)
def test_pair_map_agrees_with_lifted_logicals(k):
    """sigma_i sigma_j equals sign * lifted(L) on the code space, phases included."""
    lay = CodeLayout(k)
    for basis, i, j in all_pairs(lay):
        lp = logical_from_physical_pair(lay, basis, i, j)
        assert same_on_code_space(lay, physical_pair(lay, basis, i, j), lift_logical(lay, lp)), (basis, i, j)


def test_pair_map_by_isometry_k2():
    lay = CodeLayout(2)
    v = encoding_isometry(2)
    for basis, i, j in all_pairs(lay):
        lp = logical_from_physical_pair(lay, basis, i, j)
        phys = physical_pair(lay, basis, i, j).to_matrix()
        logical = lp.as_pauli().to_matrix()
        assert np.max(np.abs(phys @ v - v @ logical)) < 1e-10, (basis, i, j)


@pytest.mark.parametrize("k", EVEN_K)
def test_logicals_commute_with_stabilizers(k):
    lay = CodeLayout(k)
    sx, sz = stabilizers(lay)
    for basis, i, j in all_pairs(lay):
        p = physical_pair(lay, basis, i, j)
        assert commutes(p, sx) and commutes(p, sz)


@pytest.mark.parametrize("k", [4, 6, 8])
def test_pair_map_injective_for_k_at_least_4(k):
    lay = CodeLayout(k)
    images = Counter(logical_from_physical_pair(lay, *pr).to_label() for pr in all_pairs(lay))
    assert max(images.values()) == 1


def test_k2_collisions_are_complementary_pairs():
    # at k=2 the pair (i, j) and its complement differ by a stabilizer
    lay = CodeLayout(2)
    groups = {}
    for pr in all_pairs(lay):
        groups.setdefault(logical_from_physical_pair(lay, *pr).to_label(), []).append(pr)
    # 18 pairs fall into 9 complementary couples
    assert len(groups) == 9
    for prs in groups.values():
        (b1, i1, j1), (b2, i2, j2) = prs
        assert b1 == b2 and {i1, j1, i2, j2} == set(range(4))


def test_weights_of_global_families():
    k = 8
    lay = CodeLayout(k)
    t, b = lay.t, lay.b
    assert logical_from_physical_pair(lay, "X", t, b).weight == k
    assert logical_from_physical_pair(lay, "X", 0, b).weight == k - 1
    assert logical_from_physical_pair(lay, "Z", 0, t).weight == k - 1
    assert logical_from_physical_pair(lay, "Y", 0, t).weight == k
    assert logical_from_physical_pair(lay, "Y", 2, b).weight == k
    assert logical_from_physical_pair(lay, "X", 0, t).to_label() == "+XIIIIIII"
    assert logical_from_physical_pair(lay, "Y", 0, t).to_label() == "-XZZZZZZZ"


@pytest.mark.parametrize("k,sign", [(2, 1), (4, -1), (6, 1), (8, -1)])
def test_global_y_sign(k, sign):
    lay = CodeLayout(k)
    assert logical_from_physical_pair(lay, "Y", lay.t, lay.b).sign == sign


@pytest.mark.parametrize("k", [4, 6])
def test_inverse_map_roundtrip(k):
    lay = CodeLayout(k)
    for basis, i, j in all_pairs(lay):
        lp = logical_from_physical_pair(lay, basis, i, j)
        assert physical_from_logical(lay, lp) == (basis, i, j, 1)
        assert physical_from_logical(lay, LogicalPauli(lp.pauli, -lp.sign)) == (basis, i, j, -1)


def test_weight_three_not_compilable():
    lay = CodeLayout(6)
    with pytest.raises(NotCompilableError):
        physical_from_logical(lay, LogicalPauli.from_label("XXXIII"))


@settings(max_examples=100, deadline=None)
@given(k=st.sampled_from([2, 4, 6]), data=st.data())
def test_decode_readout_matches_bitmask(k, data):
    lay = CodeLayout(k)
    bits = data.draw(st.lists(st.integers(0, 1), min_size=lay.n, max_size=lay.n))
    s_z, logical = decode_readout(lay, bits)
    ok, mask = decode_bitmask(lay, sum(b << q for q, b in enumerate(bits)))
    assert ok == (s_z == 1)
    assert [(mask >> i) & 1 for i in range(k)] == [0 if z == 1 else 1 for z in logical]


def test_decode_of_encoded_basis_states():
    # logical |x> in the isometry is a superposition of a bitstring and its complement
    k = 4
    lay = CodeLayout(k)
    v = encoding_isometry(k)
    for idx in range(2**k):
        support = np.nonzero(np.abs(v[:, idx]) > 1e-12)[0]
        for s in support:
            bits = [(s >> (lay.n - 1 - q)) & 1 for q in range(lay.n)]
            s_z, logical = decode_readout(lay, bits)
            assert s_z == 1
            expect = [(idx >> (k - 1 - i)) & 1 for i in range(k)]
            assert [0 if z == 1 else 1 for z in logical] == expect
