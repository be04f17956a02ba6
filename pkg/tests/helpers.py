"""Reference implementations used as test oracles.

Everything here is built from dense matrices and explicit loops so that it
shares no code path with the package under test.
"""

import math
from functools import reduce

import numpy as np

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
S = np.diag([1, 1j]).astype(complex)
MATS = {"I": I2, "X": X, "Y": Y, "Z": Z}


def kron_all(mats):
    return reduce(np.kron, mats, np.eye(1, dtype=complex))


def pauli_matrix(letters: str, coeff: complex = 1) -> np.ndarray:
    """Dense matrix of a Pauli string, first letter = most significant qubit."""
    return coeff * kron_all([MATS[c] for c in letters])


def op_on(n: int, ops: dict) -> np.ndarray:
    """Tensor product with ``ops[q]`` on qubit q and identity elsewhere."""
    return kron_all([ops.get(q, I2) for q in range(n)])


def ghz(n: int) -> np.ndarray:
    v = np.zeros(2**n, dtype=complex)
    v[0] = v[-1] = 1 / math.sqrt(2)
    return v


def encoding_isometry(k: int) -> np.ndarray:
    """Columns ``prod_i (X_t X_i)^{x_i} |GHZ>``; logical qubit 0 is the most significant bit.

    Data qubit order: 1..k, t, b (indices 0..k+1).
    """
    n = k + 2
    base = ghz(n)
    cols = []
    for idx in range(2**k):
        bits = [(idx >> (k - 1 - i)) & 1 for i in range(k)]
        v = base
        for i, bit in enumerate(bits):
            if bit:
                v = op_on(n, {i: X, k: X}) @ v
        cols.append(v)
    return np.column_stack(cols)


def rotation(pmat: np.ndarray, theta: float) -> np.ndarray:
    return math.cos(theta / 2) * np.eye(pmat.shape[0]) - 1j * math.sin(theta / 2) * pmat


def equal_up_to_phase(a: np.ndarray, b: np.ndarray, tol: float) -> bool:
    i = np.unravel_index(np.argmax(np.abs(b)), b.shape)
    if abs(b[i]) < 1e-12:
        return np.max(np.abs(a)) < tol
    ph = a[i] / b[i]
    return abs(abs(ph) - 1) < tol and np.max(np.abs(a - ph * b)) < tol


def haar(rng: np.random.Generator, dim: int) -> np.ndarray:
    z = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(z)
    return q @ np.diag(np.diag(r) / np.abs(np.diag(r)))


# ---------------------------------------------------------------------------
# density-matrix reference for small noisy circuits
# ---------------------------------------------------------------------------


def _kraus_1q(p):
    return [(1 - p, I2), (p / 3, X), (p / 3, Y), (p / 3, Z)]


def _kraus_2q(p):
    out = [(1 - p, np.eye(4, dtype=complex))]
    for a in "IXYZ":
        for b in "IXYZ":
            if a + b != "II":
                out.append((p / 15, np.kron(MATS[a], MATS[b])))
    return out


def _lift(u: np.ndarray, qubits, n: int) -> np.ndarray:
    """Embed ``u`` (on ``qubits``, first = most significant) into n qubits by index permutation."""
    dim = 2**n
    full = np.zeros((dim, dim), dtype=complex)
    m = len(qubits)
    for col in range(dim):
        cbits = [(col >> (n - 1 - q)) & 1 for q in range(n)]
        sub = sum(cbits[q] << (m - 1 - j) for j, q in enumerate(qubits))
        for out_sub in range(2**m):
            amp = u[out_sub, sub]
            if amp == 0:
                continue
            rbits = list(cbits)
            for j, q in enumerate(qubits):
                rbits[q] = (out_sub >> (m - 1 - j)) & 1
            row = sum(b << (n - 1 - q) for q, b in enumerate(rbits))
            full[row, col] += amp
    return full


def density_reference(circuit, noise, gate_matrix) -> np.ndarray:
    """Exact final density matrix of a reset-at-start, measurement-free circuit."""
    n = circuit.n_qubits
    rho = np.zeros((2**n, 2**n), dtype=complex)
    rho[0, 0] = 1
    flip = lambda r, q, p: (1 - p) * r + p * _lift(X, [q], n) @ r @ _lift(X, [q], n)  # noqa: E731
    for g in circuit.gates:
        if g.name == "Reset":
            # starting state is |0>; a reset on a fresh qubit only adds the flip channel
            rho = flip(rho, g.qubits[0], noise.p_init_flip)
            continue
        u = _lift(gate_matrix(g), list(g.qubits), n)
        rho = u @ rho @ u.conj().T
        kraus = _kraus_2q(noise.p_2q) if len(g.qubits) == 2 else _kraus_1q(noise.p_1q)
        new = np.zeros_like(rho)
        for w, k in kraus:
            kk = _lift(k, list(g.qubits), n)
            new += w * kk @ rho @ kk.conj().T
        rho = new
    return rho
