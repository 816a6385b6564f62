"""Brute-force oracles shared by the test modules.

These deliberately avoid the package's tensor-contraction helpers: Paulis act
by bit flips on flat index arrays, and full unitaries are built by kron.
"""

from __future__ import annotations

from math import comb

import numpy as np
import pytest

from onecopy.circuit import LayeredCircuit
from onecopy.markov import LinearFunctional, MarkovProcess
from onecopy.observable import Observable, Term


def pauli_apply(psi: np.ndarray, n: int, qubit: int, axis: str) -> np.ndarray:
    idx = np.arange(2**n)
    shift = n - 1 - qubit
    bit = (idx >> shift) & 1
    flipped = psi[idx ^ (1 << shift)]
    if axis == "Z":
        return np.where(bit, -psi, psi)
    if axis == "X":
        return flipped
    if axis == "Y":
        return np.where(bit, 1j * flipped, -1j * flipped)
    raise ValueError(axis)


def dense_pauli_expectation(psi: np.ndarray, n: int, support, basis: str) -> float:
    phi = psi
    for q in support:
        phi = pauli_apply(phi, n, q, basis[q])
    return float(np.vdot(psi, phi).real)


def dense_observable(psi: np.ndarray, o: Observable) -> float:
    return sum(t.coeff * dense_pauli_expectation(psi, o.n, t.support, o.basis) for t in o.terms)


def full_unitary(c: LayeredCircuit) -> np.ndarray:
    """Whole-register unitary by kron + permutation (small n only)."""
    n = c.n
    u = np.eye(2**n, dtype=complex)
    for _, g in c.gates():
        m = len(g.qubits)
        rest = [q for q in range(n) if q not in g.qubits]
        order = list(g.qubits) + rest
        big = np.kron(g.matrix, np.eye(2 ** (n - m)))
        # big acts on qubits in ``order``; permute to natural order
        t = big.reshape((2,) * (2 * n))
        inv = np.argsort(order)
        t = t.transpose(list(inv) + [n + i for i in inv])
        u = t.reshape(2**n, 2**n) @ u
    return u


def zero_probability_dense(psi: np.ndarray, n: int, q: int) -> float:
    idx = np.arange(2**n)
    mask = ((idx >> (n - 1 - q)) & 1) == 0
    return float(np.sum(np.abs(psi[mask]) ** 2))


def random_observable(n: int, rng: np.random.Generator, max_terms: int = 6, max_len: int = 3) -> Observable:
    basis = "".join(rng.choice(list("XYZ"), n))
    supports: set[tuple[int, ...]] = set()
    available = sum(comb(n, k) for k in range(1, min(max_len, n) + 1))
    want = min(int(rng.integers(1, max_terms + 1)), available)
    while len(supports) < want:
        k = int(rng.integers(1, min(max_len, n) + 1))
        supports.add(tuple(sorted(rng.choice(n, k, replace=False).tolist())))
    s = sorted(supports)
    c = rng.uniform(0.05, 1, len(s)) * rng.choice([-1, 1], len(s))
    c /= np.abs(c).sum()
    return Observable(basis, tuple(Term(si, ci) for si, ci in zip(s, c)))


def random_density(d: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    rho = g @ g.conj().T
    return rho / np.trace(rho)


def random_channel_kraus(r: int, rng: np.random.Generator) -> list[np.ndarray]:
    """``r`` Kraus operators from a random isometry 4 -> 4r."""
    g = rng.standard_normal((4 * r, 4)) + 1j * rng.standard_normal((4 * r, 4))
    q, _ = np.linalg.qr(g)
    return [q[4 * m : 4 * m + 4] for m in range(r)]


def trace_distance(a: np.ndarray, b: np.ndarray) -> float:
    return float(0.5 * np.sum(np.abs(np.linalg.eigvalsh(a - b))))


def brute_force_distribution(m: MarkovProcess) -> dict[tuple[int, ...], float]:
    """Full joint law by pushing every configuration through every gate."""
    dist = {(0,) * m.n: 1.0}
    for layer in m.layers:
        for g in layer:
            i, j = g.coords
            aj = m.alphabets[j]
            new: dict[tuple[int, ...], float] = {}
            for x, p in dist.items():
                row = g.matrix[x[i] * aj + x[j]]
                for tgt, w in enumerate(row):
                    if w == 0:
                        continue
                    y = list(x)
                    y[i], y[j] = divmod(tgt, aj)
                    new[tuple(y)] = new.get(tuple(y), 0.0) + p * w
            dist = new
    return dist


def brute_force_functional(m: MarkovProcess, f: LinearFunctional) -> float:
    total = 0.0
    for x, p in brute_force_distribution(m).items():
        for t in f.terms:
            idx = 0
            for q in t.support:
                idx = idx * m.alphabets[q] + x[q]
            total += p * t.coeff * t.table[idx]
    return total


@pytest.fixture
def rng():
    return np.random.default_rng(20240101)


# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def record_criterion(number: int, ok: bool, detail: str) -> str:
    ACCEPTANCE[number] = (ok, detail)
    line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    print(line)
    return line


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
