"""Single-copy measurement outcomes from a dense or an exact MPS backend.

Outcome bit 0 maps to eigenvalue +1 and bit 1 to -1. Before the computational
basis measurement, each qubit is rotated so that the eigenstates of its
Pauli axis land on ``|0>`` (+1) and ``|1>`` (-1).
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .circuit import (
    DENSE_CAP,
    SWAP,
    CircuitError,
    H,
    I2,
    LayeredCircuit,
    apply_dense,
    apply_gate,
    parse_bits,
)
from .rng import substream

SVD_CUTOFF = 1e-12

ROTATIONS = {
    "X": H,
    "Y": np.array([[1, -1j], [1, 1j]], dtype=complex) / math.sqrt(2),
    "Z": I2,
}


class GeometryError(CircuitError):
    """Circuit is not nearest-neighbour on a line."""


@dataclass(frozen=True)
class Shot:
    values: np.ndarray  # int8 entries in {-1, +1}
    basis: str
    seed: int | None = None
    index: int = 0


@dataclass(frozen=True, eq=False)
class ShotBatch:
    """``shots x n`` matrix of +-1 outcomes with provenance."""

    values: np.ndarray
    basis: str
    seed: int | None
    backend: str

    def __len__(self):
        return self.values.shape[0]

    def __getitem__(self, i: int) -> Shot:
        return Shot(self.values[i], self.basis, self.seed, i)

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([f"q{j}" for j in range(self.values.shape[1])])
        for row in self.values:
            w.writerow([f"{v:+d}" for v in row])
        return buf.getvalue()

    def sidecar(self) -> str:
        return json.dumps({"seed": self.seed, "backend": self.backend, "basis": self.basis})

    @classmethod
    def from_csv(cls, text: str, sidecar: str) -> "ShotBatch":
        meta = json.loads(sidecar)
        rows = list(csv.reader(io.StringIO(text)))
        values = np.array([[int(v) for v in r] for r in rows[1:]], dtype=np.int8)
        return cls(values, meta["basis"], meta["seed"], meta["backend"])


def _check_basis(basis: str, n: int) -> str:
    basis = basis.upper()
    if len(basis) != n or set(basis) - set(ROTATIONS):
        raise ValueError(f"basis {basis!r} must have length {n} over X, Y, Z")
    return basis


def bits_to_values(bits: np.ndarray) -> np.ndarray:
    return (1 - 2 * bits).astype(np.int8)


def measurement_probabilities(psi: np.ndarray, basis: str) -> np.ndarray:
    """Born distribution over bitstrings after rotating into ``basis``."""
    n = len(basis)
    t = psi.reshape((2,) * n)
    for j, p in enumerate(basis):
        if p != "Z":
            t = apply_gate(t, ROTATIONS[p], [j])
    probs = np.abs(t.reshape(-1)) ** 2
    return probs / probs.sum()


def sample_dense(
    c: LayeredCircuit,
    basis: str,
    bits: str | Sequence[int] | None = None,
    seed: int = 0,
    shots: int = 1,
    cap: int = DENSE_CAP,
) -> ShotBatch:
    basis = _check_basis(basis, c.n)
    probs = measurement_probabilities(apply_dense(c, bits, cap), basis)
    rng = substream(seed, "shots", "dense")
    cdf = np.cumsum(probs)
    idx = np.searchsorted(cdf, rng.random(shots) * cdf[-1], side="right")
    idx = np.minimum(idx, len(probs) - 1)
    shifts = np.arange(c.n - 1, -1, -1)
    outcome_bits = (idx[:, None] >> shifts) & 1
    return ShotBatch(bits_to_values(outcome_bits), basis, seed, "dense")


# --- matrix product states -----------------------------------------------


@dataclass(eq=False)
class MpsState:
    """Site tensors of shape ``(left, 2, right)`` and an orthogonality center."""

    tensors: list[np.ndarray]
    center: int = 0
    discarded: float = field(default=0.0)

    @property
    def n(self) -> int:
        return len(self.tensors)

    @property
    def bond_dims(self) -> list[int]:
        return [t.shape[2] for t in self.tensors[:-1]]

    @classmethod
    def product(cls, bits: Sequence[int]) -> "MpsState":
        ts = []
        for b in bits:
            t = np.zeros((1, 2, 1), dtype=complex)
            t[0, b, 0] = 1.0
            ts.append(t)
        return cls(ts, 0)

    def copy(self) -> "MpsState":
        return MpsState([t.copy() for t in self.tensors], self.center, self.discarded)

    def move_center(self, target: int) -> None:
        while self.center < target:
            i = self.center
            a = self.tensors[i]
            l, p, r = a.shape
            q, rr = np.linalg.qr(a.reshape(l * p, r))
            self.tensors[i] = q.reshape(l, p, q.shape[1])
            self.tensors[i + 1] = np.tensordot(rr, self.tensors[i + 1], axes=(1, 0))
            self.center += 1
        while self.center > target:
            i = self.center
            a = self.tensors[i]
            l, p, r = a.shape
            q, rr = np.linalg.qr(a.reshape(l, p * r).T)
            self.tensors[i] = q.T.reshape(q.shape[1], p, r)
            self.tensors[i - 1] = np.tensordot(self.tensors[i - 1], rr.T, axes=(2, 0))
            self.center -= 1

    def apply_one(self, u: np.ndarray, site: int) -> None:
        self.tensors[site] = np.einsum("pq,lqr->lpr", u, self.tensors[site])

    def apply_two(self, u: np.ndarray, site: int) -> None:
        """Apply a 4x4 gate to sites ``(site, site+1)`` with the first as high bit."""
        self.move_center(site)
        a, b = self.tensors[site], self.tensors[site + 1]
        theta = np.tensordot(a, b, axes=(2, 0))  # l, p, q, r
        theta = np.einsum("abpq,lpqr->labr", u.reshape(2, 2, 2, 2), theta)
        l, _, _, r = theta.shape
        uu, s, vh = np.linalg.svd(theta.reshape(l * 2, 2 * r), full_matrices=False)
        keep = max(1, int(np.sum(s >= SVD_CUTOFF)))
        self.discarded += float(np.sum(s[keep:] ** 2))
        self.tensors[site] = uu[:, :keep].reshape(l, 2, keep)
        self.tensors[site + 1] = (s[:keep, None] * vh[:keep]).reshape(keep, 2, r)
        self.center = site + 1

    def to_statevector(self) -> np.ndarray:
        psi = self.tensors[0]
        for t in self.tensors[1:]:
            psi = np.tensordot(psi, t, axes=(psi.ndim - 1, 0))
        return psi.reshape(-1)

    def norm(self) -> float:
        return float(np.linalg.norm(self.tensors[self.center]))


def build_mps(c: LayeredCircuit, bits: str | Sequence[int] | None = None) -> MpsState:
    """Exact MPS of ``U|bits>`` for a circuit of nearest-neighbour gates on a line."""
    for k, layer in enumerate(c.layers):
        for gi, g in enumerate(layer.gates):
            if g.arity > 2 or (g.arity == 2 and abs(g.qubits[0] - g.qubits[1]) != 1):
                raise GeometryError(
                    f"layer {k} gate {gi} on qubits {list(g.qubits)} is not nearest-neighbour on a line"
                )
    m = MpsState.product(parse_bits(bits if bits is not None else "0" * c.n, c.n))
    for _, g in c.gates():
        if g.arity == 1:
            m.apply_one(g.matrix, g.qubits[0])
            continue
        a, b = g.qubits
        u = g.matrix if a < b else SWAP @ g.matrix @ SWAP
        m.apply_two(u, min(a, b))
    m.move_center(0)
    return m


def sample_mps(m: MpsState, basis: str, seed: int = 0, shots: int = 1) -> ShotBatch:
    """Exact sequential sampling, all shots advanced together site by site.

    With the center at site 0 every tensor to the right is right-isometric,
    so the squared norm of the partially contracted left environment is the
    conditional marginal of the next outcome.
    """
    basis = _check_basis(basis, m.n)
    if m.center != 0:
        m = m.copy()
        m.move_center(0)
    rng = substream(seed, "shots", "mps")
    env = np.ones((shots, 1), dtype=complex)
    out = np.empty((shots, m.n), dtype=np.int8)
    for j, a in enumerate(m.tensors):
        if basis[j] != "Z":
            a = np.einsum("pq,lqr->lpr", ROTATIONS[basis[j]], a)
        w = np.einsum("sl,lpr->spr", env, a)
        weights = np.sum(np.abs(w) ** 2, axis=2)  # shots x 2
        total = weights.sum(axis=1)
        p0 = weights[:, 0] / total
        b = (rng.random(shots) >= p0).astype(np.int64)
        out[:, j] = 1 - 2 * b
        chosen = w[np.arange(shots), b]
        env = chosen / np.sqrt(weights[np.arange(shots), b])[:, None]
    return ShotBatch(out, basis, seed, "mps")


def is_line(c: LayeredCircuit) -> bool:
    return all(
        g.arity == 1 or (g.arity == 2 and abs(g.qubits[0] - g.qubits[1]) == 1) for _, g in c.gates()
    )


def sample(
    c: LayeredCircuit,
    basis: str,
    seed: int,
    shots: int,
    backend: str = "auto",
    bits: str | Sequence[int] | None = None,
) -> ShotBatch:
    """Dispatch to a backend; ``auto`` is dense up to the cap, else MPS on lines."""
    if backend == "auto":
        if c.n <= DENSE_CAP:
            backend = "dense"
        elif is_line(c):
            backend = "mps"
        else:
            raise GeometryError(
                f"{c.n} qubits exceed the dense cap and the circuit is not 1D; no exact backend applies"
            )
    if backend == "dense":
        return sample_dense(c, basis, bits, seed, shots)
    if backend == "mps":
        return sample_mps(build_mps(c, bits), basis, seed, shots)
    raise ValueError(f"unknown backend {backend!r}")
