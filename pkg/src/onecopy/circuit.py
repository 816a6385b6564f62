"""Layered low-depth circuits, builders, dense simulation, and channel dilation.

Basis convention: a gate on ``qubits = (a, b, ...)`` has its matrix written in
the basis ``|q_a q_b ...>`` with ``q_a`` the most significant bit, row-major.
Register states use the same convention with qubit 0 most significant, so the
bitstring ``"01"`` is basis index 1.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg

from .rng import substream

UNITARY_TOL = 1e-10
DENSE_CAP = 24

CNOT = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)
SWAP = np.array(
    [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex
)
I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)


class CircuitError(ValueError):
    """Structural problem with a circuit, channel, or gate."""


class CapacityError(RuntimeError):
    """A dense computation would exceed its configured qubit cap."""


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Gate:
    """A unitary on an ordered tuple of distinct qubits.

    Two-qubit gates are the norm; dilated channels produce gates acting on
    two system qubits plus their ancillas.
    """

    qubits: tuple[int, ...]
    matrix: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        object.__setattr__(self, "matrix", _frozen(self.matrix))
        d = 2 ** len(self.qubits)
        if len(self.qubits) == 0 or self.matrix.shape != (d, d):
            raise CircuitError(
                f"gate on {self.qubits} needs a {d}x{d} matrix, got {self.matrix.shape}"
            )

    @property
    def arity(self) -> int:
        return len(self.qubits)


# Kept for readability at call sites building ordinary brickwork circuits.
TwoQubitGate = Gate


@dataclass(frozen=True, eq=False)
class Layer:
    gates: tuple[Gate, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))

    @property
    def qubits(self) -> list[int]:
        return [q for g in self.gates for q in g.qubits]


@dataclass(frozen=True, eq=False)
class LayeredCircuit:
    n: int
    layers: tuple[Layer, ...] = ()

    def __post_init__(self):
        layers = tuple(l if isinstance(l, Layer) else Layer(tuple(l)) for l in self.layers)
        object.__setattr__(self, "layers", layers)

    @property
    def depth(self) -> int:
        return len(self.layers)

    def gates(self) -> Iterable[tuple[int, Gate]]:
        for k, layer in enumerate(self.layers):
            for g in layer.gates:
                yield k, g

    def extended(self, *layers: Layer) -> "LayeredCircuit":
        return LayeredCircuit(self.n, self.layers + tuple(layers))

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "layers": [
                [
                    {
                        "qubits": list(g.qubits),
                        "matrix": [[float(z.real), float(z.imag)] for z in g.matrix.ravel()],
                    }
                    for g in layer.gates
                ]
                for layer in self.layers
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LayeredCircuit":
        layers = []
        for layer in d["layers"]:
            gates = []
            for g in layer:
                qubits = tuple(g["qubits"])
                entries = np.array(g["matrix"], dtype=float)
                dim = 2 ** len(qubits)
                if entries.shape != (dim * dim, 2):
                    raise CircuitError(
                        f"gate on {list(qubits)}: expected {dim * dim} [re, im] pairs"
                    )
                gates.append(Gate(qubits, (entries[:, 0] + 1j * entries[:, 1]).reshape(dim, dim)))
            layers.append(Layer(tuple(gates)))
        return cls(int(d["n"]), tuple(layers))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> "LayeredCircuit":
        return cls.from_dict(json.loads(text))

    def digest(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()


@dataclass(frozen=True, eq=False)
class TwoQubitChannel:
    """A CPTP map on two qubits given by 1 to 16 Kraus operators (4x4)."""

    kraus: tuple[np.ndarray, ...]

    def __post_init__(self):
        ks = tuple(_frozen(k) for k in self.kraus)
        if not 1 <= len(ks) <= 16:
            raise CircuitError(f"need 1..16 Kraus operators, got {len(ks)}")
        for k in ks:
            if k.shape != (4, 4):
                raise CircuitError(f"Kraus operators must be 4x4, got {k.shape}")
        object.__setattr__(self, "kraus", ks)

    def tp_deviation(self) -> float:
        s = sum(k.conj().T @ k for k in self.kraus)
        return float(np.max(np.abs(s - np.eye(4))))

    def apply(self, rho: np.ndarray) -> np.ndarray:
        return sum(k @ rho @ k.conj().T for k in self.kraus)

    def to_dict(self) -> dict:
        return {
            "kraus": [[[float(z.real), float(z.imag)] for z in k.ravel()] for k in self.kraus]
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TwoQubitChannel":
        ks = []
        for k in d["kraus"]:
            e = np.array(k, dtype=float)
            if e.shape != (16, 2):
                raise CircuitError("each Kraus operator needs 16 [re, im] pairs")
            ks.append((e[:, 0] + 1j * e[:, 1]).reshape(4, 4))
        return cls(tuple(ks))


@dataclass(frozen=True)
class Violation:
    kind: str  # "unitarity" | "range" | "duplicate" | "collision"
    layer: int
    gate: int
    message: str
    deviation: float | None = None


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = field(default_factory=tuple)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __str__(self) -> str:
        if self.ok:
            return "ok"
        return "\n".join(
            f"layer {v.layer} gate {v.gate}: {v.kind}: {v.message}" for v in self.violations
        )


def unitarity_deviation(u: np.ndarray) -> float:
    return float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))))


def validate_circuit(c: LayeredCircuit, tol: float = UNITARY_TOL) -> ValidationReport:
    """Collect every unitarity, range, and intra-layer collision violation."""
    out = []
    for k, layer in enumerate(c.layers):
        seen: dict[int, int] = {}
        for gi, g in enumerate(layer.gates):
            dev = unitarity_deviation(g.matrix)
            if dev > tol:
                out.append(Violation("unitarity", k, gi, f"max |U^dag U - I| = {dev:.3g}", dev))
            if len(set(g.qubits)) != len(g.qubits):
                out.append(Violation("duplicate", k, gi, f"repeated qubit in {list(g.qubits)}"))
            for q in g.qubits:
                if not 0 <= q < c.n:
                    out.append(Violation("range", k, gi, f"qubit {q} outside [0, {c.n})"))
                if q in seen and seen[q] != gi:
                    out.append(
                        Violation("collision", k, gi, f"qubit {q} already used by gate {seen[q]}")
                    )
                seen.setdefault(q, gi)
    return ValidationReport(tuple(out))


def check_circuit(c: LayeredCircuit) -> LayeredCircuit:
    report = validate_circuit(c)
    if not report.ok:
        raise CircuitError(str(report))
    return c


# --- builders -------------------------------------------------------------


def embed_single(u: np.ndarray, position: int = 0) -> np.ndarray:
    """Single-qubit ``u`` as a 4x4 gate acting on the first (0) or second (1) qubit."""
    return np.kron(u, I2) if position == 0 else np.kron(I2, u)


def haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    g = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / math.sqrt(2)
    q, r = np.linalg.qr(g)
    d = np.diag(r)
    return q * (d / np.abs(d))


def build_ghz(n: int, x: float) -> LayeredCircuit:
    """Depth ``n-1`` circuit preparing ``x|0...0> + sqrt(1-x^2)|1...1>``."""
    if n < 2:
        raise CircuitError("GHZ circuit needs n >= 2")
    if not 0.0 <= x <= 1.0:
        raise CircuitError(f"amplitude x={x} outside [0, 1]")
    s = math.sqrt(1.0 - x * x)
    rot = np.array([[x, -s], [s, x]], dtype=complex)
    layers = [Layer((Gate((0, 1), CNOT @ embed_single(rot, 0)),))]
    layers += [Layer((Gate((j, j + 1), CNOT),)) for j in range(1, n - 1)]
    return LayeredCircuit(n, tuple(layers))


def brickwork_pairs(n: int, parity: int) -> list[tuple[int, int]]:
    return [(a, a + 1) for a in range(parity, n - 1, 2)]


def build_random_brickwork(n: int, depth: int, seed: int) -> LayeredCircuit:
    """1D brickwork of Haar-random two-qubit gates; even pairs first."""
    if n < 2 or depth < 0:
        raise CircuitError("brickwork needs n >= 2 and depth >= 0")
    rng = substream(seed, "brickwork", n, depth)
    layers = []
    for k in range(depth):
        layers.append(Layer(tuple(Gate(p, haar_unitary(4, rng)) for p in brickwork_pairs(n, k % 2))))
    return LayeredCircuit(n, tuple(layers))


def build_product(n: int, u: np.ndarray) -> LayeredCircuit:
    """Apply the single-qubit unitary ``u`` to every qubit, packed into pair gates."""
    if n == 1:
        raise CircuitError("product builder needs n >= 2")
    layers = [Layer(tuple(Gate(p, np.kron(u, u)) for p in brickwork_pairs(n, 0)))]
    if n % 2:
        layers.append(Layer((Gate((n - 2, n - 1), embed_single(u, 1)),)))
    return LayeredCircuit(n, tuple(layers))


# --- dense simulation ----------------------------------------------------


def basis_state(bits: str | Sequence[int]) -> np.ndarray:
    bits = parse_bits(bits)
    psi = np.zeros(2 ** len(bits), dtype=complex)
    psi[int("".join(map(str, bits)) or "0", 2)] = 1.0
    return psi


def parse_bits(bits: str | Sequence[int], n: int | None = None) -> tuple[int, ...]:
    if isinstance(bits, str):
        if set(bits) - {"0", "1"}:
            raise ValueError(f"bitstring {bits!r} must contain only 0 and 1")
        out = tuple(int(b) for b in bits)
    else:
        out = tuple(int(b) for b in bits)
        if set(out) - {0, 1}:
            raise ValueError("input bits must be 0 or 1")
    if n is not None and len(out) != n:
        raise ValueError(f"input has {len(out)} bits, circuit has {n} qubits")
    return out


def apply_gate(psi: np.ndarray, matrix: np.ndarray, axes: Sequence[int]) -> np.ndarray:
    """Apply ``matrix`` to the tensor ``psi`` (shape ``[2]*n``) on ``axes``."""
    m = len(axes)
    t = matrix.reshape((2,) * (2 * m))
    out = np.tensordot(t, psi, axes=(list(range(m, 2 * m)), list(axes)))
    return np.moveaxis(out, list(range(m)), list(axes))


def apply_dense(c: LayeredCircuit, bits: str | Sequence[int] | None = None, cap: int = DENSE_CAP) -> np.ndarray:
    """Statevector ``U|bits>`` (default all zeros) as a flat array of length ``2**n``."""
    if c.n > cap:
        raise CapacityError(f"dense simulation of {c.n} qubits exceeds cap {cap}")
    bits = parse_bits(bits if bits is not None else "0" * c.n, c.n)
    psi = basis_state(bits).reshape((2,) * c.n)
    for _, g in c.gates():
        psi = apply_gate(psi, g.matrix, g.qubits)
    return psi.reshape(-1)


# --- Stinespring dilation ------------------------------------------------


def dilate_channel(ch: TwoQubitChannel, tol: float = UNITARY_TOL) -> tuple[np.ndarray, int]:
    """Unitary ``V`` on (2 system + a ancilla) qubits realising ``ch``.

    ``V`` restricted to ancilla input ``|0..0>`` is the isometry
    ``sum_m K_m (x) |m>``; the remaining columns are any orthonormal completion.
    """
    dev = ch.tp_deviation()
    if dev > tol:
        raise CircuitError(f"channel is not trace preserving: max |sum K^dag K - I| = {dev:.3g}")
    r = len(ch.kraus)
    a = math.ceil(math.log2(r)) if r > 1 else 0
    if a == 0:
        return np.array(ch.kraus[0]), 0
    na = 2**a
    # rows indexed (system, ancilla) with ancilla least significant
    iso = np.zeros((4, na, 4), dtype=complex)
    for m, k in enumerate(ch.kraus):
        iso[:, m, :] = k
    iso = iso.reshape(4 * na, 4)
    comp = scipy.linalg.null_space(iso.conj().T)
    v = np.zeros((4 * na, 4 * na), dtype=complex)
    cols = np.arange(4) * na  # input columns with ancilla = 0
    v[:, cols] = iso
    rest = np.setdiff1d(np.arange(4 * na), cols)
    v[:, rest] = comp
    return v, a


def dilate_noisy_circuit(
    n: int, channel_layers: Sequence[Sequence[tuple[tuple[int, int], TwoQubitChannel]]]
) -> tuple[LayeredCircuit, list[int]]:
    """Replace every channel by its dilation on fresh ancilla qubits ``n, n+1, ...``.

    Returns the unitary circuit and the list of ancilla indices. Ancillas start
    in ``|0>`` like the system register, so the reduced state of the first
    ``n`` qubits equals the noisy circuit's output.
    """
    next_anc = n
    layers = []
    for layer in channel_layers:
        gates = []
        for pair, ch in layer:
            v, a = dilate_channel(ch)
            anc = tuple(range(next_anc, next_anc + a))
            next_anc += a
            gates.append(Gate(tuple(pair) + anc, v))
        layers.append(Layer(tuple(gates)))
    return LayeredCircuit(next_anc, tuple(layers)), list(range(n, next_anc))
