"""Backward lightcones and exact expectations from cone-restricted contraction.

For a term supported on ``s``, only gates in the backward lightcone of ``s``
can change ``<P_s>``; every other gate commutes past the observable and
cancels with its adjoint. The cone therefore acts on a small qubit set ``t``,
and the expectation is computed with a dense statevector on ``t`` alone.
"""

from __future__ import annotations

import os
import weakref
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Hashable, Sequence, TypeVar

import numpy as np

from .circuit import DENSE_CAP, CapacityError, Gate, LayeredCircuit, X, Y, Z, apply_gate, parse_bits
from .observable import Observable, Term

PAULI = {"X": X, "Y": Y, "Z": Z}
REALITY_TOL = 1e-10

G = TypeVar("G")


@dataclass(frozen=True, eq=False)
class Cone:
    support: tuple[int, ...]
    gates: tuple[tuple[int, Gate], ...]  # (layer index, gate) in application order

    @property
    def size(self) -> int:
        return len(self.support)


@dataclass(frozen=True, eq=False)
class LightconeSet:
    sources: tuple[tuple[int, ...], ...]
    cones: tuple[Cone, ...]

    def __len__(self):
        return len(self.cones)

    def __getitem__(self, i) -> Cone:
        return self.cones[i]


@dataclass(frozen=True)
class OverlapGraph:
    neighbors: tuple[tuple[int, ...], ...]  # includes self

    @property
    def max_degree(self) -> int:
        return max(len(nb) for nb in self.neighbors)

    def adjacency(self) -> np.ndarray:
        m = len(self.neighbors)
        a = np.zeros((m, m), dtype=bool)
        for i, nb in enumerate(self.neighbors):
            a[i, list(nb)] = True
        return a


def _qubit_index(layers: Sequence[Sequence[G]], key: Callable[[G], Sequence[int]]) -> list[dict[int, int]]:
    out = []
    for layer in layers:
        d: dict[int, int] = {}
        for gi, g in enumerate(layer):
            for q in key(g):
                d[q] = gi
        out.append(d)
    return out


def backward_cone(
    layers: Sequence[Sequence[G]],
    support: Sequence[int],
    key: Callable[[G], Sequence[int]],
    index: list[dict[int, int]] | None = None,
) -> tuple[tuple[int, ...], list[tuple[int, G]]]:
    """Scan layers last to first, absorbing every gate that touches the support.

    Works for anything with a qubit/coordinate tuple, so the classical Markov
    analog reuses it. Returns the final support and the absorbed gates in
    forward (application) order.
    """
    if index is None:
        index = _qubit_index(layers, key)
    cur = set(int(q) for q in support)
    picked: list[tuple[int, G]] = []
    for k in range(len(layers) - 1, -1, -1):
        hit = sorted({index[k][q] for q in cur if q in index[k]})
        for gi in hit:
            g = layers[k][gi]
            picked.append((k, g))
        for gi in hit:
            cur.update(key(layers[k][gi]))
    picked.reverse()
    return tuple(sorted(cur)), picked


_INDEX_CACHE: "weakref.WeakKeyDictionary[LayeredCircuit, list]" = weakref.WeakKeyDictionary()


def _circuit_index(c: LayeredCircuit) -> list[dict[int, int]]:
    idx = _INDEX_CACHE.get(c)
    if idx is None:
        idx = _qubit_index([l.gates for l in c.layers], lambda g: g.qubits)
        _INDEX_CACHE[c] = idx
    return idx


def heisenberg_support(c: LayeredCircuit, s: Sequence[int]) -> Cone:
    if not s:
        raise ValueError("support must be nonempty")
    if max(s) >= c.n or min(s) < 0:
        raise ValueError(f"support {list(s)} outside [0, {c.n})")
    t, gates = backward_cone([l.gates for l in c.layers], s, lambda g: g.qubits, _circuit_index(c))
    return Cone(t, tuple(gates))


def lightcones(c: LayeredCircuit, o: Observable) -> LightconeSet:
    sources = tuple(t.support for t in o.terms)
    return LightconeSet(sources, tuple(heisenberg_support(c, s) for s in sources))


def overlap_from_supports(supports: Sequence[Sequence[int]]) -> OverlapGraph:
    """Overlap graph of arbitrary supports via a qubit -> owners index."""
    owners: dict[int, list[int]] = {}
    for i, t in enumerate(supports):
        for q in t:
            owners.setdefault(q, []).append(i)
    nbrs = []
    for t in supports:
        nb: set[int] = set()
        for q in t:
            nb.update(owners[q])
        nbrs.append(tuple(sorted(nb)))
    return OverlapGraph(tuple(nbrs))


def overlap_graph(cones: LightconeSet) -> OverlapGraph:
    return overlap_from_supports([c.support for c in cones.cones])


# --- cone-restricted dense evaluation ------------------------------------


def evolve_cone(cone: Cone, bits: Sequence[int], cap: int = DENSE_CAP, label: str = "") -> tuple[np.ndarray, int]:
    """Dense state of the cone qubits after replaying the cone gates.

    Returns the tensor (one axis per cone qubit, in ``cone.support`` order)
    and the number of gates applied.
    """
    if cone.size > cap:
        raise CapacityError(
            f"lightcone{' of ' + label if label else ''} spans {cone.size} qubits, cap is {cap}"
        )
    local = {q: i for i, q in enumerate(cone.support)}
    psi = np.zeros((2,) * cone.size, dtype=complex)
    psi[tuple(bits[q] for q in cone.support)] = 1.0
    touched = 0
    for _, g in cone.gates:
        psi = apply_gate(psi, g.matrix, [local[q] for q in g.qubits])
        touched += 1
    return psi, touched


def pauli_expectation(psi: np.ndarray, axes: dict[int, str]) -> float:
    """``<psi| prod_j P_j |psi>`` for a tensor state and ``{axis: 'X'|'Y'|'Z'}``."""
    phi = psi
    for ax, p in axes.items():
        phi = apply_gate(phi, PAULI[p], [ax])
    val = np.vdot(psi, phi)
    if abs(val.imag) > REALITY_TOL:
        raise ArithmeticError(f"Pauli expectation has imaginary part {val.imag:.3g}")
    return float(val.real)


def exact_term_expectation(
    c: LayeredCircuit,
    term: Term,
    basis: str,
    bits: str | Sequence[int] | None = None,
    cap: int = DENSE_CAP,
    cone: Cone | None = None,
) -> float:
    bits = parse_bits(bits if bits is not None else "0" * c.n, c.n)
    cone = cone or heisenberg_support(c, term.support)
    psi, _ = evolve_cone(cone, bits, cap, label=f"term {list(term.support)}")
    local = {q: i for i, q in enumerate(cone.support)}
    return pauli_expectation(psi, {local[q]: basis[q] for q in term.support})


def default_jobs() -> int:
    return max(1, int(os.environ.get("ONECOPY_JOBS", "1")))


def exact_expectation(
    c: LayeredCircuit,
    o: Observable,
    bits: str | Sequence[int] | None = None,
    cap: int = DENSE_CAP,
    jobs: int | None = None,
) -> tuple[float, np.ndarray]:
    """``tr(O psi)`` and the per-term values ``a_i``, one cone per term."""
    if o.n != c.n:
        raise ValueError(f"observable has {o.n} qubits, circuit has {c.n}")
    bits = parse_bits(bits if bits is not None else "0" * c.n, c.n)

    def one(term: Term) -> float:
        return exact_term_expectation(c, term, o.basis, bits, cap)

    jobs = jobs or default_jobs()
    if jobs > 1:
        with ThreadPoolExecutor(jobs) as ex:
            a = np.array(list(ex.map(one, o.terms)))
    else:
        a = np.array([one(t) for t in o.terms])
    return float(o.coeffs @ a), a


def output_qubit_probability(
    c: LayeredCircuit, bits: str | Sequence[int], q: int = 0, cap: int = DENSE_CAP
) -> float:
    """Probability that qubit ``q`` of ``U|bits>`` is found in ``|0>``."""
    if not 0 <= q < c.n:
        raise ValueError(f"qubit {q} outside [0, {c.n})")
    bits = parse_bits(bits, c.n)
    cone = heisenberg_support(c, (q,))
    return cone_zero_probability(cone, bits, q, cap)[0]


def cone_zero_probability(cone: Cone, bits: Sequence[int], q: int, cap: int = DENSE_CAP) -> tuple[float, int]:
    psi, touched = evolve_cone(cone, bits, cap, label=f"qubit {q}")
    ax = cone.support.index(q)
    p0 = float(np.sum(np.abs(np.take(psi, 0, axis=ax)) ** 2))
    return p0, touched


def cone_bits_key(cone: Cone, bits: Sequence[int]) -> Hashable:
    return tuple(bits[q] for q in cone.support)
