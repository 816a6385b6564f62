"""Classical analog: layered local Markov maps and single-sample estimation.

The process starts from the point mass on the all-first-symbol configuration
and applies layers of two-coordinate stochastic maps. Matrices are
row-stochastic: row = source joint symbol ``x_i * |A_j| + x_j``, column =
target joint symbol.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .lightcone import OverlapGraph, backward_cone, overlap_from_supports
from .rng import substream

STOCHASTIC_TOL = 1e-12
NORMALIZATION_TOL = 1e-9
ENUMERATION_CAP = 10**6


class MarkovError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class MarkovGate:
    coords: tuple[int, int]
    matrix: np.ndarray

    def __post_init__(self):
        i, j = (int(c) for c in self.coords)
        if i == j:
            raise MarkovError(f"gate coordinates must differ, got ({i}, {j})")
        m = np.array(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise MarkovError(f"gate on ({i}, {j}) needs a square matrix, got {m.shape}")
        if np.any(m < 0):
            raise MarkovError(f"gate on ({i}, {j}) has negative entries")
        dev = float(np.max(np.abs(m.sum(axis=1) - 1)))
        if dev > STOCHASTIC_TOL:
            raise MarkovError(f"gate on ({i}, {j}) rows deviate from sum 1 by {dev:.3g}")
        m.setflags(write=False)
        object.__setattr__(self, "coords", (i, j))
        object.__setattr__(self, "matrix", m)

    @property
    def qubits(self) -> tuple[int, int]:
        return self.coords


@dataclass(frozen=True, eq=False)
class MarkovProcess:
    alphabets: tuple[int, ...]
    layers: tuple[tuple[MarkovGate, ...], ...]

    def __post_init__(self):
        alph = tuple(int(a) for a in self.alphabets)
        if not alph or min(alph) < 1:
            raise MarkovError("alphabet sizes must be positive")
        layers = tuple(tuple(l) for l in self.layers)
        for k, layer in enumerate(layers):
            used: set[int] = set()
            for g in layer:
                for c in g.coords:
                    if not 0 <= c < len(alph):
                        raise MarkovError(f"layer {k}: coordinate {c} out of range")
                    if c in used:
                        raise MarkovError(f"layer {k}: coordinate {c} appears twice")
                    used.add(c)
                i, j = g.coords
                d = alph[i] * alph[j]
                if g.matrix.shape != (d, d):
                    raise MarkovError(f"layer {k}: gate on {g.coords} needs a {d}x{d} matrix")
        object.__setattr__(self, "alphabets", alph)
        object.__setattr__(self, "layers", layers)

    @property
    def n(self) -> int:
        return len(self.alphabets)

    @property
    def depth(self) -> int:
        return len(self.layers)

    def to_dict(self) -> dict:
        return {
            "alphabets": list(self.alphabets),
            "layers": [
                [{"coords": list(g.coords), "matrix": g.matrix.tolist()} for g in layer]
                for layer in self.layers
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MarkovProcess":
        return cls(
            tuple(d["alphabets"]),
            tuple(
                tuple(MarkovGate(tuple(g["coords"]), np.array(g["matrix"], dtype=float)) for g in layer)
                for layer in d["layers"]
            ),
        )


@dataclass(frozen=True, eq=False)
class FunctionalTerm:
    support: tuple[int, ...]
    coeff: float
    table: np.ndarray  # flat, indexed by the row-major joint symbol on ``support``

    def __post_init__(self):
        s = tuple(int(q) for q in self.support)
        if not s or list(s) != sorted(set(s)):
            raise MarkovError(f"support {list(s)} must be nonempty, sorted, without repeats")
        if self.coeff == 0:
            raise MarkovError("coefficients must be nonzero")
        t = np.array(self.table, dtype=float).reshape(-1)
        if np.any(np.abs(t) > 1 + 1e-12):
            raise MarkovError(f"table on {list(s)} has entries outside [-1, 1]")
        t.setflags(write=False)
        object.__setattr__(self, "support", s)
        object.__setattr__(self, "coeff", float(self.coeff))
        object.__setattr__(self, "table", t)


@dataclass(frozen=True, eq=False)
class LinearFunctional:
    terms: tuple[FunctionalTerm, ...]

    def __post_init__(self):
        terms = tuple(self.terms)
        total = sum(abs(t.coeff) for t in terms)
        if not terms or abs(total - 1) > NORMALIZATION_TOL:
            raise MarkovError(f"sum of |coeff| is {total!r}, must be 1")
        object.__setattr__(self, "terms", terms)

    @property
    def coeffs(self) -> np.ndarray:
        return np.array([t.coeff for t in self.terms])

    def check(self, alphabets: Sequence[int]) -> None:
        for t in self.terms:
            if t.support[-1] >= len(alphabets):
                raise MarkovError(f"support {list(t.support)} outside {len(alphabets)} coordinates")
            need = int(np.prod([alphabets[q] for q in t.support]))
            if t.table.size != need:
                raise MarkovError(f"table on {list(t.support)} needs {need} entries, has {t.table.size}")

    def to_dict(self) -> dict:
        return {
            "terms": [
                {"support": list(t.support), "coeff": t.coeff, "table": t.table.tolist()} for t in self.terms
            ]
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LinearFunctional":
        return cls(
            tuple(FunctionalTerm(tuple(t["support"]), t["coeff"], t["table"]) for t in d["terms"])
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


# --- sampling -------------------------------------------------------------


def sample_many(m: MarkovProcess, seed: int, samples: int) -> np.ndarray:
    """``samples x n`` array of independent draws, all advanced layer by layer."""
    rng = substream(seed, "markov")
    x = np.zeros((samples, m.n), dtype=np.int64)
    for layer in m.layers:
        for g in layer:
            i, j = g.coords
            aj = m.alphabets[j]
            src = x[:, i] * aj + x[:, j]
            cdf = np.cumsum(g.matrix, axis=1)[src]
            u = rng.random(samples)[:, None] * cdf[:, -1:]
            tgt = np.minimum((cdf <= u).sum(axis=1), g.matrix.shape[1] - 1)
            x[:, i], x[:, j] = np.divmod(tgt, aj)
    return x


def sample_process(m: MarkovProcess, seed: int) -> np.ndarray:
    return sample_many(m, seed, 1)[0]


def _joint_index(x: np.ndarray, support: Sequence[int], alphabets: Sequence[int]) -> np.ndarray:
    idx = np.zeros(x.shape[0], dtype=np.int64)
    for q in support:
        idx = idx * alphabets[q] + x[:, q]
    return idx


def single_sample_estimate(x: Sequence[int], f: LinearFunctional, alphabets: Sequence[int]) -> float:
    return float(sample_estimates(np.asarray(x)[None, :], f, alphabets)[0])


def sample_estimates(xs: np.ndarray, f: LinearFunctional, alphabets: Sequence[int]) -> np.ndarray:
    f.check(alphabets)
    vals = np.stack([t.table[_joint_index(xs, t.support, alphabets)] for t in f.terms], axis=1)
    return vals @ f.coeffs


# --- exact evaluation ------------------------------------------------------


def classical_cone(m: MarkovProcess, support: Sequence[int]):
    return backward_cone(m.layers, support, lambda g: g.coords)


def exact_term(m: MarkovProcess, term: FunctionalTerm, cap: int = ENUMERATION_CAP) -> float:
    """``E f(x_s)`` by propagating the exact joint law on the term's lightcone."""
    cone, gates = classical_cone(m, term.support)
    dims = [m.alphabets[q] for q in cone]
    if int(np.prod(dims, dtype=float)) > cap:
        raise MarkovError(f"lightcone of {list(term.support)} has {np.prod(dims, dtype=float):.3g} joint states, cap {cap}")
    local = {q: a for a, q in enumerate(cone)}
    p = np.zeros(dims)
    p[(0,) * len(dims)] = 1.0
    for _, g in gates:
        i, j = g.coords
        ai, aj = m.alphabets[i], m.alphabets[j]
        t = g.matrix.reshape(ai, aj, ai, aj)
        p = np.tensordot(p, t, axes=([local[i], local[j]], [0, 1]))
        p = np.moveaxis(p, [-2, -1], [local[i], local[j]])
    drop = tuple(local[q] for q in cone if q not in term.support)
    marg = p.sum(axis=drop) if drop else p
    return float(marg.reshape(-1) @ term.table)


def exact_functional(m: MarkovProcess, f: LinearFunctional, cap: int = ENUMERATION_CAP) -> float:
    f.check(m.alphabets)
    return float(sum(t.coeff * exact_term(m, t, cap) for t in f.terms))


def overlap(m: MarkovProcess, f: LinearFunctional) -> OverlapGraph:
    return overlap_from_supports([classical_cone(m, t.support)[0] for t in f.terms])


def variance_bound(m: MarkovProcess, f: LinearFunctional) -> float:
    return overlap(m, f).max_degree * float(np.sum(f.coeffs**2))


# --- random instances for experiments and tests ----------------------------


def random_stochastic(d: int, rng: np.random.Generator) -> np.ndarray:
    m = rng.random((d, d)) ** 2
    return m / m.sum(axis=1, keepdims=True)


def random_process(n: int, depth: int, seed: int, alphabet: int | Sequence[int] = 2) -> MarkovProcess:
    """Brickwork of random stochastic maps on a line."""
    rng = substream(seed, "markov-process", n, depth)
    alph = (alphabet,) * n if isinstance(alphabet, int) else tuple(alphabet)
    layers = []
    for k in range(depth):
        layers.append(
            tuple(
                MarkovGate((a, a + 1), random_stochastic(alph[a] * alph[a + 1], rng))
                for a in range(k % 2, n - 1, 2)
            )
        )
    return MarkovProcess(alph, tuple(layers))


def random_functional(alphabets: Sequence[int], terms: int, max_len: int, seed: int) -> LinearFunctional:
    rng = substream(seed, "markov-functional")
    n = len(alphabets)
    supports: set[tuple[int, ...]] = set()
    want = min(terms, sum(math.comb(n, k) for k in range(1, min(max_len, n) + 1)))
    while len(supports) < want:
        k = int(rng.integers(1, max_len + 1))
        supports.add(tuple(sorted(rng.choice(n, size=min(k, n), replace=False).tolist())))
    supports_l = sorted(supports)
    c = rng.uniform(0.1, 1.0, len(supports_l)) * rng.choice([-1, 1], len(supports_l))
    c = c / np.abs(c).sum()
    return LinearFunctional(
        tuple(
            FunctionalTerm(s, ci, rng.uniform(-1, 1, int(np.prod([alphabets[q] for q in s]))))
            for s, ci in zip(supports_l, c)
        )
    )
