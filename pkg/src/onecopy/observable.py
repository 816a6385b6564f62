"""Observables measurable in a single product Pauli basis.

An observable is ``sum_i p_i P_{s_i}`` where ``P_{s_i}`` is the tensor product
of the basis axes over the support ``s_i`` and ``sum_i |p_i| = 1``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

NORMALIZATION_TOL = 1e-9
AXES = "XYZ"


class ObservableError(ValueError):
    pass


@dataclass(frozen=True)
class Term:
    support: tuple[int, ...]
    coeff: float

    def __post_init__(self):
        s = tuple(sorted(set(int(q) for q in self.support)))
        if not s:
            raise ObservableError("term support must be nonempty")
        if self.coeff == 0:
            raise ObservableError(f"term on {list(s)} has zero coefficient")
        object.__setattr__(self, "support", s)
        object.__setattr__(self, "coeff", float(self.coeff))


@dataclass(frozen=True)
class Observable:
    basis: str
    terms: tuple[Term, ...]

    def __post_init__(self):
        basis = self.basis.upper()
        if not basis or set(basis) - set(AXES):
            raise ObservableError(f"basis {self.basis!r} must be a nonempty string over X, Y, Z")
        terms = tuple(self.terms)
        if not terms:
            raise ObservableError("observable needs at least one term")
        supports = [t.support for t in terms]
        if len(set(supports)) != len(supports):
            raise ObservableError("term supports must be pairwise distinct")
        for t in terms:
            if t.support[-1] >= len(basis):
                raise ObservableError(f"support {list(t.support)} exceeds basis length {len(basis)}")
        total = sum(abs(t.coeff) for t in terms)
        if abs(total - 1.0) > NORMALIZATION_TOL:
            raise ObservableError(f"sum of |coeff| is {total!r}, must be 1")
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "terms", terms)

    @property
    def n(self) -> int:
        return len(self.basis)

    @property
    def coeffs(self) -> np.ndarray:
        return np.array([t.coeff for t in self.terms])

    def to_dict(self) -> dict:
        return {
            "basis": self.basis,
            "terms": [{"support": list(t.support), "coeff": t.coeff} for t in self.terms],
        }

    @classmethod
    def from_dict(cls, d: dict, renormalize: bool = False) -> "Observable":
        raw = [(tuple(t["support"]), float(t["coeff"])) for t in d["terms"]]
        if renormalize:
            total = sum(abs(c) for _, c in raw)
            if total == 0:
                raise ObservableError("cannot renormalize an all-zero observable")
            raw = [(s, c / total) for s, c in raw]
        return cls(d["basis"], tuple(Term(s, c) for s, c in raw))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str, renormalize: bool = False) -> "Observable":
        return cls.from_dict(json.loads(text), renormalize=renormalize)


def length(o: Observable) -> int:
    return max(len(t.support) for t in o.terms)


def degree(o: Observable) -> int:
    """Max over terms of how many supports (itself included) it intersects."""
    sets = [set(t.support) for t in o.terms]
    return max(sum(1 for b in sets if a & b) for a in sets)


def norm(o: Observable) -> float:
    return float(sum(t.coeff**2 for t in o.terms))


def mean_z(n: int, basis: str | None = None) -> Observable:
    """``(1/n) sum_j Z_j``; pass ``basis`` to use another axis pattern."""
    if n < 1:
        raise ObservableError("mean_z needs n >= 1")
    return Observable(basis or "Z" * n, tuple(Term((j,), 1.0 / n) for j in range(n)))
