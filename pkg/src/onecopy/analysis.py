"""Trace-distance certificates and classical decision of shallow circuits."""

from __future__ import annotations

import itertools
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .circuit import DENSE_CAP, CapacityError, LayeredCircuit, apply_dense, parse_bits
from .estimator import refined_variance_bound, variance_bound
from .lightcone import cone_bits_key, cone_zero_probability, exact_expectation, heisenberg_support
from .observable import Observable

TRACE_DISTANCE_CAP = 10
TRUTH_TABLE_CAP = 4096
THRESHOLD_TOL = 1e-12
F0, F1, UNDECIDED = "f=0", "f=1", "undecided"


class PreconditionError(ValueError):
    pass


@dataclass
class DiscriminationCertificate:
    epsilon: float
    value_rho: float
    value_sigma: float
    gap: float
    variance_bound_rho: float
    variance_bound_sigma: float
    failure_rho: float
    failure_sigma: float
    failure_average: float
    lower_bound: float
    exact_distance: float | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def exact_trace_distance(c_rho: LayeredCircuit, c_sigma: LayeredCircuit, cap: int = TRACE_DISTANCE_CAP) -> float:
    """Half the trace norm of the difference of the two output density matrices."""
    if c_rho.n != c_sigma.n:
        raise ValueError("circuits act on different qubit counts")
    if c_rho.n > cap:
        raise CapacityError(f"exact trace distance of {c_rho.n} qubits exceeds cap {cap}")
    psi, phi = apply_dense(c_rho), apply_dense(c_sigma)
    diff = np.outer(psi, psi.conj()) - np.outer(phi, phi.conj())
    return float(0.5 * np.sum(np.abs(np.linalg.eigvalsh(diff))))


def trace_distance_lower_bound(
    c_rho: LayeredCircuit,
    c_sigma: LayeredCircuit,
    o: Observable,
    epsilon: float,
    exact_cap: int = TRACE_DISTANCE_CAP,
    refined: bool = True,
) -> DiscriminationCertificate:
    """Certify ``1/2 ||rho - sigma||`` from one-shot distinguishability.

    Each state's value of ``O`` is estimated to ``epsilon/2``; the Chebyshev
    failure bounds averaged under a uniform prior bound the discrimination
    error, and the Helstrom relation turns that into a distance bound.
    ``refined=False`` uses the generic ``D_t * norm(O)`` variance bound
    instead of the per-term exact variances.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    vr, _ = exact_expectation(c_rho, o)
    vs, _ = exact_expectation(c_sigma, o)
    gap = abs(vr - vs)
    if not gap > epsilon:
        raise PreconditionError(f"gap |tr(O rho) - tr(O sigma)| = {gap:.6g} does not exceed epsilon = {epsilon}")
    half = (epsilon / 2) ** 2
    vb = refined_variance_bound if refined else variance_bound
    br, bs = vb(c_rho, o), vb(c_sigma, o)
    pr, ps = min(1.0, br / half), min(1.0, bs / half)
    pf = (pr + ps) / 2
    exact = exact_trace_distance(c_rho, c_sigma) if c_rho.n <= exact_cap else None
    return DiscriminationCertificate(
        epsilon=epsilon,
        value_rho=vr,
        value_sigma=vs,
        gap=gap,
        variance_bound_rho=br,
        variance_bound_sigma=bs,
        failure_rho=pr,
        failure_sigma=ps,
        failure_average=pf,
        lower_bound=max(0.0, 1.0 - 2.0 * pf),
        exact_distance=exact,
    )


@dataclass
class Decision:
    input: str
    p0: float
    verdict: str
    qubit: int
    cone_size: int
    cone_gates: int
    gates_applied: int

    def to_dict(self) -> dict:
        return asdict(self)


def verdict(p0: float) -> str:
    """Thresholds 2/3 and 1/3; the closed band between them is undecided."""
    if p0 > 2 / 3 + THRESHOLD_TOL:
        return F0
    if p0 < 1 / 3 - THRESHOLD_TOL:
        return F1
    return UNDECIDED


def decide(c: LayeredCircuit, bits: str | Sequence[int], qubit: int = 0, cap: int = DENSE_CAP) -> Decision:
    """Evaluate the output qubit's ``|0>`` probability from its lightcone alone."""
    bits = parse_bits(bits, c.n)
    cone = heisenberg_support(c, (qubit,))
    p0, touched = cone_zero_probability(cone, bits, qubit, cap)
    return Decision("".join(map(str, bits)), p0, verdict(p0), qubit, cone.size, len(cone.gates), touched)


def truth_table(
    c: LayeredCircuit, max_inputs: int = TRUTH_TABLE_CAP, qubit: int = 0, cap: int = DENSE_CAP
) -> list[Decision]:
    """``decide`` on every input; inputs agreeing on the cone share one contraction."""
    if 2**c.n > max_inputs:
        raise CapacityError(f"2^{c.n} inputs exceed max_inputs={max_inputs}")
    cone = heisenberg_support(c, (qubit,))
    cache: dict = {}
    out = []
    for bits in itertools.product((0, 1), repeat=c.n):
        key = cone_bits_key(cone, bits)
        if key not in cache:
            cache[key] = cone_zero_probability(cone, bits, qubit, cap)
        p0, touched = cache[key]
        out.append(Decision("".join(map(str, bits)), p0, verdict(p0), qubit, cone.size, len(cone.gates), touched))
    return out


def truth_table_csv(rows: Sequence[Decision]) -> str:
    lines = ["input,p0,verdict"]
    lines += [f"{d.input},{d.p0!r},{d.verdict}" for d in rows]
    return "\n".join(lines) + "\n"
