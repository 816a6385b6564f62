"""The single-copy estimator and its Chebyshev guarantee.

From one shot in basis ``P`` each term gives ``R_i = prod_{j in s_i} v_j``
and the estimate is ``Y = sum_i p_i R_i``. Terms whose lightcones are disjoint
give independent ``R_i``, so only overlapping pairs contribute to ``Var(Y)``.
With ``|Cov(R_i, R_j)| <= 1`` for +-1 variables this gives
``Var(Y) <= D_t * sum_i p_i^2`` where ``D_t`` is the max overlap degree.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .circuit import LayeredCircuit
from .lightcone import exact_expectation, lightcones, overlap_graph
from .observable import Observable, norm
from .simulator import Shot, ShotBatch, sample

DEFAULT_EPSILONS = (0.05, 0.1, 0.2, 0.5)
COVARIANCE_CONSTANT = 1.0


class BasisMismatch(ValueError):
    pass


@dataclass
class EstimateReport:
    estimate: float
    term_values: list[int]
    variance_bound: float | None = None
    overlap_degree: int | None = None
    covariance_constant: float = COVARIANCE_CONSTANT
    confidence: dict[float, float] = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["confidence"] = [{"epsilon": e, "failure_bound": p} for e, p in self.confidence.items()]
        return d


def term_value(shot: Shot, support: Sequence[int]) -> int:
    return int(np.prod(shot.values[list(support)]))


def term_matrix(values: np.ndarray, o: Observable) -> np.ndarray:
    """``shots x terms`` matrix of ``R_i`` values (entries +-1)."""
    r = np.empty((values.shape[0], len(o.terms)), dtype=np.int8)
    for i, t in enumerate(o.terms):
        r[:, i] = np.prod(values[:, list(t.support)], axis=1)
    return r


def estimates(batch: ShotBatch, o: Observable) -> np.ndarray:
    """One estimate ``Y`` per shot in the batch."""
    if batch.basis != o.basis:
        raise BasisMismatch(f"shots measured in {batch.basis}, observable needs {o.basis}")
    return np.clip(term_matrix(batch.values, o).astype(float) @ o.coeffs, -1.0, 1.0)


def overlap_degree(c: LayeredCircuit, o: Observable) -> int:
    return overlap_graph(lightcones(c, o)).max_degree


def variance_bound(c: LayeredCircuit, o: Observable) -> float:
    return COVARIANCE_CONSTANT * overlap_degree(c, o) * norm(o)


def refined_variance_bound(c: LayeredCircuit, o: Observable, bits=None) -> float:
    """Instance-specific bound using the exact ``Var(R_i) = 1 - a_i^2``.

    Cauchy-Schwarz on each overlapping pair gives
    ``Var(Y) <= sum_{t_i meets t_j} |p_i p_j| sd_i sd_j``, never larger than
    ``D_t * norm(O)`` and zero on eigenstates of every term.
    """
    graph = overlap_graph(lightcones(c, o))
    _, a = exact_expectation(c, o, bits)
    w = np.abs(o.coeffs) * np.sqrt(np.clip(1.0 - a**2, 0.0, None))
    return float(sum(w[i] * w[list(nb)].sum() for i, nb in enumerate(graph.neighbors)))


def confidence(var_bound: float, epsilon: float) -> float:
    """Chebyshev bound on ``Pr(|Y - E Y| >= epsilon)``."""
    if epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    return min(1.0, var_bound / epsilon**2)


def single_copy_estimate(
    shot: Shot,
    o: Observable,
    c: LayeredCircuit | None = None,
    epsilons: Sequence[float] = DEFAULT_EPSILONS,
    backend: str | None = None,
) -> EstimateReport:
    """Estimate ``tr(O rho)`` from one shot; with ``c`` also attach the guarantee."""
    if shot.basis != o.basis:
        raise BasisMismatch(f"shot measured in {shot.basis}, observable needs {o.basis}")
    r = [term_value(shot, t.support) for t in o.terms]
    y = math.fsum(t.coeff * ri for t, ri in zip(o.terms, r))
    y = max(-1.0, min(1.0, y))
    rep = EstimateReport(y, r, provenance={"seed": shot.seed, "shot_index": shot.index, "backend": backend})
    if c is not None:
        d = overlap_degree(c, o)
        vb = COVARIANCE_CONSTANT * d * norm(o)
        rep.variance_bound = vb
        rep.overlap_degree = d
        rep.confidence = {float(e): confidence(vb, e) for e in epsilons}
        rep.provenance["circuit"] = c.digest()
    return rep


def multi_observable_budget(c: LayeredCircuit, observables: Sequence[Observable], epsilon: float) -> float:
    """Union bound on any of ``O_1..O_m`` missing by ``epsilon`` from one shot."""
    bases = {o.basis for o in observables}
    if len(bases) > 1:
        raise BasisMismatch(
            "a single copy allows one measurement setting; observables use bases "
            + ", ".join(sorted(bases))
        )
    total = sum(confidence(variance_bound(c, o), epsilon) for o in observables)
    return min(1.0, total)


@dataclass
class HarnessResult:
    n: int
    depth: int
    trials: int
    exact: float
    mean: float
    variance: float
    bound: float
    overlap_degree: int
    failure_rates: dict[float, float]
    chebyshev: dict[float, float]
    seed: int
    backend: str

    CSV_FIELDS = ("n", "depth", "trials", "exact", "mean", "variance", "bound", "overlap_degree")

    def standard_error(self) -> float:
        return math.sqrt(self.variance / self.trials) if self.trials > 1 else float("inf")

    def csv_header(self) -> list[str]:
        eps = sorted(self.failure_rates)
        return list(self.CSV_FIELDS) + [f"fail@{e:g}" for e in eps] + [f"chebyshev@{e:g}" for e in eps]

    def csv_row(self) -> list[str]:
        eps = sorted(self.failure_rates)
        vals = [getattr(self, f) for f in self.CSV_FIELDS]
        vals += [self.failure_rates[e] for e in eps] + [self.chebyshev[e] for e in eps]
        return [repr(v) if isinstance(v, float) else str(v) for v in vals]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["failure_rates"] = [{"epsilon": e, "rate": r} for e, r in self.failure_rates.items()]
        d["chebyshev"] = [{"epsilon": e, "bound": r} for e, r in self.chebyshev.items()]
        return d


def results_to_csv(results: Sequence[HarnessResult]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(results[0].csv_header())
    for r in results:
        w.writerow(r.csv_row())
    return buf.getvalue()


def trial_harness(
    c: LayeredCircuit,
    o: Observable,
    trials: int,
    seed: int,
    backend: str = "auto",
    epsilons: Sequence[float] = DEFAULT_EPSILONS,
    bits=None,
) -> HarnessResult:
    """Run ``trials`` independent one-copy experiments and summarise them.

    Each trial consumes one fresh shot; the collection only exists to check
    unbiasedness and the variance / failure-probability guarantees.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    batch = sample(c, o.basis, seed, trials, backend=backend, bits=bits)
    y = estimates(batch, o)
    exact, _ = exact_expectation(c, o, bits)
    d = overlap_degree(c, o)
    vb = COVARIANCE_CONSTANT * d * norm(o)
    dev = np.abs(y - exact)
    return HarnessResult(
        n=c.n,
        depth=c.depth,
        trials=trials,
        exact=exact,
        mean=float(y.mean()),
        variance=float(y.var(ddof=1)) if trials > 1 else 0.0,
        bound=vb,
        overlap_degree=d,
        failure_rates={float(e): float(np.mean(dev >= e)) for e in epsilons},
        chebyshev={float(e): confidence(vb, e) for e in epsilons},
        seed=seed,
        backend=batch.backend,
    )
