import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import dense_observable, random_observable
from onecopy.circuit import LayeredCircuit, apply_dense, build_random_brickwork
from onecopy.estimator import (
    BasisMismatch,
    confidence,
    estimates,
    multi_observable_budget,
    refined_variance_bound,
    results_to_csv,
    single_copy_estimate,
    term_value,
    trial_harness,
    variance_bound,
)
from onecopy.observable import mean_z
from onecopy.simulator import Shot, measurement_probabilities, sample


def shot(*v, basis=None):
    return Shot(np.array(v, dtype=np.int8), basis or "Z" * len(v))


def test_term_value():
    assert term_value(shot(1, 1, 1), (0, 2)) == 1
    assert term_value(shot(1, -1, -1), (1, 2)) == 1
    assert term_value(shot(1, -1, -1), (0, 1)) == -1


def test_single_copy_estimate_basic():
    assert single_copy_estimate(shot(1, 1, 1), mean_z(3)).estimate == 1
    assert single_copy_estimate(shot(1, 1, -1, -1), mean_z(4)).estimate == 0


def test_single_copy_eigenstate_zero_variance():
    c = LayeredCircuit(6)
    batch = sample(c, "Z" * 6, seed=0, shots=100)
    y = estimates(batch, mean_z(6))
    assert np.all(y == 1)
    rep = single_copy_estimate(batch[0], mean_z(6), c)
    assert rep.estimate == 1 and rep.overlap_degree == 1
    assert rep.variance_bound == pytest.approx(1 / 6)
    assert rep.provenance["circuit"] == c.digest()


def test_basis_mismatch():
    with pytest.raises(BasisMismatch):
        single_copy_estimate(shot(1, 1), mean_z(2, "XX"))


def test_variance_bound_examples():
    assert variance_bound(LayeredCircuit(9), mean_z(9)) == pytest.approx(1 / 9)
    assert variance_bound(build_random_brickwork(4, 1, 0), mean_z(4)) == pytest.approx(0.5)


def test_refined_bound_never_exceeds_generic():
    rng = np.random.default_rng(0)
    for seed in range(20):
        n = int(rng.integers(2, 9))
        o = random_observable(n, rng)
        c = build_random_brickwork(n, int(rng.integers(0, 4)), seed)
        assert refined_variance_bound(c, o) <= variance_bound(c, o) + 1e-12
    assert refined_variance_bound(LayeredCircuit(5), mean_z(5)) == 0.0


def test_refined_bound_dominates_exact_variance():
    # exact Var(Y) from the dense Born distribution
    c = build_random_brickwork(8, 2, seed=4)
    o = random_observable(8, np.random.default_rng(4), max_terms=8)
    probs = measurement_probabilities(apply_dense(c), o.basis)
    idx = np.arange(2**8)
    values = 1 - 2 * ((idx[:, None] >> np.arange(7, -1, -1)) & 1)
    y = np.array([sum(t.coeff * np.prod(v[list(t.support)]) for t in o.terms) for v in values])
    mean = probs @ y
    assert mean == pytest.approx(dense_observable(apply_dense(c), o), abs=1e-9)
    var = probs @ (y - mean) ** 2
    assert var <= refined_variance_bound(c, o) + 1e-12 <= variance_bound(c, o) + 2e-12


def test_confidence():
    assert confidence(0.01, 0.5) == pytest.approx(0.04)
    assert confidence(1.0, 0.1) == 1
    assert confidence(1 / 1024, 0.1) == pytest.approx(0.09765625)
    with pytest.raises(ValueError):
        confidence(0.1, 0.0)


def test_multi_observable_budget():
    c = LayeredCircuit(100)
    o = mean_z(100)
    assert multi_observable_budget(c, [o], 0.3) == confidence(variance_bound(c, o), 0.3)
    assert multi_observable_budget(c, [o, o], 0.5) == pytest.approx(0.08)
    with pytest.raises(BasisMismatch, match="one measurement setting"):
        multi_observable_budget(c, [o, mean_z(100, "X" * 100)], 0.5)


def test_harness_eigenstate():
    r = trial_harness(LayeredCircuit(8), mean_z(8), 200, seed=1)
    assert (r.mean, r.variance, r.exact) == (1.0, 0.0, 1.0)
    assert all(v == 0 for v in r.failure_rates.values())


def test_harness_deterministic():
    c = build_random_brickwork(10, 2, 3)
    a = trial_harness(c, mean_z(10), 300, seed=4)
    b = trial_harness(c, mean_z(10), 300, seed=4)
    assert a == b
    assert results_to_csv([a]) == results_to_csv([b])


def test_harness_brickwork_64_variance_bound():
    c = build_random_brickwork(64, 2, seed=8)
    r = trial_harness(c, mean_z(64), 10_000, seed=8, backend="mps")
    assert r.variance <= r.bound * 1.1


def test_harness_unbiased_256():
    c = build_random_brickwork(256, 2, seed=1)
    r = trial_harness(c, mean_z(256), 10_000, seed=1, backend="mps")
    assert abs(r.mean - r.exact) <= 4 * math.sqrt(r.variance / 10_000)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_estimates_bounded(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 9))
    o = random_observable(n, rng)
    c = build_random_brickwork(n, int(rng.integers(0, 4)), seed)
    y = estimates(sample(c, o.basis, seed, 200), o)
    assert np.all(np.abs(y) <= 1 + 1e-12)


def test_csv_columns():
    r = trial_harness(LayeredCircuit(4), mean_z(4), 10, seed=0)
    header = results_to_csv([r]).splitlines()[0].split(",")
    assert header[:7] == ["n", "depth", "trials", "exact", "mean", "variance", "bound"]
    assert "fail@0.1" in header and "chebyshev@0.1" in header
