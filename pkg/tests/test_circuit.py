import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import full_unitary, random_channel_kraus, random_density, trace_distance
from onecopy.circuit import (
    CNOT,
    CapacityError,
    CircuitError,
    Gate,
    H,
    Layer,
    LayeredCircuit,
    TwoQubitChannel,
    X,
    Z,
    apply_dense,
    build_ghz,
    build_random_brickwork,
    dilate_channel,
    dilate_noisy_circuit,
    embed_single,
    unitarity_deviation,
    validate_circuit,
)


def test_validate_single_cnot_ok():
    c = LayeredCircuit(2, (Layer((Gate((0, 1), CNOT),)),))
    assert validate_circuit(c).ok
    assert str(validate_circuit(c)) == "ok"


def test_validate_reports_collision_at_qubit_1():
    c = LayeredCircuit(3, (Layer((Gate((0, 1), CNOT), Gate((1, 2), CNOT))),))
    report = validate_circuit(c)
    (v,) = report.violations
    assert v.kind == "collision" and v.layer == 0 and v.gate == 1
    assert "qubit 1" in v.message


def test_validate_reports_unitarity_deviation_three():
    c = LayeredCircuit(2, (Layer((Gate((0, 1), 2 * np.eye(4)),)),))
    (v,) = validate_circuit(c).violations
    assert v.kind == "unitarity"
    assert v.deviation == pytest.approx(3.0)


def test_validate_reports_range_and_all_violations():
    bad = LayeredCircuit(2, (Layer((Gate((0, 5), 2 * np.eye(4)), Gate((0, 1), CNOT))),))
    kinds = sorted(v.kind for v in validate_circuit(bad).violations)
    assert kinds == ["collision", "range", "unitarity"]


def test_gate_shape_mismatch_rejected():
    with pytest.raises(CircuitError):
        Gate((0, 1), np.eye(2))


def test_json_round_trip():
    c = build_random_brickwork(5, 3, seed=2)
    c2 = LayeredCircuit.from_json(c.to_json())
    assert c2.to_json() == c.to_json()
    assert c2.n == 5 and c2.depth == 3
    d = c.to_dict()
    assert set(d) == {"n", "layers"}
    assert set(d["layers"][0][0]) == {"qubits", "matrix"}
    assert len(d["layers"][0][0]["matrix"]) == 16


# --- builders ---------------------------------------------------------------


def test_ghz_x1_is_all_zero():
    psi = apply_dense(build_ghz(3, 1.0))
    assert abs(psi[0] - 1) < 1e-10 and np.linalg.norm(psi[1:]) < 1e-10


def test_ghz_x0_is_all_one():
    psi = apply_dense(build_ghz(3, 0.0))
    assert abs(abs(psi[7]) - 1) < 1e-10 and np.linalg.norm(psi[:7]) < 1e-10


def test_ghz_amplitudes_against_full_unitary():
    c = build_ghz(4, 0.6)
    assert c.depth == 3
    expected = np.zeros(16)
    expected[0], expected[15] = 0.6, 0.8
    assert np.max(np.abs(apply_dense(c) - expected)) < 1e-10
    assert np.max(np.abs(full_unitary(c)[:, 0] - expected)) < 1e-10


@pytest.mark.parametrize("x", [-0.1, 1.5])
def test_ghz_rejects_bad_amplitude(x):
    with pytest.raises(CircuitError):
        build_ghz(3, x)


def test_brickwork_depth_zero_has_no_layers():
    assert build_random_brickwork(4, 0, seed=123).depth == 0


def test_brickwork_deterministic():
    a = build_random_brickwork(5, 2, seed=7)
    b = build_random_brickwork(5, 2, seed=7)
    assert a.to_json() == b.to_json()
    assert build_random_brickwork(5, 2, seed=8).to_json() != a.to_json()


def test_brickwork_pairing_convention():
    c = build_random_brickwork(4, 2, seed=1)
    assert [g.qubits for g in c.layers[0].gates] == [(0, 1), (2, 3)]
    assert [g.qubits for g in c.layers[1].gates] == [(1, 2)]
    assert validate_circuit(c).ok


# --- dense simulation --------------------------------------------------------


def test_apply_dense_identity():
    psi = apply_dense(LayeredCircuit(2), "01")
    assert psi[1] == 1 and np.count_nonzero(psi) == 1


def test_apply_dense_cnot_truth_table():
    c = LayeredCircuit(2, (Layer((Gate((0, 1), CNOT),)),))
    assert abs(apply_dense(c, "10")[3] - 1) < 1e-12
    rev = LayeredCircuit(2, (Layer((Gate((1, 0), CNOT),)),))
    assert abs(apply_dense(rev, "01")[3] - 1) < 1e-12


def test_apply_dense_ghz3():
    psi = apply_dense(build_ghz(3, 0.6), "000")
    assert np.allclose(psi, [0.6, 0, 0, 0, 0, 0, 0, 0.8], atol=1e-10)


def test_apply_dense_capacity():
    with pytest.raises(CapacityError):
        apply_dense(LayeredCircuit(30))


@settings(max_examples=100, deadline=None)
@given(
    n=st.integers(2, 10),
    depth=st.integers(0, 4),
    seed=st.integers(0, 2**31),
    bits=st.integers(0, 2**10 - 1),
)
def test_apply_dense_preserves_norm(n, depth, seed, bits):
    c = build_random_brickwork(n, depth, seed)
    b = format(bits % 2**n, f"0{n}b")
    assert abs(np.linalg.norm(apply_dense(c, b)) - 1) < 1e-10


@pytest.mark.parametrize("seed", range(5))
def test_apply_dense_matches_full_unitary(seed):
    rng = np.random.default_rng(seed)
    n = 5
    # non-nearest-neighbour and reversed-order gates, to exercise the basis convention
    c = LayeredCircuit(
        n,
        (
            Layer((Gate((3, 0), build_random_brickwork(2, 1, seed).layers[0].gates[0].matrix), Gate((4, 1), CNOT))),
            Layer((Gate((2, 4), CNOT),)),
        ),
    )
    bits = "".join(rng.choice(["0", "1"], n))
    assert np.max(np.abs(apply_dense(c, bits) - full_unitary(c)[:, int(bits, 2)])) < 1e-10


# --- dilation ----------------------------------------------------------------


def test_dilate_single_kraus_is_identity_map():
    v, a = dilate_channel(TwoQubitChannel((CNOT,)))
    assert a == 0 and np.allclose(v, CNOT)


def _dilated_action(v: np.ndarray, a: int, rho: np.ndarray) -> np.ndarray:
    anc = np.zeros((2**a, 2**a))
    anc[0, 0] = 1
    big = v @ np.kron(rho, anc) @ v.conj().T
    return np.einsum("iaja->ij", big.reshape(4, 2**a, 4, 2**a))


def test_dilate_dephasing():
    k = [np.sqrt(0.5) * np.eye(4), np.sqrt(0.5) * np.kron(Z, np.eye(2))]
    ch = TwoQubitChannel(tuple(k))
    v, a = dilate_channel(ch)
    assert a == 1 and v.shape == (8, 8)
    assert unitarity_deviation(v) < 1e-10
    rng = np.random.default_rng(0)
    for _ in range(50):
        rho = random_density(4, rng)
        direct = sum(m @ rho @ m.conj().T for m in k)
        assert trace_distance(_dilated_action(v, a, rho), direct) < 1e-10


def test_dilate_rejects_non_trace_preserving():
    k = [np.sqrt(1.1) * np.eye(4)]
    with pytest.raises(CircuitError, match="trace preserving"):
        dilate_channel(TwoQubitChannel(tuple(k)))


@pytest.mark.parametrize("r", [3, 5, 16])
def test_dilate_ancilla_count(r):
    rng = np.random.default_rng(r)
    v, a = dilate_channel(TwoQubitChannel(tuple(random_channel_kraus(r, rng))))
    assert a == int(np.ceil(np.log2(r)))
    assert unitarity_deviation(v) < 1e-10


def test_channel_kraus_count_limits():
    with pytest.raises(CircuitError):
        TwoQubitChannel(())
    with pytest.raises(CircuitError):
        TwoQubitChannel(tuple(np.eye(4) / np.sqrt(17) for _ in range(17)))


def test_channel_json_round_trip():
    ch = TwoQubitChannel(tuple(random_channel_kraus(2, np.random.default_rng(1))))
    ch2 = TwoQubitChannel.from_dict(ch.to_dict())
    assert all(np.allclose(a, b) for a, b in zip(ch.kraus, ch2.kraus))


def test_dilated_noisy_circuit_reduces_to_channel_composition():
    rng = np.random.default_rng(5)
    n = 3
    layers = [
        [((0, 1), TwoQubitChannel(tuple(random_channel_kraus(2, rng))))],
        [((1, 2), TwoQubitChannel(tuple(random_channel_kraus(3, rng))))],
    ]
    c, anc = dilate_noisy_circuit(n, layers)
    assert anc == [3, 4, 5] and c.n == 6 and validate_circuit(c).ok
    psi = apply_dense(c).reshape(2**n, 2 ** len(anc))
    reduced = psi @ psi.conj().T

    rho = np.zeros((8, 8), dtype=complex)
    rho[0, 0] = 1
    for layer in layers:
        for (a, b), ch in layer:
            # embed the channel on adjacent qubits (a, a+1) of the 3-qubit register
            ks = [np.kron(k, np.eye(2)) if a == 0 else np.kron(np.eye(2), k) for k in ch.kraus]
            rho = sum(k @ rho @ k.conj().T for k in ks)
    assert trace_distance(reduced, rho) < 1e-10


def test_embed_single_positions():
    assert np.allclose(embed_single(X, 0), np.kron(X, np.eye(2)))
    assert np.allclose(embed_single(H, 1), np.kron(np.eye(2), H))
