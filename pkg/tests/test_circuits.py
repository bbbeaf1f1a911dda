import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stabcert.circuits import (
    CNOT,
    XX,
    Circuit,
    CircuitError,
    CountTable,
    H,
    NoiseModel,
    ZRot,
    apply_circuit,
    apply_confusion,
    apply_noise,
    bias_confusion,
    builtin_circuit,
    correct_readout,
    counts_from_json,
    counts_to_json,
    exact_count_table,
    ghz_circuit_cnot,
    ghz_circuit_ion,
    outcome_distribution,
    sample_shots,
    xx_matrix,
)
from stabcert.estimation import MeasurementSetting
from stabcert.pauli import parse_pauli, to_dense

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]]),
    "Z": np.diag([1.0 + 0j, -1.0]),
}


def ghz(n):
    v = np.zeros(1 << n, dtype=complex)
    v[0] = v[-1] = 1 / math.sqrt(2)
    return v


def setting(bases, sid="s"):
    return MeasurementSetting(sid, bases, ())


def kraus_depolarize(rho, p, n):
    # textbook Kraus form, independent of the tensor-reshape implementation
    for q in range(n):
        out = (1 - 3 * p / 4) * rho
        for name in "XYZ":
            K = np.ones((1, 1))
            for r in range(n):
                K = np.kron(K, PAULI[name] if r == q else PAULI["I"])
            out = out + p / 4 * K @ rho @ K.conj().T
        rho = out
    return rho


def test_hadamard_on_zero():
    np.testing.assert_allclose(apply_circuit(Circuit(1, (H(0),))), [1 / math.sqrt(2)] * 2, atol=1e-15)


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
def test_cnot_ghz(n):
    psi = apply_circuit(ghz_circuit_cnot(n))
    assert abs(abs(np.vdot(ghz(n), psi)) ** 2 - 1) <= 1e-12


def test_cnot_ghz_gate_order():
    c = ghz_circuit_cnot(3)
    assert [(g.name, g.qubits) for g in c.gates] == [("H", (2,)), ("CNOT", (2, 1)), ("CNOT", (2, 0))]


def test_xx_on_00():
    psi = apply_circuit(Circuit(2, (XX(0, 1, math.pi / 4),)))
    np.testing.assert_allclose(psi, np.array([1, 0, 0, -1j]) / math.sqrt(2), atol=1e-15)


@given(st.floats(-10, 10, allow_nan=False))
def test_xx_unitary(chi):
    U = xx_matrix(chi)
    np.testing.assert_allclose(U.conj().T @ U, np.eye(4), atol=1e-12)


def test_xx_continuity_at_zero():
    np.testing.assert_allclose(xx_matrix(1e-8), np.eye(4), atol=1e-7)


def test_xx_range_enforced():
    with pytest.raises(CircuitError):
        Circuit(2, (XX(0, 1, 0.0),))
    with pytest.raises(CircuitError):
        Circuit(2, (XX(0, 1, 1.0),))
    with pytest.raises(CircuitError):
        Circuit(2, (CNOT(1, 1),))
    with pytest.raises(CircuitError):
        Circuit(2, (H(2),))


def test_ion_circuit():
    c = ghz_circuit_ion()
    # seven applications: two XX, two Z phase advances, three Hadamards
    assert len(c.gates) == 7
    psi = apply_circuit(c)
    for label in ("XXX", "ZZI", "IZZ"):
        assert abs(np.vdot(psi, to_dense(parse_pauli(label)) @ psi) - 1) <= 1e-9
    assert abs(abs(np.vdot(ghz(3), psi)) ** 2 - 1) <= 1e-9


def test_ion_circuit_opposite_phase_sign_fails():
    # the other sign choice for the phase advance does not give GHZ_3
    gates = tuple(ZRot(g.qubits[0], -g.param) if g.name == "ZRot" else g for g in ghz_circuit_ion().gates)
    psi = apply_circuit(Circuit(3, gates))
    assert np.vdot(psi, to_dense(parse_pauli("ZZI")) @ psi).real == pytest.approx(-1)


def test_builtin_names():
    assert builtin_circuit("ghz-cnot-4").n == 4
    assert builtin_circuit("ghz-ion-3") == ghz_circuit_ion()
    with pytest.raises(CircuitError):
        builtin_circuit("bell")


def random_circuit(n, rng, depth=12):
    gates = []
    for _ in range(depth):
        kind = rng.integers(4) if n > 1 else rng.integers(2)
        q = int(rng.integers(n))
        if kind == 0:
            gates.append(H(q))
        elif kind == 1:
            gates.append(ZRot(q, float(rng.uniform(-4, 4))))
        else:
            t = int((q + 1 + rng.integers(n - 1)) % n)
            gates.append(CNOT(q, t) if kind == 2 else XX(q, t, float(rng.uniform(0.01, math.pi / 4))))
    return Circuit(n, tuple(gates))


def dense_unitary(c):
    # full Kronecker construction for every gate, with basis permutation for 2-qubit gates
    dim = 1 << c.n
    U = np.eye(dim, dtype=complex)
    for g in c.gates:
        M = g.matrix()
        G = np.zeros((dim, dim), dtype=complex)
        for col in range(dim):
            bits = [(col >> (c.n - 1 - q)) & 1 for q in range(c.n)]
            sub_in = 0
            for q in g.qubits:
                sub_in = 2 * sub_in + bits[q]
            for sub_out in range(1 << len(g.qubits)):
                out = list(bits)
                for pos, q in enumerate(g.qubits):
                    out[q] = (sub_out >> (len(g.qubits) - 1 - pos)) & 1
                row = int("".join(map(str, out)), 2)
                G[row, col] += M[sub_out, sub_in]
        U = G @ U
    return U


@settings(max_examples=30)
@given(st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_random_circuits_norm_and_dense_agreement(n, seed):
    c = random_circuit(n, np.random.default_rng(seed))
    psi = apply_circuit(c)
    assert abs(np.linalg.norm(psi) - 1) <= 1e-12
    if n <= 4:
        np.testing.assert_allclose(psi, dense_unitary(c)[:, 0], atol=1e-12)


def test_noise_examples():
    psi = ghz(2)
    np.testing.assert_array_equal(apply_noise(psi, NoiseModel()), np.outer(psi, psi.conj()))
    np.testing.assert_allclose(apply_noise(np.array([1, 0]), NoiseModel(1.0)), np.eye(2) / 2, atol=1e-15)


@pytest.mark.parametrize("p", [0.05, 0.3])
def test_depolarizing_matches_kraus(p):
    rho = np.outer(ghz(3), ghz(3).conj())
    np.testing.assert_allclose(apply_noise(ghz(3), NoiseModel(p)), kraus_depolarize(rho, p, 3), atol=1e-14)


def test_depolarized_ghz_zz_regression():
    rho = apply_noise(ghz(3), NoiseModel(0.05))
    zz = np.trace(rho @ to_dense(parse_pauli("ZZI"))).real
    assert zz == pytest.approx(0.9025, abs=1e-12)
    xxx = np.trace(rho @ to_dense(parse_pauli("XXX"))).real
    assert xxx == pytest.approx(0.857375, abs=1e-12)


def test_sampling_examples():
    t = sample_shots(np.array([1, 0]), setting("Z"), 100, seed=1)
    assert t.counts == {"0": 100}
    z = sample_shots(ghz(3), setting("ZZZ"), 10_000, seed=3)
    assert set(z.counts) == {"000", "111"}
    assert abs(z.counts["000"] - 5000) < 300
    x = sample_shots(ghz(3), setting("XXX"), 10_000, seed=3)
    assert all(s.count("1") % 2 == 0 for s in x.counts)
    # dense oracle: exactly the four even strings at 1/4 each
    probs = outcome_distribution(ghz(3), "XXX")
    np.testing.assert_allclose(probs, [0.25 if bin(i).count("1") % 2 == 0 else 0 for i in range(8)], atol=1e-15)


def test_y_basis_rotation():
    # |+i> measured in Y is always outcome 0
    plus_i = np.array([1, 1j]) / math.sqrt(2)
    np.testing.assert_allclose(outcome_distribution(plus_i, "Y"), [1, 0], atol=1e-15)


def test_density_and_vector_distributions_agree():
    psi = apply_circuit(random_circuit(3, np.random.default_rng(5)))
    for bases in ("XYZ", "YYX", "ZZZ"):
        np.testing.assert_allclose(
            outcome_distribution(psi, bases), outcome_distribution(np.outer(psi, psi.conj()), bases), atol=1e-13
        )


def test_sampling_deterministic_and_order_free():
    s0, s1 = setting("XXX", "s0"), setting("ZZZ", "s1")
    a = [sample_shots(ghz(3), s, 500, seed=9) for s in (s0, s1)]
    b = [sample_shots(ghz(3), s, 500, seed=9) for s in (s1, s0)][::-1]
    assert a == b
    assert sample_shots(ghz(3), s0, 500, seed=10) != a[0]


def test_sampling_convergence_1e6():
    t = sample_shots(ghz(3), setting("XXX"), 1_000_000, seed=2024)
    freq = t.vector() / t.shots
    tv = 0.5 * np.abs(freq - outcome_distribution(ghz(3), "XXX")).sum()
    assert tv < 5e-3


def test_sampling_rejects_zero_shots():
    with pytest.raises(ValueError):
        sample_shots(ghz(2), setting("ZZ"), 0, seed=0)


def test_readout_bias_flip_rate():
    t = sample_shots(np.array([1, 0]), setting("Z"), 200_000, seed=4, noise=NoiseModel(readout_bias_eta=0.02))
    assert t.counts["1"] / 200_000 == pytest.approx(0.02, abs=1.5e-3)


def test_correct_readout_examples():
    raw = CountTable("s", "Z", 100, {"0": 90, "1": 10})
    assert correct_readout(raw, [np.eye(2)]).counts == {"0": 90.0, "1": 10.0}
    fixed = correct_readout(raw, [[[0.9, 0.1], [0.1, 0.9]]])
    assert fixed.counts["0"] == pytest.approx(100, abs=1e-9)
    assert fixed.counts.get("1", 0.0) == pytest.approx(0, abs=1e-9)
    swapped = correct_readout(raw, [[[0, 1], [1, 0]]])
    assert swapped.counts == {"0": 10.0, "1": 90.0}
    with pytest.raises(np.linalg.LinAlgError):
        correct_readout(raw, [[[0.5, 0.5], [0.5, 0.5]]])


@settings(max_examples=30)
@given(st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_correction_inverts_confusion(n, seed):
    rng = np.random.default_rng(seed)
    dist = rng.dirichlet(np.ones(1 << n))
    mats = []
    for _ in range(n):
        a, b = rng.uniform(0, 0.2, 2)
        mats.append(np.array([[1 - a, b], [a, 1 - b]]))
    noisy = apply_confusion(dist, mats)
    table = CountTable("s", "Z" * n, 1, {format(i, f"0{n}b"): float(v) for i, v in enumerate(noisy)})
    np.testing.assert_allclose(correct_readout(table, mats).vector(), dist, atol=1e-9)


def test_confusion_validation():
    with pytest.raises(ValueError):
        NoiseModel(confusion=(np.array([[0.9, 0.2], [0.2, 0.9]]),))
    with pytest.raises(ValueError):
        NoiseModel(readout_bias_eta=0.5)
    np.testing.assert_allclose(bias_confusion(0.1).sum(axis=0), [1, 1])


def test_counts_json_roundtrip():
    tables = [exact_count_table(ghz(2), setting("XX", "s0"), 10.0), CountTable("s1", "ZZ", 4, {"00": 2, "11": 2})]
    text = counts_to_json(tables, 2, {"seed": 1})
    n, back, meta = counts_from_json(text)
    assert n == 2 and meta == {"seed": 1} and back == tables
    assert '"format_version": 1' in text
    with pytest.raises(ValueError):
        counts_from_json('{"n": 2, "settings": [{"id": "a", "bases": "ZZ", "shots": 1, "counts": {"0": 1}}]}')
