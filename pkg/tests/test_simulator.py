import numpy as np
import pytest

from oracles import hamiltonian_matrix, two_local_state
from stagedvqe import fixtures
from stagedvqe.fermion import jordan_wigner
from stagedvqe.pauli import QubitHamiltonian
from stagedvqe.simulator import (
    AnsatzKind,
    StateVector,
    exact_ground_energy,
    expectation,
    number_operator,
    parameter_shift_gradient,
    prepare_state,
    sampled_expectation,
    two_local,
    uccsd,
)


def random_hamiltonian(rng, n, k=20):
    chars = np.array(list("IXYZ"))
    terms = [("".join(rng.choice(chars, n)), float(rng.normal())) for _ in range(k)]
    return QubitHamiltonian.from_labels(terms), terms


def random_state(rng, n):
    v = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
    return StateVector(n, v / np.linalg.norm(v))


@pytest.fixture(scope="module")
def h2q():
    return jordan_wigner(fixtures.load("H2")[0])


# --------------------------------------------------------------------------- ansatz

def test_two_local_parameter_count():
    for n in (1, 2, 4, 6):
        for reps in (1, 3):
            for pattern in ("linear", "full"):
                assert two_local(n, reps, pattern).num_parameters == n * (reps + 1)


def test_two_local_zero_parameters_gives_all_zero_state():
    a = two_local(4)
    psi = prepare_state(a, np.zeros(a.num_parameters)).amplitudes
    assert psi[0] == 1 and np.count_nonzero(psi) == 1


def test_single_ry_pi_flips_qubit():
    psi = prepare_state(two_local(1, 0), [np.pi]).amplitudes
    np.testing.assert_allclose(np.abs(psi), [0, 1], atol=1e-15)


@pytest.mark.parametrize("n", range(1, 7))
@pytest.mark.parametrize("pattern", ["linear", "full"])
def test_two_local_matches_dense_circuit(n, pattern):
    rng = np.random.default_rng(n)
    a = two_local(n, 3, pattern)
    theta = rng.uniform(-np.pi, np.pi, a.num_parameters)
    if pattern == "linear":
        pairs = [(q, q + 1) for q in range(n - 1)]
    else:
        pairs = [(p, q) for p in range(n) for q in range(p + 1, n)]
    psi = prepare_state(a, theta).amplitudes
    assert abs(np.linalg.norm(psi) - 1) < 1e-10
    np.testing.assert_allclose(psi, two_local_state(theta, n, 3, pairs), atol=1e-12)


def test_parameter_length_checked():
    with pytest.raises(ValueError):
        prepare_state(two_local(2), np.zeros(3))


def test_unnormalized_state_rejected():
    with pytest.raises(ValueError):
        StateVector(1, [1.0, 1.0])


def test_uccsd_structure():
    a = uccsd(4, 2)
    assert a.kind is AnsatzKind.UCCSD
    # H2: two spin-conserving singles and one double
    assert a.num_parameters == 3
    assert prepare_state(a, np.zeros(3)).amplitudes[0b0011] == 1


@pytest.mark.parametrize("modes, electrons", [(4, 2), (6, 2), (8, 4)])
def test_uccsd_conserves_particle_number(modes, electrons):
    rng = np.random.default_rng(modes)
    a = uccsd(modes, electrons)
    state = prepare_state(a, rng.uniform(-np.pi, np.pi, a.num_parameters))
    assert abs(np.linalg.norm(state.amplitudes) - 1) < 1e-10
    assert expectation(state, number_operator(modes)) == pytest.approx(electrons, abs=1e-10)


def test_uccsd_reaches_h2_ground_state(h2q):
    from scipy.optimize import minimize

    a = uccsd(4, 2)
    result = minimize(lambda t: expectation(prepare_state(a, t), h2q), np.zeros(3), method="BFGS")
    assert result.fun == pytest.approx(exact_ground_energy(h2q), abs=1e-8)


# --------------------------------------------------------------------------- expectation

def test_zero_state_z_expectation():
    assert expectation(StateVector.basis_state(1), QubitHamiltonian.from_labels({"Z": 1.0})) == 1.0


def test_empty_occupation_number_expectation():
    h = QubitHamiltonian.from_labels({"II": 0.5, "ZI": -0.5})
    assert expectation(StateVector.basis_state(2), h) == 0.0


def test_expectation_matches_dense_oracle():
    rng = np.random.default_rng(0)
    for _ in range(25):
        n = int(rng.integers(1, 7))
        h, terms = random_hamiltonian(rng, n)
        state = random_state(rng, n)
        psi = state.amplitudes
        dense = np.vdot(psi, hamiltonian_matrix(terms, n) @ psi).real
        assert abs(expectation(state, h) - dense) < 1e-10


def test_expectation_is_linear_and_bounded():
    rng = np.random.default_rng(1)
    for n in range(1, 9):
        h, _ = random_hamiltonian(rng, n)
        g, _ = random_hamiltonian(rng, n)
        s = random_state(rng, n)
        assert abs(expectation(s, h + g) - expectation(s, h) - expectation(s, g)) < 1e-10
        spectrum = np.linalg.eigvalsh(h.to_matrix())
        assert spectrum[0] - 1e-10 <= expectation(s, h) <= spectrum[-1] + 1e-10


def test_qubit_count_mismatch():
    with pytest.raises(ValueError):
        expectation(StateVector.basis_state(2), QubitHamiltonian.from_labels({"Z": 1.0}))


def test_sampled_expectation_converges(h2q):
    rng = np.random.default_rng(3)
    a = two_local(4)
    state = prepare_state(a, rng.uniform(-np.pi, np.pi, a.num_parameters))
    exact = expectation(state, h2q)
    estimates = [sampled_expectation(state, h2q, 4000, rng) for _ in range(20)]
    assert abs(np.mean(estimates) - exact) < 0.01
    assert sampled_expectation(state, h2q, 10, np.random.default_rng(0)) == \
        sampled_expectation(state, h2q, 10, np.random.default_rng(0))


# --------------------------------------------------------------------------- exact solver

def test_ground_energy_single_z():
    assert exact_ground_energy(QubitHamiltonian.from_labels({"Z": 1.0})) == -1.0


def test_h2_ground_energy(h2q):
    assert exact_ground_energy(h2q) == pytest.approx(-1.1373060357534, abs=1e-9)


def test_constant_shift_moves_ground_energy(h2q):
    shifted = h2q + QubitHamiltonian.from_labels({"IIII": 0.375})
    assert exact_ground_energy(shifted) - exact_ground_energy(h2q) == pytest.approx(0.375, abs=1e-12)


def test_sparse_path_matches_dense():
    rng = np.random.default_rng(5)
    h, _ = random_hamiltonian(rng, 11, 40)
    dense = np.linalg.eigvalsh(h.to_sparse().toarray())[0]
    assert exact_ground_energy(h) == pytest.approx(dense, abs=1e-9)


def test_qubit_ceiling():
    with pytest.raises(ValueError):
        exact_ground_energy(QubitHamiltonian.from_labels({"Z" * 17: 1.0}))


# --------------------------------------------------------------------------- gradients

@pytest.mark.parametrize("ansatz", [two_local(4), uccsd(4, 2), uccsd(6, 2), uccsd(8, 4)], ids=["two_local", "uccsd4", "uccsd6", "uccsd8"])
def test_parameter_shift_matches_finite_difference(ansatz):
    rng = np.random.default_rng(6)
    h, _ = random_hamiltonian(rng, ansatz.num_qubits, 30)
    theta = rng.uniform(-np.pi, np.pi, ansatz.num_parameters)
    grad = parameter_shift_gradient(ansatz, theta, h)
    step = 1e-4
    for k in range(theta.size):
        e = np.zeros_like(theta)
        e[k] = step
        fd = (expectation(prepare_state(ansatz, theta + e), h)
              - expectation(prepare_state(ansatz, theta - e), h)) / (2 * step)
        assert abs(fd - grad[k]) < 1e-6
