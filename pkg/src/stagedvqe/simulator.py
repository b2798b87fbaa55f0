"""Dense statevector simulation of the two ansatz families and exact expectation values.

Basis index bit ``q`` holds qubit ``q`` (the convention of :mod:`stagedvqe.pauli`).
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.sparse.linalg import LinearOperator, eigsh

from .pauli import PauliString, QubitHamiltonian, qubitwise_commuting_groups

MAX_QUBITS = 16
NORM_TOLERANCE = 1e-10


class AnsatzKind(str, enum.Enum):
    TWO_LOCAL = "two_local"
    UCCSD = "uccsd"


@dataclass(frozen=True)
class Excitation:
    """``a+_{targets} a_{sources}`` minus its adjoint; singles have one index each."""

    sources: tuple[int, ...]
    targets: tuple[int, ...]

    def __str__(self) -> str:
        return f"{self.sources}->{self.targets}"


@dataclass(frozen=True, eq=False)
class Ansatz:
    kind: AnsatzKind
    num_qubits: int
    reps: int = 0
    excitations: tuple[Excitation, ...] = ()
    num_electrons: int = 0
    entanglement: str = "linear"

    @property
    def num_parameters(self) -> int:
        if self.kind is AnsatzKind.TWO_LOCAL:
            return self.num_qubits * (self.reps + 1)
        return len(self.excitations)

    @property
    def hartree_fock_index(self) -> int:
        return (1 << self.num_electrons) - 1

    def describe(self) -> dict:
        out = {"kind": self.kind.value, "num_qubits": self.num_qubits,
               "num_parameters": self.num_parameters}
        if self.kind is AnsatzKind.TWO_LOCAL:
            out.update(reps=self.reps, rotation="ry", entangler="cz", entanglement=self.entanglement)
        else:
            out.update(num_electrons=self.num_electrons, trotter_steps=1,
                       ordering="singles then doubles, ascending")
        return out

    @cached_property
    def _cz_signs(self) -> np.ndarray:
        basis = np.arange(1 << self.num_qubits)
        bits = (basis[:, None] >> np.arange(self.num_qubits)) & 1
        pairs = _entangling_pairs(self.num_qubits, self.entanglement)
        parity = sum((bits[:, a] & bits[:, b] for a, b in pairs), np.zeros_like(basis))
        return 1.0 - 2.0 * (parity & 1)

    @cached_property
    def _excitation_maps(self) -> list[tuple[np.ndarray, np.ndarray, np.ndarray]]:
        return [_excitation_pairs(ex, self.num_qubits) for ex in self.excitations]


def _entangling_pairs(n: int, pattern: str) -> list[tuple[int, int]]:
    if pattern == "linear":
        return [(q, q + 1) for q in range(n - 1)]
    if pattern == "full":
        return list(itertools.combinations(range(n), 2))
    raise ValueError(f"unknown entanglement pattern {pattern!r}")


def two_local(num_qubits: int, reps: int = 3, entanglement: str = "linear") -> Ansatz:
    """Ry rotation layers interleaved with CZ entanglers, ending on a rotation layer."""
    if num_qubits < 1 or reps < 0:
        raise ValueError("num_qubits must be positive and reps non-negative")
    _entangling_pairs(num_qubits, entanglement)
    return Ansatz(AnsatzKind.TWO_LOCAL, num_qubits, reps=reps, entanglement=entanglement)


def uccsd(num_modes: int, num_electrons: int) -> Ansatz:
    """Spin-conserving singles and doubles from the Hartree-Fock reference.

    Spin-orbitals are interleaved (even = alpha) and the lowest ``num_electrons`` are
    occupied.  Generators are ordered singles first, then doubles, lexicographically.
    """
    if not 0 < num_electrons < num_modes:
        raise ValueError(f"need 0 < num_electrons < num_modes, got {num_electrons}, {num_modes}")
    occupied = range(num_electrons)
    virtual = range(num_electrons, num_modes)
    singles = [
        Excitation((i,), (a,)) for i in occupied for a in virtual if i % 2 == a % 2
    ]
    doubles = [
        Excitation((i, j), (a, b))
        for i, j in itertools.combinations(occupied, 2)
        for a, b in itertools.combinations(virtual, 2)
        if (i % 2) + (j % 2) == (a % 2) + (b % 2)
    ]
    return Ansatz(AnsatzKind.UCCSD, num_modes, excitations=tuple(singles + doubles),
                  num_electrons=num_electrons)


def _excitation_pairs(ex: Excitation, n: int):
    """Basis pairs ``(src, dst, sign)`` with ``T|src> = sign |dst>``."""
    basis = np.arange(1 << n, dtype=np.int64)
    state = basis.copy()
    sign = np.ones(basis.size)
    alive = np.ones(basis.size, dtype=bool)
    # Rightmost operator acts first: annihilate sources (last first), then create targets.
    ops = [(p, True) for p in ex.targets] + [(p, False) for p in ex.sources]
    for mode, dagger in reversed(ops):
        bit = 1 << mode
        occupied = (state & bit) != 0
        alive &= occupied != dagger
        sign *= 1 - 2 * (np.bitwise_count(state & (bit - 1)) & 1).astype(float)
        state = state ^ bit
    return basis[alive], state[alive], sign[alive]


@dataclass(frozen=True, eq=False)
class StateVector:
    num_qubits: int
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex)
        if amps.shape != (1 << self.num_qubits,):
            raise ValueError(f"expected {1 << self.num_qubits} amplitudes, got {amps.shape}")
        if abs(np.linalg.norm(amps) - 1.0) > NORM_TOLERANCE:
            raise ValueError("state is not normalized")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def basis_state(cls, num_qubits: int, index: int = 0) -> StateVector:
        amps = np.zeros(1 << num_qubits, dtype=complex)
        amps[index] = 1.0
        return cls(num_qubits, amps)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def to_text(self) -> str:
        return "".join(f"{i} {a.real:.17g} {a.imag:.17g}\n" for i, a in enumerate(self.amplitudes))


def _apply_ry(psi: np.ndarray, qubit: int, theta: float, n: int) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    view = psi.reshape(1 << (n - 1 - qubit), 2, 1 << qubit)
    zero, one = view[:, 0, :], view[:, 1, :]
    return np.stack((c * zero - s * one, s * zero + c * one), axis=1).reshape(-1)


def prepare_state(ansatz: Ansatz, parameters) -> StateVector:
    """Exact ``U(theta)|0...0>`` (UCCSD starts from the Hartree-Fock bitstring)."""
    theta = np.asarray(parameters, dtype=float)
    if theta.shape != (ansatz.num_parameters,):
        raise ValueError(
            f"expected {ansatz.num_parameters} parameters, got shape {theta.shape}"
        )
    n = ansatz.num_qubits
    psi = np.zeros(1 << n)
    if ansatz.kind is AnsatzKind.TWO_LOCAL:
        psi[0] = 1.0
        layers = theta.reshape(ansatz.reps + 1, n)
        for rep, layer in enumerate(layers):
            for q in range(n):
                psi = _apply_ry(psi, q, layer[q], n)
            if rep < ansatz.reps:
                psi = psi * ansatz._cz_signs
    else:
        psi[ansatz.hartree_fock_index] = 1.0
        for t, (src, dst, sign) in zip(theta, ansatz._excitation_maps):
            c, s = np.cos(t), np.sin(t)
            a, b = psi[src], psi[dst]
            psi = psi.copy()
            psi[dst] = c * b + s * sign * a
            psi[src] = c * a - s * sign * b
    return StateVector(n, psi)


def expectation(state: StateVector, h: QubitHamiltonian) -> float:
    """Exact ``<psi|H|psi>`` in Hartree."""
    if state.num_qubits != h.num_qubits:
        raise ValueError(f"qubit-count mismatch: state {state.num_qubits}, H {h.num_qubits}")
    psi = state.amplitudes
    value = np.vdot(psi, h.apply(psi))
    if abs(value.imag) > NORM_TOLERANCE:
        raise ValueError(f"expectation has imaginary part {value.imag:.3g}")
    return float(value.real)


def _measurement_rotation(psi: np.ndarray, basis: dict[int, str], n: int) -> np.ndarray:
    h = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    sdg_h = h @ np.diag([1, -1j])
    for qubit, char in basis.items():
        gate = h if char == "X" else sdg_h
        view = psi.reshape(1 << (n - 1 - qubit), 2, 1 << qubit)
        psi = np.einsum("ab,ibj->iaj", gate, view).reshape(-1)
    return psi


def sampled_expectation(state: StateVector, h: QubitHamiltonian, shots: int, rng) -> float:
    """Shot-noise estimate: one multinomial sample of ``shots`` per qubit-wise commuting group."""
    if state.num_qubits != h.num_qubits:
        raise ValueError("qubit-count mismatch")
    n = h.num_qubits
    basis = np.arange(1 << n)
    total = h.constant
    for group in qubitwise_commuting_groups(h):
        rotation = {}
        for string, _ in group:
            for q in range(n):
                if string[q] in "XY":
                    rotation[q] = string[q]
        probs = np.abs(_measurement_rotation(state.amplitudes.copy(), rotation, n)) ** 2
        counts = rng.multinomial(shots, probs / probs.sum())
        for string, coeff in group:
            parity = np.bitwise_count(basis & string.support) & 1
            total += coeff * float(np.dot(counts, 1 - 2 * parity.astype(float))) / shots
    return total


def exact_ground_energy(h: QubitHamiltonian, max_qubits: int = MAX_QUBITS) -> float:
    """Smallest eigenvalue; dense below 11 qubits, Lanczos above."""
    n = h.num_qubits
    if n > max_qubits:
        raise ValueError(f"{n} qubits exceeds the exact-diagonalization budget of {max_qubits}")
    if n <= 10:
        return float(np.linalg.eigvalsh(h.to_matrix())[0])
    dim = 1 << n
    op = LinearOperator((dim, dim), matvec=h.apply, dtype=complex)
    value = eigsh(op, k=1, which="SA", tol=1e-12, return_eigenvectors=False)
    return float(value[0])


def parameter_shift_gradient(ansatz: Ansatz, parameters, h: QubitHamiltonian) -> np.ndarray:
    """Analytic gradient by shift rules.

    Ry gates use the two-term rule at pi/2.  An excitation rotation acts only on its
    basis-state pairs and leaves the rest of the space alone, so the energy mixes
    frequencies 1 and 2 in theta; the four-term rule
    ``D(pi/4) - (sqrt2 - 1)/2 * D(pi/2)``, with ``D(s) = f(t+s) - f(t-s)``, is exact.
    """
    theta = np.asarray(parameters, dtype=float)

    def difference(n: int, shift: float) -> float:
        step = np.zeros_like(theta)
        step[n] = shift
        plus = expectation(prepare_state(ansatz, theta + step), h)
        minus = expectation(prepare_state(ansatz, theta - step), h)
        return plus - minus

    grad = np.zeros_like(theta)
    for n in range(theta.size):
        if ansatz.kind is AnsatzKind.TWO_LOCAL:
            grad[n] = 0.5 * difference(n, np.pi / 2)
        else:
            grad[n] = difference(n, np.pi / 4) - (np.sqrt(2) - 1) / 2 * difference(n, np.pi / 2)
    return grad


def number_operator(num_modes: int) -> QubitHamiltonian:
    """Total particle number ``sum_p (I - Z_p) / 2``."""
    terms = [(PauliString.identity(num_modes), num_modes / 2)]
    terms += [(PauliString.single(num_modes, p, "Z"), -0.5) for p in range(num_modes)]
    return QubitHamiltonian(num_modes, terms)
