"""Pauli strings and real-weighted Pauli sums.

A string on ``N`` qubits is stored as two bitmasks ``(x, z)``; qubit ``q``
carries ``I`` (0, 0), ``X`` (1, 0), ``Z`` (0, 1) or ``Y`` (1, 1).  Text labels
put qubit 0 first, so ``"ZIIX"`` is ``Z`` on qubit 0 and ``X`` on qubit 3.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Iterator, Mapping

import numpy as np
from scipy import sparse

#: Absolute magnitude below which merged coefficients are discarded.
DROP_TOLERANCE = 1e-12

_PHASES = (1, 1j, -1, -1j)
_CHAR_BITS = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}
_BITS_CHAR = {bits: char for char, bits in _CHAR_BITS.items()}


def _popcount(value: int) -> int:
    return bin(value).count("1")


@dataclass(frozen=True, order=True)
class PauliString:
    """Tensor product of single-qubit Paulis, hashable and immutable."""

    num_qubits: int
    x: int = 0
    z: int = 0

    def __post_init__(self):
        if self.num_qubits < 1:
            raise ValueError(f"num_qubits must be positive, got {self.num_qubits}")
        limit = 1 << self.num_qubits
        if not (0 <= self.x < limit and 0 <= self.z < limit):
            raise ValueError("bitmask exceeds num_qubits")

    @classmethod
    def from_label(cls, label: str) -> PauliString:
        x = z = 0
        for q, char in enumerate(label.upper()):
            try:
                bx, bz = _CHAR_BITS[char]
            except KeyError:
                raise ValueError(f"invalid Pauli character {char!r} in {label!r}") from None
            x |= bx << q
            z |= bz << q
        return cls(len(label), x, z)

    @classmethod
    def identity(cls, num_qubits: int) -> PauliString:
        return cls(num_qubits)

    @classmethod
    def single(cls, num_qubits: int, qubit: int, char: str) -> PauliString:
        bx, bz = _CHAR_BITS[char.upper()]
        return cls(num_qubits, bx << qubit, bz << qubit)

    @property
    def label(self) -> str:
        return "".join(
            _BITS_CHAR[(self.x >> q) & 1, (self.z >> q) & 1] for q in range(self.num_qubits)
        )

    def __str__(self) -> str:
        return self.label

    def __len__(self) -> int:
        return self.num_qubits

    def __getitem__(self, qubit: int) -> str:
        if not 0 <= qubit < self.num_qubits:
            raise IndexError(qubit)
        return _BITS_CHAR[(self.x >> qubit) & 1, (self.z >> qubit) & 1]

    @property
    def is_identity(self) -> bool:
        return self.x == 0 and self.z == 0

    @property
    def is_diagonal(self) -> bool:
        """True when the string contains only I and Z factors."""
        return self.x == 0

    @property
    def support(self) -> int:
        return self.x | self.z

    @property
    def weight(self) -> int:
        return _popcount(self.support)

    def qubitwise_commutes(self, other: PauliString) -> bool:
        """Factor-wise commutation: on every shared qubit the factors are equal."""
        overlap = self.support & other.support
        return ((self.x ^ other.x) | (self.z ^ other.z)) & overlap == 0

    def commutes(self, other: PauliString) -> bool:
        return (_popcount(self.x & other.z) + _popcount(self.z & other.x)) % 2 == 0

    def to_matrix(self) -> np.ndarray:
        """Dense matrix with qubit ``q`` on bit ``q`` of the basis index."""
        dim = 1 << self.num_qubits
        rows = np.arange(dim)
        data = self._column_phases(rows)
        out = np.zeros((dim, dim), dtype=complex)
        out[rows ^ self.x, rows] = data
        return out

    def _column_phases(self, basis: np.ndarray) -> np.ndarray:
        # P|b> = i^{|x&z|} (-1)^{|z&b|} |b ^ x>
        parity = np.bitwise_count(basis & self.z) & 1
        return _PHASES[_popcount(self.x & self.z) % 4] * (1 - 2 * parity.astype(float))


def multiply(a: PauliString, b: PauliString) -> tuple[complex, PauliString]:
    """Product ``a @ b`` returned as ``(phase, string)`` with phase in {1, i, -1, -i}."""
    if a.num_qubits != b.num_qubits:
        raise ValueError(f"qubit-count mismatch: {a.num_qubits} != {b.num_qubits}")
    x, z = a.x ^ b.x, a.z ^ b.z
    # Y = i X Z, and Z^z1 X^x2 = (-1)^{|z1 & x2|} X^x2 Z^z1.
    power = (
        _popcount(a.x & a.z) + _popcount(b.x & b.z) + 2 * _popcount(a.z & b.x) - _popcount(x & z)
    )
    return _PHASES[power % 4], PauliString(a.num_qubits, x, z)


class QubitHamiltonian(Mapping):
    """Immutable real-weighted sum of Pauli strings, always simplified.

    Behaves as a read-only mapping from :class:`PauliString` to coefficient.
    """

    def __init__(self, num_qubits: int, terms: Iterable[tuple[PauliString, float]] | Mapping = ()):
        if num_qubits < 1:
            raise ValueError(f"num_qubits must be positive, got {num_qubits}")
        if isinstance(terms, Mapping):
            terms = terms.items()
        merged: dict[PauliString, float] = {}
        for string, coeff in terms:
            if isinstance(string, str):
                string = PauliString.from_label(string)
            if string.num_qubits != num_qubits:
                raise ValueError(
                    f"term {string} has {string.num_qubits} qubits, expected {num_qubits}"
                )
            coeff = float(coeff)
            if not math.isfinite(coeff):
                raise ValueError(f"non-finite coefficient for {string}")
            merged[string] = merged.get(string, 0.0) + coeff
        self._num_qubits = num_qubits
        self._terms = {s: c for s, c in merged.items() if abs(c) >= DROP_TOLERANCE}

    @classmethod
    def from_labels(cls, terms: Mapping[str, float] | Iterable[tuple[str, float]]) -> QubitHamiltonian:
        items = list(terms.items() if isinstance(terms, Mapping) else terms)
        if not items:
            raise ValueError("cannot infer num_qubits from an empty term list")
        strings = [(PauliString.from_label(label), c) for label, c in items]
        return cls(strings[0][0].num_qubits, strings)

    @property
    def num_qubits(self) -> int:
        return self._num_qubits

    def __getitem__(self, key: PauliString | str) -> float:
        if isinstance(key, str):
            key = PauliString.from_label(key)
        return self._terms[key]

    def __iter__(self) -> Iterator[PauliString]:
        return iter(self._terms)

    def __len__(self) -> int:
        return len(self._terms)

    def __repr__(self) -> str:
        return f"QubitHamiltonian(num_qubits={self._num_qubits}, terms={len(self)})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, QubitHamiltonian):
            return NotImplemented
        return self._num_qubits == other._num_qubits and self._terms == other._terms

    __hash__ = None

    @property
    def constant(self) -> float:
        return self._terms.get(PauliString.identity(self._num_qubits), 0.0)

    @property
    def num_measurable_terms(self) -> int:
        """Term count excluding the identity string."""
        return len(self) - (PauliString.identity(self._num_qubits) in self._terms)

    def sorted_terms(self) -> list[tuple[PauliString, float]]:
        """Terms by descending |coefficient|, ties broken by label."""
        return sorted(self._terms.items(), key=lambda t: (-abs(t[1]), t[0].label))

    def __add__(self, other: QubitHamiltonian) -> QubitHamiltonian:
        return add(self, other)

    def __mul__(self, scalar: float) -> QubitHamiltonian:
        return QubitHamiltonian(self._num_qubits, ((s, scalar * c) for s, c in self._terms.items()))

    __rmul__ = __mul__

    def filter(self, predicate) -> QubitHamiltonian:
        return QubitHamiltonian(self._num_qubits, ((s, c) for s, c in self._terms.items() if predicate(s, c)))

    def allclose(self, other: QubitHamiltonian, atol: float = 1e-12) -> bool:
        """Term-for-term equality within ``atol``."""
        if self._num_qubits != other.num_qubits:
            return False
        keys = set(self._terms) | set(other)
        return all(abs(self._terms.get(k, 0.0) - other._terms.get(k, 0.0)) < atol for k in keys)

    @cached_property
    def _xgroups(self) -> list[tuple[int, np.ndarray]]:
        # Terms sharing an X mask act as one permutation times a diagonal.
        basis = np.arange(1 << self._num_qubits, dtype=np.int64)
        diagonals: dict[int, np.ndarray] = {}
        for string, coeff in sorted(self._terms.items()):
            d = diagonals.setdefault(string.x, np.zeros(basis.size, dtype=complex))
            d += coeff * string._column_phases(basis)
        return sorted(diagonals.items())

    def apply(self, vector: np.ndarray) -> np.ndarray:
        """Matrix-free ``H @ vector``."""
        vector = np.asarray(vector)
        basis = np.arange(vector.size, dtype=np.int64)
        out = np.zeros(vector.size, dtype=complex)
        for x, diag in self._xgroups:
            out[basis ^ x] += diag * vector
        return out

    def to_sparse(self) -> sparse.csr_matrix:
        dim = 1 << self._num_qubits
        basis = np.arange(dim, dtype=np.int64)
        if not self._terms:
            return sparse.csr_matrix((dim, dim), dtype=complex)
        rows = np.concatenate([basis ^ x for x, _ in self._xgroups])
        cols = np.tile(basis, len(self._xgroups))
        data = np.concatenate([d for _, d in self._xgroups])
        return sparse.csr_matrix((data, (rows, cols)), shape=(dim, dim))

    def to_matrix(self) -> np.ndarray:
        return self.to_sparse().toarray()

    def to_text(self) -> str:
        """One ``<coefficient> <label>`` line per term, preceded by a qubit-count comment."""
        lines = [f"# qubits {self._num_qubits}"]
        lines += [f"{c:.17g} {s.label}" for s, c in self.sorted_terms()]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> QubitHamiltonian:
        num_qubits = None
        terms = []
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                fields = line[1:].split()
                if len(fields) == 2 and fields[0] == "qubits":
                    num_qubits = int(fields[1])
                continue
            try:
                coeff, label = line.split()
                terms.append((PauliString.from_label(label), float(coeff)))
            except ValueError as exc:
                raise ValueError(f"line {lineno}: cannot parse {raw!r}: {exc}") from None
        if num_qubits is None:
            if not terms:
                raise ValueError("empty Hamiltonian text without a '# qubits N' header")
            num_qubits = terms[0][0].num_qubits
        return cls(num_qubits, terms)


def add(h: QubitHamiltonian, g: QubitHamiltonian) -> QubitHamiltonian:
    """Coefficient-wise sum; merged coefficients below the drop tolerance vanish."""
    if h.num_qubits != g.num_qubits:
        raise ValueError(f"qubit-count mismatch: {h.num_qubits} != {g.num_qubits}")
    return QubitHamiltonian(h.num_qubits, [*h.items(), *g.items()])


def coefficient_histogram(h: QubitHamiltonian, bin_edges) -> list[tuple[float, float, int, float]]:
    """Bin non-identity terms by |coefficient|.

    Bin ``n`` covers ``[edges[n], edges[n+1])``; a leading bin ``[0, edges[0])`` and a
    trailing bin ``[edges[-1], inf)`` catch everything else.  Returns rows of
    ``(low, high, term_count, sum_of_abs_coefficients)``.
    """
    edges = [float(e) for e in bin_edges]
    if not edges:
        raise ValueError("bin_edges must not be empty")
    if any(e <= 0 for e in edges) or any(b <= a for a, b in zip(edges, edges[1:])):
        raise ValueError(f"bin_edges must be positive and strictly ascending, got {edges}")
    bounds = [0.0, *edges, math.inf]
    counts = [0] * (len(bounds) - 1)
    sums = [0.0] * (len(bounds) - 1)
    for string, coeff in h.items():
        if string.is_identity:
            continue
        n = int(np.searchsorted(edges, abs(coeff), side="right"))
        counts[n] += 1
        sums[n] += abs(coeff)
    return [(bounds[n], bounds[n + 1], counts[n], sums[n]) for n in range(len(counts))]


def qubitwise_commuting_groups(h: QubitHamiltonian) -> list[list[tuple[PauliString, float]]]:
    """Greedy first-fit partition into qubit-wise commuting groups.

    Terms are visited by descending |coefficient|; the identity string is left out.
    """
    groups: list[list[tuple[PauliString, float]]] = []
    # Each group keeps its merged basis (x, z) to test membership in O(1).
    bases: list[tuple[int, int]] = []
    for string, coeff in h.sorted_terms():
        if string.is_identity:
            continue
        for n, (gx, gz) in enumerate(bases):
            overlap = string.support & (gx | gz)
            if ((string.x ^ gx) | (string.z ^ gz)) & overlap == 0:
                groups[n].append((string, coeff))
                bases[n] = (gx | string.x, gz | string.z)
                break
        else:
            groups.append([(string, coeff)])
            bases.append((string.x, string.z))
    return groups
