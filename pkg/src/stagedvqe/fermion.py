"""Second-quantized molecular Hamiltonians, FCIDUMP I/O, operator classes and Jordan-Wigner.

Internal form::

    H = constant + sum_ij h_ij a+_i a_j + 1/2 sum_ijkl h_ijkl a+_i a+_j a_k a_l

over spin-orbitals ordered alpha/beta interleaved (spatial ``p`` -> ``2p``, ``2p+1``).
"""

from __future__ import annotations

import enum
import re
import warnings
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple, TextIO

import numpy as np

from .pauli import DROP_TOLERANCE, PauliString, QubitHamiltonian

SYMMETRY_TOLERANCE = 1e-10

# FCIDUMP values below this magnitude are dropped at parse time.
INTEGRAL_DROP_TOLERANCE = DROP_TOLERANCE


class FcidumpError(ValueError):
    """Malformed FCIDUMP input; message carries the line number when known."""


def _readonly(array) -> np.ndarray:
    array = np.array(array, dtype=float)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class FermionHamiltonian:
    num_modes: int
    constant: float = 0.0
    one_body: np.ndarray = None
    two_body: np.ndarray = None
    num_electrons: int | None = None

    def __post_init__(self):
        m = self.num_modes
        if m < 1:
            raise ValueError(f"num_modes must be positive, got {m}")
        one = np.zeros((m, m)) if self.one_body is None else self.one_body
        two = np.zeros((m,) * 4) if self.two_body is None else self.two_body
        one, two = _readonly(one), _readonly(two)
        if one.shape != (m, m) or two.shape != (m,) * 4:
            raise ValueError(f"tensor shapes {one.shape}, {two.shape} do not match {m} modes")
        if not (np.isfinite(one).all() and np.isfinite(two).all() and np.isfinite(self.constant)):
            raise ValueError("integrals must be finite")
        if m and np.abs(one - one.T).max() >= SYMMETRY_TOLERANCE:
            raise ValueError("one-body integrals are not symmetric")
        if m and np.abs(two - two.transpose(3, 2, 1, 0)).max() >= SYMMETRY_TOLERANCE:
            raise ValueError("two-body integrals violate h_ijkl = h_lkji")
        object.__setattr__(self, "one_body", one)
        object.__setattr__(self, "two_body", two)
        object.__setattr__(self, "constant", float(self.constant))

    @classmethod
    def from_spatial(cls, constant, h1, eri, num_electrons=None) -> FermionHamiltonian:
        """Build from spatial-orbital integrals; ``eri`` is in chemist notation ``(pq|rs)``."""
        h1 = np.asarray(h1, dtype=float)
        eri = np.asarray(eri, dtype=float)
        n = h1.shape[0]
        one = np.kron(h1, np.eye(2))
        # (pq|rs) is the coefficient of a+_p a+_r a_s a_q.
        phys = np.einsum("adbc->abcd", eri)
        two = np.zeros((2 * n,) * 4)
        for s in (0, 1):
            for t in (0, 1):
                two[s::2, t::2, t::2, s::2] = phys
        return cls(2 * n, constant, one, two, num_electrons)

    def spatial_integrals(self) -> tuple[np.ndarray, np.ndarray]:
        """Recover ``(h1, eri)`` spatial integrals; fails for non spin-adapted tensors."""
        if self.num_modes % 2:
            raise ValueError("odd number of spin-orbitals")
        h1 = self.one_body[::2, ::2]
        eri = np.einsum("abcd->adbc", self.two_body[::2, ::2, ::2, ::2])
        rebuilt = FermionHamiltonian.from_spatial(self.constant, h1, eri)
        if not (
            np.array_equal(rebuilt.one_body, self.one_body)
            and np.array_equal(rebuilt.two_body, self.two_body)
        ):
            raise ValueError("Hamiltonian is not spin-adapted; cannot express as FCIDUMP")
        return h1.copy(), eri.copy()

    def terms(self) -> Iterator[FermionTerm]:
        """Nonzero canonical terms (constant excluded)."""
        yield from canonical_terms(self)

    def __add__(self, other: FermionHamiltonian) -> FermionHamiltonian:
        if self.num_modes != other.num_modes:
            raise ValueError("mode-count mismatch")
        return FermionHamiltonian(
            self.num_modes,
            self.constant + other.constant,
            self.one_body + other.one_body,
            self.two_body + other.two_body,
            self.num_electrons if self.num_electrons is not None else other.num_electrons,
        )


class FermionTerm(NamedTuple):
    coefficient: float
    operators: tuple[tuple[int, bool], ...]

    @property
    def modes(self) -> tuple[int, ...]:
        return tuple(mode for mode, _ in self.operators)

    def __str__(self) -> str:
        ops = " ".join(f"a{'+' if dag else ''}_{mode}" for mode, dag in self.operators)
        return f"{self.coefficient:+.12g} {ops}"


def _antisymmetrized(two_body: np.ndarray) -> np.ndarray:
    # 1/2 h_ijkl a+i a+j ak al summed over the four equivalent orderings.
    t = two_body
    return 0.5 * (t - t.transpose(1, 0, 2, 3) - t.transpose(0, 1, 3, 2) + t.transpose(1, 0, 3, 2))


def _canonical_two_body(h: FermionHamiltonian) -> tuple[np.ndarray, np.ndarray]:
    """Index array (n, 4) with i<j, k>l and the matching combined coefficients."""
    anti = _antisymmetrized(h.two_body)
    i, j, k, l = np.indices(anti.shape)
    mask = (i < j) & (k > l) & (np.abs(anti) >= DROP_TOLERANCE)
    return np.argwhere(mask), anti[mask]


def canonical_terms(h: FermionHamiltonian) -> Iterator[FermionTerm]:
    for i, j in np.argwhere(np.abs(h.one_body) >= DROP_TOLERANCE):
        yield FermionTerm(float(h.one_body[i, j]), ((int(i), True), (int(j), False)))
    index, coeffs = _canonical_two_body(h)
    for (i, j, k, l), c in zip(index.tolist(), coeffs.tolist()):
        yield FermionTerm(c, ((i, True), (j, True), (k, False), (l, False)))


# --------------------------------------------------------------------------- FCIDUMP

_HEADER_END = re.compile(r"&END|^\s*/\s*$", re.IGNORECASE | re.MULTILINE)


def _header_int(header: str, key: str) -> int | None:
    match = re.search(rf"\b{key}\s*=\s*(-?\d+)", header, re.IGNORECASE)
    return int(match.group(1)) if match else None


def parse_fcidump(source: str | TextIO) -> FermionHamiltonian:
    """Read an FCIDUMP (chemist notation, 1-based spatial indices) into spin-orbital form."""
    text = source if isinstance(source, str) else source.read()
    end = _HEADER_END.search(text)
    if end is None or "&FCI" not in text[: end.start()].upper():
        raise FcidumpError("malformed header: expected '&FCI ... &END'")
    header = text[: end.start()]
    norb = _header_int(header, "NORB")
    nelec = _header_int(header, "NELEC")
    if norb is None or norb < 1:
        raise FcidumpError("malformed header: missing or invalid NORB")
    body_start = text.count("\n", 0, end.end()) + 1
    body = text[end.end():].split("\n", 1)[1] if "\n" in text[end.end():] else ""

    h1 = np.zeros((norb, norb))
    eri = np.zeros((norb,) * 4)
    constant = None
    for offset, raw in enumerate(body.splitlines()):
        lineno = body_start + offset + 1
        fields = raw.split()
        if not fields:
            continue
        if len(fields) != 5:
            raise FcidumpError(f"line {lineno}: expected 'value i j k l', got {raw!r}")
        try:
            value = float(fields[0].replace("D", "E").replace("d", "e"))
            i, j, k, l = (int(f) for f in fields[1:])
        except ValueError:
            raise FcidumpError(f"line {lineno}: non-numeric entry {raw!r}") from None
        if not np.isfinite(value):
            raise FcidumpError(f"line {lineno}: non-finite value")
        if any(not 0 <= idx <= norb for idx in (i, j, k, l)):
            raise FcidumpError(f"line {lineno}: index out of range 1..{norb}")
        if i and j and k and l:
            if abs(value) < INTEGRAL_DROP_TOLERANCE:
                continue
            i, j, k, l = i - 1, j - 1, k - 1, l - 1
            for a, b, c, d in (
                (i, j, k, l), (j, i, k, l), (i, j, l, k), (j, i, l, k),
                (k, l, i, j), (l, k, i, j), (k, l, j, i), (l, k, j, i),
            ):
                eri[a, b, c, d] = value
        elif i and j and not (k or l):
            h1[i - 1, j - 1] = h1[j - 1, i - 1] = value
        elif not (i or j or k or l):
            constant = value
        elif i and not (j or k or l):
            continue  # orbital energy, unused
        else:
            raise FcidumpError(f"line {lineno}: unsupported index pattern {raw!r}")
    if constant is None:
        warnings.warn("FCIDUMP has no core-energy line; constant set to 0", stacklevel=2)
        constant = 0.0
    return FermionHamiltonian.from_spatial(constant, h1, eri, nelec)


def write_fcidump(h: FermionHamiltonian, stream: TextIO | None = None) -> str:
    """Serialize a spin-adapted Hamiltonian; returns the text and writes it if ``stream``."""
    h1, eri = h.spatial_integrals()
    n = h1.shape[0]
    nelec = h.num_electrons if h.num_electrons is not None else 0
    lines = [
        f" &FCI NORB={n},NELEC={nelec},MS2=0,",
        "  ORBSYM=" + "1," * n,
        "  ISYM=1,",
        " &END",
    ]
    for i in range(n):
        for j in range(i + 1):
            for k in range(n):
                for l in range(k + 1):
                    if i * (i + 1) // 2 + j < k * (k + 1) // 2 + l:
                        continue
                    if eri[i, j, k, l] != 0.0:
                        lines.append(f"{float(eri[i, j, k, l])!r} {i + 1} {j + 1} {k + 1} {l + 1}")
    for i in range(n):
        for j in range(i + 1):
            if h1[i, j] != 0.0:
                lines.append(f"{float(h1[i, j])!r} {i + 1} {j + 1} 0 0")
    lines.append(f"{h.constant!r} 0 0 0 0")
    text = "\n".join(lines) + "\n"
    if stream is not None:
        stream.write(text)
    return text


# --------------------------------------------------------------------------- classification

class OperatorClass(str, enum.Enum):
    NUM = "num"
    COU = "cou"
    EXC = "exc"
    NEX = "nex"
    DEX = "dex"


CLASS_ORDER = tuple(OperatorClass)


@dataclass(frozen=True, eq=False)
class ClassifiedHamiltonian:
    num: FermionHamiltonian
    cou: FermionHamiltonian
    exc: FermionHamiltonian
    nex: FermionHamiltonian
    dex: FermionHamiltonian
    num_modes: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "num_modes", self.num.num_modes)

    def __getitem__(self, tag: OperatorClass | str) -> FermionHamiltonian:
        return getattr(self, OperatorClass(tag).value)

    def fragments(self) -> list[tuple[OperatorClass, FermionHamiltonian]]:
        return [(tag, self[tag]) for tag in CLASS_ORDER]

    def total(self) -> FermionHamiltonian:
        out = self.num
        for tag in CLASS_ORDER[1:]:
            out = out + self[tag]
        return out


def classify_term(term: FermionTerm) -> OperatorClass | None:
    """Class of a single term; ``None`` for constants and identically-zero products."""
    distinct = len(set(term.modes))
    if len(term.operators) == 2:
        return OperatorClass.NUM if distinct == 1 else OperatorClass.EXC
    if len(term.operators) == 4:
        (i, _), (j, _), (k, _), (l, _) = term.operators
        if i == j or k == l:
            return None
        return {2: OperatorClass.COU, 3: OperatorClass.NEX, 4: OperatorClass.DEX}.get(distinct)
    return None


def _distinct_index_count(m: int) -> np.ndarray:
    i, j, k, l = np.indices((m,) * 4)
    count = np.ones_like(i)
    count += (j != i)
    count += (k != i) & (k != j)
    count += (l != i) & (l != j) & (l != k)
    return np.where((i == j) | (k == l), 0, count)


def classify(h: FermionHamiltonian) -> ClassifiedHamiltonian:
    """Split into number, Coulomb, excitation, number-excitation and double-excitation parts.

    The constant travels with the number fragment.  Two-body entries with a repeated
    creation or annihilation index are identically zero and are dropped.
    """
    m = h.num_modes
    diag = np.eye(m, dtype=bool)
    distinct = _distinct_index_count(m)
    zeros2 = np.zeros((m,) * 4)

    def part(constant, one_mask, two_mask):
        return FermionHamiltonian(
            m,
            constant,
            np.where(one_mask, h.one_body, 0.0),
            np.where(two_mask, h.two_body, zeros2),
            h.num_electrons,
        )

    no_one = np.zeros((m, m), dtype=bool)
    no_two = np.zeros((m,) * 4, dtype=bool)
    return ClassifiedHamiltonian(
        num=part(h.constant, diag, no_two),
        cou=part(0.0, no_one, distinct == 2),
        exc=part(0.0, ~diag, no_two),
        nex=part(0.0, no_one, distinct == 3),
        dex=part(0.0, no_one, distinct == 4),
    )


def class_norm_profile(c: ClassifiedHamiltonian) -> dict[OperatorClass, tuple[int, float]]:
    """Per class: number of nonzero canonical terms and the sum of their |coefficients|."""
    profile = {}
    for tag, fragment in c.fragments():
        coeffs = [t.coefficient for t in fragment.terms()]
        profile[tag] = (len(coeffs), float(np.sum(np.abs(coeffs))) if coeffs else 0.0)
    return profile


# --------------------------------------------------------------------------- Jordan-Wigner
#
# a+_p = 1/2 X_p Z_{<p} (1 + Z_p) and a_p = 1/2 X_p Z_{<p} (1 - Z_p).  Products are
# accumulated in the real "X^x Z^z" normal form, where
#   (X^x1 Z^z1)(X^x2 Z^z2) = (-1)^{|z1 & x2|} X^{x1^x2} Z^{z1^z2},
# and converted at the end with X^x Z^z = (-i)^{|x & z|} P(x, z).

def _popcount(values: np.ndarray) -> np.ndarray:
    return np.bitwise_count(values).astype(np.int64)


def _expand_products(coeffs: np.ndarray, modes: np.ndarray, daggers: tuple[bool, ...]):
    """Expand ladder products (one per row of ``modes``) into XZ normal-form pieces."""
    modes = modes.astype(np.int64)
    nops = len(daggers)
    e = np.left_shift(1, modes)
    m = e - 1
    x = np.bitwise_xor.reduce(e, axis=1)
    xs, zs, cs = [], [], []
    for choice in range(1 << nops):
        bits = [(choice >> t) & 1 for t in range(nops)]
        z_ops = [m[:, t] | (e[:, t] * bits[t]) for t in range(nops)]
        sign = np.zeros(len(coeffs), dtype=np.int64)
        for a in range(nops):
            for b in range(a + 1, nops):
                sign += _popcount(z_ops[a] & e[:, b])
        factor = 0.5**nops * (-1) ** sum(b for b, dag in zip(bits, daggers) if not dag)
        z = np.bitwise_xor.reduce(np.stack(z_ops, axis=1), axis=1)
        xs.append(x)
        zs.append(z)
        cs.append(factor * coeffs * (1 - 2 * (sign & 1)))
    return np.concatenate(xs), np.concatenate(zs), np.concatenate(cs)


def jordan_wigner_complex(h: FermionHamiltonian) -> dict[PauliString, complex]:
    """Jordan-Wigner image with complex coefficients, before the Hermitian projection."""
    n = h.num_modes
    pieces = []
    one_idx = np.argwhere(np.abs(h.one_body) >= DROP_TOLERANCE)
    if len(one_idx):
        pieces.append(_expand_products(h.one_body[tuple(one_idx.T)], one_idx, (True, False)))
    two_idx, two_coeffs = _canonical_two_body(h)
    if len(two_idx):
        pieces.append(_expand_products(two_coeffs, two_idx, (True, True, False, False)))
    result: dict[PauliString, complex] = {}
    if pieces:
        x = np.concatenate([p[0] for p in pieces])
        z = np.concatenate([p[1] for p in pieces])
        c = np.concatenate([p[2] for p in pieces])
        keys, inverse = np.unique((x << n) | z, return_inverse=True)
        summed = np.bincount(inverse.ravel(), weights=c, minlength=len(keys))
        mask = (1 << n) - 1
        for key, value in zip(keys.tolist(), summed.tolist()):
            kx, kz = key >> n, key & mask
            phase = (-1j) ** (bin(kx & kz).count("1") % 4)
            result[PauliString(n, kx, kz)] = value * phase
    identity = PauliString.identity(n)
    result[identity] = result.get(identity, 0.0) + h.constant
    return result


def jordan_wigner(h: FermionHamiltonian) -> QubitHamiltonian:
    """Map to a qubit Hamiltonian on ``num_modes`` qubits."""
    terms = jordan_wigner_complex(h)
    residue = max((abs(c.imag) for c in terms.values()), default=0.0)
    if residue > SYMMETRY_TOLERANCE:
        raise ValueError(f"Jordan-Wigner image is not Hermitian (imaginary residue {residue:.3g})")
    return QubitHamiltonian(h.num_modes, ((s, c.real) for s, c in terms.items()))


def ladder_operator(mode: int, dagger: bool, num_modes: int) -> list[tuple[complex, PauliString]]:
    """Jordan-Wigner image of a single creation (``dagger``) or annihilation operator."""
    if not 0 <= mode < num_modes:
        raise ValueError(f"mode {mode} out of range for {num_modes} modes")
    zmask = (1 << mode) - 1
    ysign = -0.5j if dagger else 0.5j
    return [
        (0.5, PauliString(num_modes, 1 << mode, zmask)),
        (ysign, PauliString(num_modes, 1 << mode, zmask | (1 << mode))),
    ]
