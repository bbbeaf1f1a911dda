"""n-qubit Pauli operators in bit-packed symplectic form.

An operator is stored as ``i**phase_power * prod_j X_j**x_j Z_j**z_j`` with the
X factor to the left of the Z factor on every site. In this normal form
``Y = i X Z`` has ``phase_power = 1``.

Bit vectors are packed little-endian into ``uint64`` words: qubit ``j`` lives in
word ``j // 64`` at bit ``j % 64``. Qubit 0 is the leftmost letter of the text
form.
"""

from __future__ import annotations

from functools import reduce

import numpy as np

DENSE_LIMIT = 12

_SIGN_PREFIXES = (("+i", 1), ("-i", 3), ("+", 0), ("-", 2))
_PREFIX_OF_LETTER_PHASE = {0: "", 1: "+i", 2: "-", 3: "-i"}
_LETTERS = {(0, 0): "I", (1, 0): "X", (0, 1): "Z", (1, 1): "Y"}
_BITS_OF_LETTER = {v: k for k, v in _LETTERS.items()}

_I2 = np.eye(2, dtype=complex)
_X2 = np.array([[0, 1], [1, 0]], dtype=complex)
_Z2 = np.array([[1, 0], [0, -1]], dtype=complex)
_SITE = {(0, 0): _I2, (1, 0): _X2, (0, 1): _Z2, (1, 1): _X2 @ _Z2}


class PauliParseError(ValueError):
    """Malformed Pauli string. ``position`` is the offending character index."""

    def __init__(self, message: str, position: int | None = None):
        super().__init__(message)
        self.position = position


class DimensionError(ValueError):
    pass


def _popcount(words: np.ndarray) -> int:
    return int(np.bitwise_count(words).sum())


def pack_bits(bits) -> np.ndarray:
    """Pack a 0/1 vector into little-endian ``uint64`` words."""
    bits = np.asarray(bits, dtype=np.uint8).ravel()
    nwords = max(1, -(-bits.size // 64))
    padded = np.zeros(nwords * 64, dtype=np.uint8)
    padded[: bits.size] = bits & 1
    return np.packbits(padded, bitorder="little").view("<u8").astype(np.uint64)


def unpack_bits(words: np.ndarray, n: int) -> np.ndarray:
    raw = np.ascontiguousarray(words, dtype="<u8").view(np.uint8)
    return np.unpackbits(raw, bitorder="little")[:n]


class PauliOperator:
    """Immutable signed Pauli string on ``n`` qubits."""

    __slots__ = ("n", "x_words", "z_words", "phase_power")

    def __init__(self, n: int, x_words: np.ndarray, z_words: np.ndarray, phase_power: int = 0):
        if n < 1:
            raise ValueError("a Pauli operator needs at least one qubit")
        x_words = np.array(x_words, dtype=np.uint64)
        z_words = np.array(z_words, dtype=np.uint64)
        nwords = -(-n // 64)
        if x_words.shape != (nwords,) or z_words.shape != (nwords,):
            raise ValueError(f"expected {nwords} packed word(s) for n={n}")
        x_words.flags.writeable = False
        z_words.flags.writeable = False
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "x_words", x_words)
        object.__setattr__(self, "z_words", z_words)
        object.__setattr__(self, "phase_power", int(phase_power) % 4)

    def __setattr__(self, name, value):
        raise AttributeError("PauliOperator is immutable")

    @classmethod
    def from_bits(cls, x_bits, z_bits, phase_power: int = 0) -> PauliOperator:
        x_bits = np.asarray(x_bits, dtype=np.uint8)
        z_bits = np.asarray(z_bits, dtype=np.uint8)
        if x_bits.shape != z_bits.shape or x_bits.ndim != 1:
            raise ValueError("x_bits and z_bits must be equal-length vectors")
        return cls(x_bits.size, pack_bits(x_bits), pack_bits(z_bits), phase_power)

    @classmethod
    def identity(cls, n: int) -> PauliOperator:
        words = np.zeros(-(-n // 64), dtype=np.uint64)
        return cls(n, words, words)

    @property
    def x_bits(self) -> np.ndarray:
        return unpack_bits(self.x_words, self.n)

    @property
    def z_bits(self) -> np.ndarray:
        return unpack_bits(self.z_words, self.n)

    @property
    def y_count(self) -> int:
        return _popcount(self.x_words & self.z_words)

    @property
    def letter_phase(self) -> int:
        """Power of ``i`` in front of the letter form ``i**s * P_0 ⊗ ... ⊗ P_{n-1}``."""
        return (self.phase_power - self.y_count) % 4

    @property
    def is_hermitian(self) -> bool:
        return self.letter_phase % 2 == 0

    @property
    def sign(self) -> int:
        """+1 or -1 for Hermitian operators."""
        if not self.is_hermitian:
            raise ValueError(f"{self} is not Hermitian and has no real sign")
        return 1 if self.letter_phase == 0 else -1

    @property
    def is_identity_up_to_phase(self) -> bool:
        return not (self.x_words.any() or self.z_words.any())

    @property
    def letters(self) -> str:
        return "".join(_LETTERS[int(a), int(b)] for a, b in zip(self.x_bits, self.z_bits))

    @property
    def support(self) -> list[int]:
        return [int(j) for j in np.nonzero(self.x_bits | self.z_bits)[0]]

    @property
    def weight(self) -> int:
        return _popcount(self.x_words | self.z_words)

    def symplectic_row(self) -> np.ndarray:
        """Concatenated ``(x | z)`` bit row of length ``2n``."""
        return np.concatenate([self.x_bits, self.z_bits])

    def __eq__(self, other):
        if not isinstance(other, PauliOperator):
            return NotImplemented
        return (
            self.n == other.n
            and self.phase_power == other.phase_power
            and np.array_equal(self.x_words, other.x_words)
            and np.array_equal(self.z_words, other.z_words)
        )

    def __hash__(self):
        return hash((self.n, self.phase_power, self.x_words.tobytes(), self.z_words.tobytes()))

    def __mul__(self, other: PauliOperator) -> PauliOperator:
        return multiply(self, other)

    def __neg__(self) -> PauliOperator:
        return PauliOperator(self.n, self.x_words, self.z_words, self.phase_power + 2)

    def __str__(self):
        return format_pauli(self)

    def __repr__(self):
        return f"PauliOperator({format_pauli(self)!r})"


def parse_pauli(text: str, n: int | None = None) -> PauliOperator:
    """Parse ``[+|-|+i|-i]`` followed by letters from ``IXYZ``.

    >>> parse_pauli("-ZI").phase_power
    2
    """
    if not isinstance(text, str):
        raise PauliParseError(f"expected a string, got {type(text).__name__}")
    s = text.strip()
    if not s:
        raise PauliParseError("empty Pauli string", 0)
    letter_phase, offset = 0, 0
    for prefix, power in _SIGN_PREFIXES:
        if s.startswith(prefix):
            letter_phase, offset = power, len(prefix)
            break
    body = s[offset:]
    if not body:
        raise PauliParseError(f"no Pauli letters in {text!r}", offset)
    x = np.zeros(len(body), dtype=np.uint8)
    z = np.zeros(len(body), dtype=np.uint8)
    for j, ch in enumerate(body):
        bits = _BITS_OF_LETTER.get(ch.upper())
        if bits is None:
            raise PauliParseError(
                f"invalid character {ch!r} at position {offset + j} in {text!r}", offset + j
            )
        x[j], z[j] = bits
    if n is not None and len(body) != n:
        raise PauliParseError(
            f"{text!r} acts on {len(body)} qubits, expected {n}", offset + min(len(body), n)
        )
    y_count = int(np.count_nonzero(x & z))
    return PauliOperator.from_bits(x, z, letter_phase + y_count)


def format_pauli(p: PauliOperator) -> str:
    return _PREFIX_OF_LETTER_PHASE[p.letter_phase] + p.letters


def _check_same_n(p: PauliOperator, q: PauliOperator) -> None:
    if p.n != q.n:
        raise DimensionError(f"qubit count mismatch: {p.n} vs {q.n}")


def multiply(p: PauliOperator, q: PauliOperator) -> PauliOperator:
    # Z^{z_p} X^{x_q} = (-1)^{z_p . x_q} X^{x_q} Z^{z_p}
    _check_same_n(p, q)
    phase = p.phase_power + q.phase_power + 2 * _popcount(p.z_words & q.x_words)
    return PauliOperator(p.n, p.x_words ^ q.x_words, p.z_words ^ q.z_words, phase)


def commutes(p: PauliOperator, q: PauliOperator) -> bool:
    _check_same_n(p, q)
    return (_popcount(p.x_words & q.z_words) + _popcount(p.z_words & q.x_words)) % 2 == 0


def to_dense(p: PauliOperator) -> np.ndarray:
    """``2**n x 2**n`` complex matrix of ``p``; qubit 0 is the leftmost Kronecker factor."""
    if p.n > DENSE_LIMIT:
        raise DimensionError(f"to_dense supports n <= {DENSE_LIMIT}, got n={p.n}")
    sites = [_SITE[int(a), int(b)] for a, b in zip(p.x_bits, p.z_bits)]
    return (1j**p.phase_power) * reduce(np.kron, sites)
