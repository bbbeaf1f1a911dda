"""Generator sets, stabilizer groups and their dense projectors."""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from pathlib import Path

import numpy as np

from . import kernels
from .pauli import PauliOperator, PauliParseError, commutes, multiply, pack_bits, parse_pauli, to_dense

DENSE_STATE_LIMIT = 8
GROUP_LIMIT = 16


class GeneratorError(ValueError):
    """Base class for invalid generator sets."""


class GeneratorCountError(GeneratorError):
    pass


class NonHermitianError(GeneratorError):
    def __init__(self, index: int, op: PauliOperator):
        super().__init__(f"generator {index} ({op}) is not Hermitian")
        self.index = index


class CommutationError(GeneratorError):
    def __init__(self, i: int, j: int, p: PauliOperator, q: PauliOperator):
        super().__init__(f"generators {i} ({p}) and {j} ({q}) anticommute")
        self.pair = (i, j)


class DependenceError(GeneratorError):
    def __init__(self, index: int, message: str | None = None):
        super().__init__(message or f"generator {index} is a product of earlier generators")
        self.index = index


class MinusIdentityError(DependenceError):
    """The generated group contains -1; a special case of dependence."""

    def __init__(self, index: int):
        super().__init__(index, f"generator {index} closes a product equal to -I; the group contains -I")


class GeneratorFileError(GeneratorError):
    def __init__(self, path, line: int, message: str):
        super().__init__(f"{path}:{line}: {message}")
        self.line = line


class DenseLimitError(ValueError):
    pass


@dataclass(frozen=True)
class GeneratorSet:
    """A validated, ordered set of ``n`` stabilizer generators.

    Build it with :func:`validate_generators`; the constructor does not check
    anything.
    """

    n: int
    generators: tuple[PauliOperator, ...]

    def __len__(self):
        return len(self.generators)

    def __iter__(self):
        return iter(self.generators)

    def __getitem__(self, l):
        return self.generators[l]

    def labels(self) -> list[str]:
        return [str(p) for p in self.generators]


def gf2_rank(rows) -> int:
    """Rank over GF(2) of a list (or 2-D array) of equal-length bit vectors."""
    rows = [np.asarray(r, dtype=np.uint8).ravel() for r in rows]
    if not rows:
        return 0
    width = rows[0].size
    if any(r.size != width for r in rows):
        raise ValueError("rows must have equal length")
    if width == 0:
        return 0
    packed = np.stack([pack_bits(r) for r in rows])
    return int(kernels.gf2_rank_packed(packed, width))


def _reduce_with_phase(candidates: list[PauliOperator]) -> None:
    """Row-reduce over GF(2) while composing operators, raising on dependence.

    A candidate that reduces to a zero symplectic row is a product of earlier
    generators; a leftover phase of 2 means that product is -I.
    """
    pivots: list[tuple[int, PauliOperator]] = []
    for i, op in enumerate(candidates):
        row = op.symplectic_row()
        cur = op
        for col, piv in pivots:
            if row[col]:
                cur = multiply(cur, piv)
                row = cur.symplectic_row()
        nz = np.flatnonzero(row)
        if nz.size == 0:
            if cur.phase_power == 2:
                raise MinusIdentityError(i)
            raise DependenceError(i)
        pivots.append((int(nz[0]), cur))


def validate_generators(candidates) -> GeneratorSet:
    """Check Hermiticity, commutation, independence and absence of -I."""
    ops = [parse_pauli(c) if isinstance(c, str) else c for c in candidates]
    if not ops:
        raise GeneratorCountError("empty generator list")
    n = ops[0].n
    for i, op in enumerate(ops):
        if op.n != n:
            raise GeneratorCountError(f"generator {i} acts on {op.n} qubits, expected {n}")
    if len(ops) != n:
        raise GeneratorCountError(f"need exactly {n} generators for {n} qubits, got {len(ops)}")
    for i, op in enumerate(ops):
        if not op.is_hermitian:
            raise NonHermitianError(i, op)
    for i in range(n):
        for j in range(i + 1, n):
            if not commutes(ops[i], ops[j]):
                raise CommutationError(i, j, ops[i], ops[j])
    _reduce_with_phase(ops)
    return GeneratorSet(n, tuple(ops))


def load_generators(path) -> GeneratorSet:
    """Read a generator file: one Pauli per line, ``#`` comments, blank lines ignored."""
    path = Path(path)
    ops, lines = [], []
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        text = raw.split("#", 1)[0].strip()
        if not text:
            continue
        try:
            ops.append(parse_pauli(text, ops[0].n if ops else None))
        except PauliParseError as exc:
            raise GeneratorFileError(path, lineno, str(exc)) from exc
        lines.append(lineno)
    if not ops:
        raise GeneratorFileError(path, 0, "no generators found")
    try:
        return validate_generators(ops)
    except CommutationError as exc:
        i, j = exc.pair
        raise GeneratorFileError(path, lines[j], f"{exc} (lines {lines[i]} and {lines[j]})") from exc
    except (NonHermitianError, DependenceError) as exc:
        raise GeneratorFileError(path, lines[exc.index], str(exc)) from exc
    except GeneratorError as exc:
        raise GeneratorFileError(path, lines[-1], str(exc)) from exc


def dump_generators(g: GeneratorSet) -> str:
    return "".join(f"{p}\n" for p in g.generators)


def ghz_generators(n: int) -> GeneratorSet:
    """``X^{⊗n}`` followed by the nearest-neighbour ``Z_k Z_{k+1}``."""
    if n < 2:
        raise ValueError("GHZ generators need n >= 2")
    ops = ["X" * n] + ["I" * k + "ZZ" + "I" * (n - k - 2) for k in range(n - 1)]
    return validate_generators(ops)


def random_generator_set(n: int, rng: np.random.Generator, max_tries: int = 10_000) -> GeneratorSet:
    """Random valid generator set with random signs (rejection sampling)."""
    ops: list[PauliOperator] = []
    rows: list[np.ndarray] = []
    tries = 0
    while len(ops) < n:
        tries += 1
        if tries > max_tries:
            raise RuntimeError("could not sample an independent commuting generator")
        x = rng.integers(0, 2, n, dtype=np.uint8)
        z = rng.integers(0, 2, n, dtype=np.uint8)
        if not (x.any() or z.any()):
            continue
        sign_phase = 2 * int(rng.integers(0, 2))
        op = PauliOperator.from_bits(x, z, sign_phase + int(np.count_nonzero(x & z)))
        if not all(commutes(op, q) for q in ops):
            continue
        row = np.concatenate([x, z])
        if gf2_rank(rows + [row]) != len(rows) + 1:
            continue
        ops.append(op)
        rows.append(row)
    return validate_generators(ops)


def enumerate_group(g: GeneratorSet) -> list[PauliOperator]:
    """All ``2**n`` products; element ``k`` is ``prod_l P_l**bit_l(k)``."""
    if g.n > GROUP_LIMIT:
        raise DenseLimitError(f"group enumeration supports n <= {GROUP_LIMIT}, got {g.n}")
    group = [PauliOperator.identity(g.n)]
    for l, gen in enumerate(g.generators):
        group.extend(multiply(e, gen) for e in group[: 1 << l])
    return group


def _check_dense(g: GeneratorSet) -> None:
    if g.n > DENSE_STATE_LIMIT:
        raise DenseLimitError(f"dense states support n <= {DENSE_STATE_LIMIT}, got {g.n}")


def eigenbasis_projector(g: GeneratorSet, k: int) -> np.ndarray:
    """``prod_l (I + (-1)**b_l(k) P_l) / 2`` with ``b_l(k)`` the l-th bit of ``k``."""
    _check_dense(g)
    if not 0 <= k < (1 << g.n):
        raise ValueError(f"eigenbasis index {k} out of range [0, {1 << g.n})")
    eye = np.eye(1 << g.n, dtype=complex)
    factors = [
        (eye + (-1) ** ((k >> l) & 1) * to_dense(p)) / 2 for l, p in enumerate(g.generators)
    ]
    return reduce(np.matmul, factors)


def stabilizer_state_dense(g: GeneratorSet) -> np.ndarray:
    """Density matrix of the stabilizer state, self-checked to be a rank-1 projector."""
    rho = eigenbasis_projector(g, 0)
    tr = np.trace(rho).real
    purity = np.trace(rho @ rho).real
    min_eig = np.linalg.eigvalsh(rho).min()
    if abs(tr - 1) > 1e-9 or abs(purity - 1) > 1e-9 or min_eig < -1e-9:
        raise AssertionError(
            f"stabilizer state self-check failed: trace={tr}, purity={purity}, min eig={min_eig}"
        )
    return rho


def stabilizer_vector(g: GeneratorSet) -> np.ndarray:
    """A unit vector spanning the stabilizer state (global phase arbitrary)."""
    rho = stabilizer_state_dense(g)
    col = int(np.argmax(np.abs(np.diag(rho))))
    v = rho[:, col]
    return v / np.linalg.norm(v)
