"""Dense state-vector simulation of state-preparation circuits, noise and readout.

Basis ordering: qubit 0 is the most significant bit of an amplitude index and
the leftmost character of an outcome bitstring.

``ZRot(q, phi)`` is ``diag(1, exp(i phi))``. With this convention the ion-trap
GHZ sequence (two XX(pi/4) gates, Z(pi/2) phase advances, Hadamards on all
qubits) produces GHZ_3 exactly, up to a global phase.
"""

from __future__ import annotations

import json
import math
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import kernels

STATEVECTOR_LIMIT = 12
DENSITY_LIMIT = 8
FORMAT_VERSION = 1

GATE_NAMES = ("H", "ZRot", "CNOT", "XX")
_ARITY = {"H": 1, "ZRot": 1, "CNOT": 2, "XX": 2}

_H = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
_SDG = np.array([[1, 0], [0, -1j]], dtype=complex)
_CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
# basis change that maps the measured Pauli's eigenbasis onto Z
BASIS_ROTATIONS = {"Z": np.eye(2, dtype=complex), "X": _H, "Y": _H @ _SDG}


class CircuitError(ValueError):
    pass


class SimulationLimitError(ValueError):
    pass


def zrot_matrix(phi: float) -> np.ndarray:
    return np.array([[1, 0], [0, np.exp(1j * phi)]], dtype=complex)


def xx_matrix(chi: float) -> np.ndarray:
    c, s = math.cos(chi), -1j * math.sin(chi)
    return np.array([[c, 0, 0, s], [0, c, s, 0], [0, s, c, 0], [s, 0, 0, c]], dtype=complex)


@dataclass(frozen=True)
class Gate:
    name: str
    qubits: tuple[int, ...]
    param: float | None = None

    def matrix(self) -> np.ndarray:
        if self.name == "H":
            return _H
        if self.name == "ZRot":
            return zrot_matrix(self.param)
        if self.name == "CNOT":
            return _CNOT
        return xx_matrix(self.param)

    def to_dict(self) -> dict:
        d = {"gate": self.name, "qubits": list(self.qubits)}
        if self.name == "ZRot":
            d["phi"] = self.param
        elif self.name == "XX":
            d["chi"] = self.param
        return d


def H(q: int) -> Gate:
    return Gate("H", (q,))


def ZRot(q: int, phi: float) -> Gate:
    return Gate("ZRot", (q,), float(phi))


def CNOT(control: int, target: int) -> Gate:
    return Gate("CNOT", (control, target))


def XX(q0: int, q1: int, chi: float) -> Gate:
    return Gate("XX", (q0, q1), float(chi))


@dataclass(frozen=True)
class Circuit:
    n: int
    gates: tuple[Gate, ...]

    def __post_init__(self):
        if self.n < 1:
            raise CircuitError("circuit needs at least one qubit")
        object.__setattr__(self, "gates", tuple(self.gates))
        for i, g in enumerate(self.gates):
            if g.name not in _ARITY:
                raise CircuitError(f"gate {i}: unknown gate {g.name!r}")
            if len(g.qubits) != _ARITY[g.name]:
                raise CircuitError(f"gate {i}: {g.name} acts on {_ARITY[g.name]} qubit(s)")
            for q in g.qubits:
                if not 0 <= q < self.n:
                    raise CircuitError(f"gate {i}: qubit {q} out of range for n={self.n}")
            if len(g.qubits) == 2 and g.qubits[0] == g.qubits[1]:
                raise CircuitError(f"gate {i}: {g.name} needs two distinct qubits")
            if g.name == "XX" and not 0 < g.param <= math.pi / 4 + 1e-15:
                raise CircuitError(f"gate {i}: XX angle must lie in (0, pi/4], got {g.param}")
            if g.name == "ZRot" and not math.isfinite(g.param):
                raise CircuitError(f"gate {i}: ZRot angle must be finite")

    def to_dict(self) -> dict:
        return {"n": self.n, "gates": [g.to_dict() for g in self.gates]}

    @classmethod
    def from_dict(cls, data: dict) -> Circuit:
        gates = []
        for i, d in enumerate(data["gates"]):
            name = d.get("gate")
            qubits = tuple(int(q) for q in d.get("qubits", ()))
            param = d.get("phi", d.get("chi"))
            if name in ("ZRot", "XX") and param is None:
                raise CircuitError(f"gate {i}: {name} needs an angle")
            gates.append(Gate(name, qubits, None if param is None else float(param)))
        return cls(int(data["n"]), tuple(gates))


def load_circuit(path) -> Circuit:
    return Circuit.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def ghz_circuit_cnot(n: int) -> Circuit:
    """H on the last qubit, then CNOTs from it onto every other qubit, nearest first."""
    if n < 2:
        raise CircuitError("GHZ circuit needs n >= 2")
    last = n - 1
    return Circuit(n, (H(last),) + tuple(CNOT(last, t) for t in range(last - 1, -1, -1)))


def ghz_circuit_ion() -> Circuit:
    """Three-qubit trapped-ion sequence with native XX(pi/4) gates."""
    q = math.pi / 4
    return Circuit(
        3,
        (XX(0, 1, q), ZRot(1, math.pi / 2), XX(1, 2, q), ZRot(2, math.pi / 2), H(0), H(1), H(2)),
    )


def builtin_circuit(name: str) -> Circuit:
    """``ghz-ion-3`` or ``ghz-cnot-N``."""
    if name == "ghz-ion-3":
        return ghz_circuit_ion()
    if name.startswith("ghz-cnot-"):
        try:
            n = int(name.removeprefix("ghz-cnot-"))
        except ValueError:
            raise CircuitError(f"unknown circuit {name!r}") from None
        return ghz_circuit_cnot(n)
    raise CircuitError(f"unknown circuit {name!r}")


def apply_circuit(c: Circuit) -> np.ndarray:
    if c.n > STATEVECTOR_LIMIT:
        raise SimulationLimitError(f"state vectors support n <= {STATEVECTOR_LIMIT}, got {c.n}")
    psi = np.zeros(1 << c.n, dtype=np.complex128)
    psi[0] = 1.0
    for g in c.gates:
        U = np.ascontiguousarray(g.matrix(), dtype=np.complex128)
        if len(g.qubits) == 1:
            psi = kernels.apply_1q(psi, U, g.qubits[0], c.n)
        else:
            psi = kernels.apply_2q(psi, U, g.qubits[0], g.qubits[1], c.n)
    return psi


# ---------------------------------------------------------------------------
# noise


@dataclass(frozen=True)
class NoiseModel:
    """Per-qubit depolarizing strength and readout imperfections.

    ``readout_bias_eta`` is either one value for every qubit or a per-qubit
    sequence; it is the symmetric flip probability of the biased two-outcome
    POVM. ``confusion`` holds per-qubit column-stochastic matrices
    ``C[reported, true]``. Both act on sampled bits.
    """

    depolarizing_p: float = 0.0
    readout_bias_eta: float | tuple[float, ...] = 0.0
    confusion: tuple[np.ndarray, ...] | None = field(default=None, compare=False)

    def __post_init__(self):
        if not 0.0 <= self.depolarizing_p <= 1.0:
            raise ValueError(f"depolarizing probability must be in [0, 1], got {self.depolarizing_p}")
        etas = np.atleast_1d(np.asarray(self.readout_bias_eta, dtype=float))
        if np.any(etas < 0) or np.any(etas >= 0.5):
            raise ValueError(f"readout bias must be in [0, 1/2), got {self.readout_bias_eta}")
        if self.confusion is not None:
            mats = tuple(_as_confusion(m) for m in self.confusion)
            object.__setattr__(self, "confusion", mats)

    def eta_vector(self, n: int) -> np.ndarray:
        etas = np.atleast_1d(np.asarray(self.readout_bias_eta, dtype=float))
        if etas.size == 1:
            return np.full(n, etas[0])
        if etas.size != n:
            raise ValueError(f"readout bias has {etas.size} entries for {n} qubits")
        return etas

    def flip_probabilities(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        """Per-qubit probabilities of flipping a true 0 and a true 1."""
        eta = self.eta_vector(n)
        p0, p1 = eta.copy(), eta.copy()
        if self.confusion is not None:
            if len(self.confusion) != n:
                raise ValueError(f"{len(self.confusion)} confusion matrices for {n} qubits")
            c10 = np.array([m[1, 0] for m in self.confusion])
            c01 = np.array([m[0, 1] for m in self.confusion])
            # bias flip then confusion flip, composed
            p0 = p0 * (1 - c01) + (1 - p0) * c10
            p1 = p1 * (1 - c10) + (1 - p1) * c01
        return p0, p1

    @property
    def has_readout_noise(self) -> bool:
        return bool(np.any(np.asarray(self.readout_bias_eta) > 0)) or self.confusion is not None


def _as_confusion(m) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if m.shape == (4,):
        m = m.reshape(2, 2)
    if m.shape != (2, 2):
        raise ValueError(f"confusion matrix must be 2x2, got shape {m.shape}")
    if np.any(m < -1e-12) or not np.allclose(m.sum(axis=0), 1.0, atol=1e-9):
        raise ValueError("confusion matrix columns must be probability vectors")
    return m


def bias_confusion(eta: float) -> np.ndarray:
    return np.array([[1 - eta, eta], [eta, 1 - eta]])


def load_confusion(path) -> list[np.ndarray]:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if isinstance(data, dict):
        data = data["confusion"]
    return [_as_confusion(m) for m in data]


def _as_density(state: np.ndarray) -> np.ndarray:
    state = np.asarray(state, dtype=complex)
    if state.ndim == 1:
        return np.outer(state, state.conj())
    return state


def _num_qubits(dim: int) -> int:
    n = dim.bit_length() - 1
    if dim < 2 or (1 << n) != dim:
        raise ValueError(f"dimension {dim} is not a power of two")
    return n


def apply_noise(state: np.ndarray, model: NoiseModel) -> np.ndarray:
    """Depolarize every qubit with probability ``model.depolarizing_p``."""
    rho = _as_density(state)
    n = _num_qubits(rho.shape[0])
    if n > DENSITY_LIMIT:
        raise SimulationLimitError(f"density matrices support n <= {DENSITY_LIMIT}, got {n}")
    p = model.depolarizing_p
    if p == 0:
        return rho.copy()
    t = rho.reshape((2,) * (2 * n))
    for q in range(n):
        reduced = np.trace(t, axis1=q, axis2=n + q)
        mixed = np.expand_dims(np.expand_dims(reduced, q), n + q) * (np.eye(2) / 2).reshape(
            [2 if a in (q, n + q) else 1 for a in range(2 * n)]
        )
        t = (1 - p) * t + p * mixed
    return t.reshape(rho.shape)


# ---------------------------------------------------------------------------
# measurement


@dataclass
class CountTable:
    setting_id: str
    bases: str
    shots: int
    counts: dict[str, float]

    @property
    def n(self) -> int:
        return len(self.bases)

    def total(self) -> float:
        return float(sum(self.counts.values()))

    def to_dict(self) -> dict:
        return {
            "id": self.setting_id,
            "bases": self.bases,
            "shots": self.shots,
            "counts": {k: self.counts[k] for k in sorted(self.counts)},
        }

    @classmethod
    def from_dict(cls, d: dict) -> CountTable:
        return cls(str(d["id"]), str(d["bases"]), int(d["shots"]), dict(d["counts"]))

    def vector(self) -> np.ndarray:
        v = np.zeros(1 << self.n)
        for s, c in self.counts.items():
            v[int(s, 2)] += c
        return v


def _check_bases(bases: str, n: int) -> None:
    if len(bases) != n:
        raise ValueError(f"setting has {len(bases)} bases for {n} qubits")
    bad = [b for b in bases if b not in BASIS_ROTATIONS]
    if bad:
        raise ValueError(f"invalid measurement basis {bad[0]!r}; use X, Y or Z")


def outcome_distribution(state: np.ndarray, bases: str) -> np.ndarray:
    """Exact outcome probabilities after rotating each qubit into its basis."""
    state = np.asarray(state, dtype=complex)
    n = _num_qubits(state.shape[0])
    _check_bases(bases, n)
    if state.ndim == 1:
        psi = state
        for q, b in enumerate(bases):
            if b != "Z":
                psi = kernels.apply_1q(np.ascontiguousarray(psi), BASIS_ROTATIONS[b], q, n)
        probs = np.abs(psi) ** 2
    else:
        U = np.ones((1, 1), dtype=complex)
        for b in bases:
            U = np.kron(U, BASIS_ROTATIONS[b])
        probs = np.einsum("ij,jk,ik->i", U, state, U.conj()).real
    probs = np.clip(probs, 0.0, None)
    return probs / probs.sum()


def bitstring(index: int, n: int) -> str:
    return format(index, f"0{n}b")


def setting_rng(seed: int, setting_id: str) -> np.random.Generator:
    """Independent stream per setting: root seed plus a CRC of the setting id."""
    key = zlib.crc32(setting_id.encode("utf-8"))
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(key,)))


def sample_shots(state, setting, shots: int, seed: int, noise: NoiseModel | None = None) -> CountTable:
    """Draw ``shots`` outcomes for one measurement setting.

    ``setting`` is anything with ``id`` and ``bases`` attributes. Readout flips
    from ``noise`` are applied to the sampled bits.
    """
    if shots < 1:
        raise ValueError("shots must be positive")
    state = np.asarray(state, dtype=complex)
    n = _num_qubits(state.shape[0])
    limit = STATEVECTOR_LIMIT if state.ndim == 1 else DENSITY_LIMIT
    if n > limit:
        raise SimulationLimitError(f"sampling supports n <= {limit} for this state type")
    probs = outcome_distribution(state, setting.bases)
    rng = setting_rng(seed, setting.id)
    hist = rng.multinomial(shots, probs)
    if noise is not None and noise.has_readout_noise:
        p0, p1 = noise.flip_probabilities(n)
        outcomes = np.repeat(np.arange(probs.size, dtype=np.int64), hist)
        uniforms = rng.random((shots, n))
        outcomes = kernels.flip_bits(outcomes, uniforms, p0, p1, n)
        hist = np.bincount(outcomes, minlength=probs.size)
    counts = {bitstring(i, n): int(c) for i, c in enumerate(hist) if c}
    return CountTable(setting.id, setting.bases, shots, counts)


def _apply_per_qubit(vec: np.ndarray, mats, n: int) -> np.ndarray:
    t = vec.reshape((2,) * n)
    for q, m in enumerate(mats):
        t = np.moveaxis(np.tensordot(m, t, axes=([1], [q])), 0, q)
    return t.reshape(-1)


def apply_confusion(distribution: np.ndarray, confusion) -> np.ndarray:
    """Push a distribution (or count vector) through per-qubit confusion matrices."""
    distribution = np.asarray(distribution, dtype=float)
    n = _num_qubits(distribution.size)
    mats = [_as_confusion(m) for m in confusion]
    if len(mats) != n:
        raise ValueError(f"{len(mats)} confusion matrices for {n} qubits")
    return _apply_per_qubit(distribution, mats, n)


def correct_readout(raw: CountTable, confusion) -> CountTable:
    """Linear inversion of the tensor-product confusion map; quasi-counts may be negative."""
    mats = [_as_confusion(m) for m in confusion]
    if len(mats) != raw.n:
        raise ValueError(f"{len(mats)} confusion matrices for {raw.n} qubits")
    inverses = []
    for q, m in enumerate(mats):
        if abs(np.linalg.det(m)) < 1e-12:
            raise np.linalg.LinAlgError(f"confusion matrix of qubit {q} is singular")
        inverses.append(np.linalg.inv(m))
    corrected = _apply_per_qubit(raw.vector(), inverses, raw.n)
    counts = {bitstring(i, raw.n): float(c) for i, c in enumerate(corrected) if c != 0.0}
    return CountTable(raw.setting_id, raw.bases, raw.shots, counts)


def exact_count_table(state, setting, shots: float = 1.0) -> CountTable:
    """Fractional counts equal to ``shots`` times the exact distribution."""
    probs = outcome_distribution(state, setting.bases)
    n = len(setting.bases)
    counts = {bitstring(i, n): float(shots * p) for i, p in enumerate(probs) if p > 0}
    return CountTable(setting.id, setting.bases, int(round(shots)) or 1, counts)


# ---------------------------------------------------------------------------
# counts file


def counts_to_json(tables: list[CountTable], n: int, meta: dict | None = None) -> str:
    doc = {
        "format_version": FORMAT_VERSION,
        "kind": "counts",
        "n": n,
        "settings": [t.to_dict() for t in tables],
        "meta": meta or {},
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def counts_from_json(text: str) -> tuple[int, list[CountTable], dict]:
    doc = json.loads(text)
    if not isinstance(doc, dict) or "settings" not in doc or "n" not in doc:
        raise ValueError("counts file must be an object with 'n' and 'settings'")
    n = int(doc["n"])
    tables = [CountTable.from_dict(s) for s in doc["settings"]]
    for t in tables:
        _check_bases(t.bases, n)
        for s in t.counts:
            if len(s) != n or set(s) - {"0", "1"}:
                raise ValueError(f"setting {t.setting_id}: bad bitstring {s!r}")
    return n, tables, doc.get("meta", {})
