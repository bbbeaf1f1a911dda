"""Measurement planning and generator expectation values from counts."""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass

import numpy as np

from .circuits import CountTable
from .pauli import PauliOperator
from .stabilizer import GeneratorSet

FORMAT_VERSION = 1


class CoverageError(ValueError):
    pass


@dataclass(frozen=True)
class MeasurementSetting:
    id: str
    bases: str
    covered: tuple[int, ...]

    def can_measure(self, p: PauliOperator) -> bool:
        return can_measure(self.bases, p)

    def to_dict(self) -> dict:
        return {"id": self.id, "bases": self.bases, "covered": list(self.covered)}


@dataclass(frozen=True)
class ExpectationEstimate:
    generator_index: int
    mu_tilde: float
    m: int
    empirical_variance: float
    generator: str = ""
    setting_id: str = ""

    def to_dict(self) -> dict:
        return {
            "l": self.generator_index,
            "generator": self.generator,
            "mu_tilde": self.mu_tilde,
            "m": self.m,
            "variance": self.empirical_variance,
            "setting_id": self.setting_id,
        }

    @classmethod
    def from_dict(cls, d: dict) -> ExpectationEstimate:
        return cls(
            int(d["l"]),
            float(d["mu_tilde"]),
            int(d["m"]),
            float(d["variance"]),
            str(d.get("generator", "")),
            str(d.get("setting_id", "")),
        )


def can_measure(bases: str, p: PauliOperator) -> bool:
    letters = p.letters
    return all(letters[q] == bases[q] for q in p.support)


def plan_settings(g: GeneratorSet) -> list[MeasurementSetting]:
    """Greedy first-fit grouping of generators into single-qubit-basis settings.

    Qubits no assigned generator touches are measured in Z.
    """
    slots: list[list[str | None]] = []
    members: list[list[int]] = []
    for l, p in enumerate(g.generators):
        letters = p.letters
        for idx, slot in enumerate(slots):
            if all(slot[q] in (None, letters[q]) for q in p.support):
                break
        else:
            slots.append([None] * g.n)
            members.append([])
            idx = len(slots) - 1
        for q in p.support:
            if letters[q] not in "XYZ":
                raise CoverageError(f"generator {l} has letter {letters[q]!r} on qubit {q}")
            slots[idx][q] = letters[q]
        members[idx].append(l)
    return [
        MeasurementSetting(f"s{i}", "".join(b or "Z" for b in slot), tuple(members[i]))
        for i, slot in enumerate(slots)
    ]


def _parity_signs(n: int, support: list[int]) -> np.ndarray:
    idx = np.arange(1 << n)
    parity = np.zeros(1 << n, dtype=np.int64)
    for q in support:
        parity ^= (idx >> (n - 1 - q)) & 1
    return 1 - 2 * parity


def expectation_from_counts(counts: CountTable, g: GeneratorSet, l: int) -> ExpectationEstimate:
    """Signed parity average of generator ``l`` over a count table.

    Fractional and negative quasi-counts are allowed; the mean is clamped to
    [-1, 1] with a warning and the variance is the population variance of the
    implied +-1 outcome distribution.
    """
    if not 0 <= l < len(g):
        raise IndexError(f"generator index {l} out of range")
    p = g.generators[l]
    if counts.n != g.n:
        raise CoverageError(f"count table is for {counts.n} qubits, generators for {g.n}")
    if not can_measure(counts.bases, p):
        raise CoverageError(f"setting {counts.setting_id} ({counts.bases}) does not cover generator {l} ({p})")
    vec = counts.vector()
    total = vec.sum()
    if not counts.counts or total <= 0:
        raise ValueError(f"setting {counts.setting_id} has no counts")
    mean = p.sign * float(vec @ _parity_signs(g.n, p.support)) / total
    variance = max(0.0, 1.0 - mean * mean)
    if mean > 1.0 or mean < -1.0:
        warnings.warn(f"generator {l}: expectation {mean:.6g} outside [-1, 1], clamped", stacklevel=2)
        mean = min(1.0, max(-1.0, mean))
    return ExpectationEstimate(l, mean, max(1, int(round(counts.shots))), variance, str(p), counts.setting_id)


def estimate_all(
    tables: list[CountTable], g: GeneratorSet, settings: list[MeasurementSetting]
) -> list[ExpectationEstimate]:
    """One estimate per generator, each from its designated setting only."""
    by_id = {t.setting_id: t for t in tables}
    out = []
    for l in range(len(g)):
        owner = next((s for s in settings if l in s.covered), None)
        if owner is None:
            raise CoverageError(f"no setting covers generator {l}")
        table = by_id.get(owner.id)
        if table is None:
            raise CoverageError(f"counts for setting {owner.id} (generator {l}) are missing")
        out.append(expectation_from_counts(table, g, l))
    return out


def pool_tables(a: CountTable, b: CountTable) -> CountTable:
    if a.bases != b.bases:
        raise ValueError("can only pool tables measured in the same bases")
    counts = dict(a.counts)
    for k, v in b.counts.items():
        counts[k] = counts.get(k, 0) + v
    return CountTable(a.setting_id, a.bases, a.shots + b.shots, counts)


def settings_to_json(g: GeneratorSet, settings: list[MeasurementSetting]) -> str:
    doc = {
        "format_version": FORMAT_VERSION,
        "kind": "settings",
        "n": g.n,
        "generators": g.labels(),
        "settings": [s.to_dict() for s in settings],
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def estimates_to_json(estimates: list[ExpectationEstimate]) -> str:
    doc = {
        "format_version": FORMAT_VERSION,
        "kind": "estimates",
        "estimates": [e.to_dict() for e in estimates],
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def estimates_from_json(text: str) -> list[ExpectationEstimate]:
    doc = json.loads(text)
    rows = doc["estimates"] if isinstance(doc, dict) else doc
    return [ExpectationEstimate.from_dict(r) for r in rows]

