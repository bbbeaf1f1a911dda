"""Worst-case fidelity from generator expectations, and its confidence certificates."""

from __future__ import annotations

import itertools
import json
import math
import warnings
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

import numpy as np
from scipy.special import zeta

from . import kernels
from .estimation import ExpectationEstimate
from .stabilizer import DENSE_STATE_LIMIT, DenseLimitError, GeneratorSet, eigenbasis_projector

FORMAT_VERSION = 1


class Method(str, Enum):
    HOEFFDING = "hoeffding"
    EBSTOP = "ebstop"


class CertificationError(ValueError):
    pass


def _check_mu(mu) -> np.ndarray:
    mu = np.asarray(mu, dtype=float).ravel()
    if mu.size == 0:
        raise ValueError("need at least one expectation value")
    bad = np.flatnonzero((mu < -1.0) | (mu > 1.0) | ~np.isfinite(mu))
    if bad.size:
        raise ValueError(f"expectation value {mu[bad[0]]!r} at index {bad[0]} is outside [-1, 1]")
    return mu


def slack(mu) -> float:
    """Total deviation ``sum_l (1 - mu_l) / 2``."""
    return float(np.sum((1.0 - _check_mu(mu)) / 2.0))


def f_min(mu) -> float:
    """Minimum fidelity with the stabilizer state over all states matching ``mu``."""
    s = slack(mu)
    return 1.0 - s if s <= 1.0 else 0.0


def worst_case_state(mu, g: GeneratorSet) -> np.ndarray:
    """A density matrix attaining :func:`f_min` while reproducing every ``mu_l``.

    Weight ``1 - slack`` on the stabilizer state and ``(1 - mu_l) / 2`` on the
    eigenstate that flips only generator ``l``.
    """
    mu = _check_mu(mu)
    if mu.size != g.n:
        raise ValueError(f"{mu.size} expectation values for {g.n} generators")
    if g.n > DENSE_STATE_LIMIT:
        raise DenseLimitError(f"dense states support n <= {DENSE_STATE_LIMIT}, got {g.n}")
    weights = (1.0 - mu) / 2.0
    total = weights.sum()
    if total > 1.0:
        raise CertificationError(f"slack {total:.6g} > 1: no constructive minimizer of this form")
    rho = (1.0 - total) * eigenbasis_projector(g, 0)
    for l, w in enumerate(weights):
        if w:
            rho = rho + w * eigenbasis_projector(g, 1 << l)
    return rho


# ---------------------------------------------------------------------------
# Hoeffding


def _ceil(value: float) -> int:
    # guard against ceil(1.0000000000000002) at exact-integer boundaries
    r = round(value)
    if abs(value - r) <= 1e-9 * max(1.0, abs(value)):
        return max(1, int(r))
    return max(1, math.ceil(value))


def _check_eps_delta(epsilon: float, delta: float) -> None:
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    if not 0 < delta < 1:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")


def hoeffding_samples(n: int, epsilon: float, delta: float) -> int:
    """Copies per generator: ``ceil(n**2 ln(2/delta) / (2 epsilon**2))``."""
    if n < 1:
        raise ValueError("n must be positive")
    _check_eps_delta(epsilon, delta)
    return _ceil(n * n * math.log(2.0 / delta) / (2.0 * epsilon * epsilon))


def hoeffding_radius(m: int, delta: float) -> float:
    """Per-generator precision reached with ``m`` copies; inverse of :func:`hoeffding_samples` at n=1."""
    return math.sqrt(math.log(2.0 / delta) / (2.0 * m))


@dataclass(frozen=True)
class CertifiedInterval:
    lower: float
    upper: float
    confidence: float
    certified_lower: float


def hoeffding_interval(f_min_value: float, n: int, epsilon: float, delta: float) -> CertifiedInterval:
    """``[F - eps/2, F + eps/2]`` at confidence ``1 - delta``.

    ``epsilon`` is on the fidelity scale; each of the ``n`` generators is
    estimated to ``epsilon / n``.
    """
    if n < 1:
        raise ValueError("n must be positive")
    if epsilon < 0:
        raise ValueError("epsilon must be non-negative")
    if not 0 < delta < 1:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    half = epsilon / 2.0
    return CertifiedInterval(f_min_value - half, f_min_value + half, 1.0 - delta, f_min_value - half)


# ---------------------------------------------------------------------------
# empirical Bernstein stopping


@dataclass(frozen=True)
class EBStopConfig:
    """Checkpoint schedule and constants of the stopping rule.

    Checkpoints are ``t_0`` and ``t_{k+1} = ceil(growth * t_k)`` with growth
    ``growth_num / growth_den``; checkpoint ``k`` (from 1) spends
    ``delta * c / k**power`` with ``c = 1 / zeta(power)`` so the total is delta.
    """

    t0: int = 10
    growth_num: int = 11
    growth_den: int = 10
    power: float = 1.1
    value_range: float = 2.0

    @property
    def budget_constant(self) -> float:
        return float(1.0 / zeta(self.power))

    def to_dict(self) -> dict:
        return {
            "t0": self.t0,
            "growth": self.growth_num / self.growth_den,
            "power": self.power,
            "budget_constant": self.budget_constant,
            "value_range": self.value_range,
        }


DEFAULT_EBSTOP = EBStopConfig()


@dataclass(frozen=True)
class EBStopResult:
    mu_tilde: float
    m: int
    stopped: bool
    radius: float
    variance: float


def eb_radius(variance: float, t: int, delta: float, value_range: float = 2.0) -> float:
    log_term = math.log(3.0 / delta)
    return math.sqrt(variance) * math.sqrt(2.0 * log_term / t) + 3.0 * value_range * log_term / t


def ebstop(stream, epsilon: float, delta: float, config: EBStopConfig = DEFAULT_EBSTOP,
           max_samples: int | None = None) -> EBStopResult:
    """Consume +-1 outcomes until the empirical-Bernstein radius drops to ``epsilon``.

    ``stream`` may be an array or any iterable. For the fidelity certificate the
    caller passes ``epsilon / n``. If the stream ends (or ``max_samples`` is hit)
    first, ``stopped`` is False and the current mean and radius are returned.
    """
    _check_eps_delta(epsilon, delta)
    c = config.budget_constant
    args = (config.t0, config.growth_num, config.growth_den, config.power, c, config.value_range)
    if isinstance(stream, np.ndarray):
        x = np.ascontiguousarray(stream, dtype=np.float64).ravel()
        if max_samples is not None:
            x = x[:max_samples]
        if x.size and np.max(np.abs(x)) > 1.0:
            raise ValueError("outcomes must lie in [-1, 1]")
        t, mean, var, rad, stopped = kernels.ebstop_scan(x, float(epsilon), float(delta), *args)
        return EBStopResult(float(mean), int(t), bool(stopped), float(rad), float(var))
    return _ebstop_iter(iter(stream), epsilon, delta, config, c, max_samples)


def _ebstop_iter(it, epsilon, delta, config, c, max_samples):
    s = s2 = 0.0
    t, k, tk = 0, 1, config.t0
    limit = math.inf if max_samples is None else max_samples
    exhausted = False
    while not exhausted and tk <= limit:
        chunk = np.fromiter(itertools.islice(it, tk - t), dtype=np.float64)
        if chunk.size and np.max(np.abs(chunk)) > 1.0:
            raise ValueError("outcomes must lie in [-1, 1]")
        for v in chunk:
            s += v
            s2 += v * v
        t += chunk.size
        if t < tk:
            exhausted = True
            break
        mean = s / t
        var = max(s2 / t - mean * mean, 0.0)
        rad = eb_radius(var, t, delta * c / k**config.power, config.value_range)
        if rad <= epsilon:
            return EBStopResult(mean, t, True, rad, var)
        tk = (config.growth_num * tk + config.growth_den - 1) // config.growth_den
        k += 1
    if not exhausted and t < limit:
        rest = np.fromiter(itertools.islice(it, int(limit - t)) if limit < math.inf else it, dtype=np.float64)
        for v in rest:
            s += v
            s2 += v * v
        t += rest.size
    if t == 0:
        return EBStopResult(0.0, 0, False, math.inf, 0.0)
    mean = s / t
    var = max(s2 / t - mean * mean, 0.0)
    return EBStopResult(mean, t, False, eb_radius(var, t, delta * c / k**config.power, config.value_range), var)


# ---------------------------------------------------------------------------
# report


@dataclass
class CertificationReport:
    f_min: float
    lower_bound: float
    upper_bound: float
    epsilon: float
    delta: float
    method: Method
    slack: float
    per_generator: list[ExpectationEstimate]
    certifiable: bool = True
    sufficient: bool = True
    epsilon_source: str = "given"
    required_samples: int | None = None
    ebstop_constants: dict | None = field(default=None)

    @property
    def p_conf(self) -> float:
        return 1.0 - self.delta

    def to_dict(self) -> dict:
        d = {
            "f_min": self.f_min,
            "lower_bound": self.lower_bound,
            "upper_bound": self.upper_bound,
            "epsilon": self.epsilon,
            "epsilon_source": self.epsilon_source,
            "delta": self.delta,
            "p_conf": self.p_conf,
            "method": self.method.value,
            "slack": self.slack,
            "certifiable": self.certifiable,
            "sufficient": self.sufficient,
            "per_generator": [e.to_dict() for e in self.per_generator],
        }
        if self.required_samples is not None:
            d["required_samples"] = self.required_samples
        if self.ebstop_constants is not None:
            d["ebstop_constants"] = self.ebstop_constants
        return d

    @classmethod
    def from_dict(cls, d: dict) -> CertificationReport:
        return cls(
            f_min=float(d["f_min"]),
            lower_bound=float(d["lower_bound"]),
            upper_bound=float(d["upper_bound"]),
            epsilon=float(d["epsilon"]),
            delta=float(d["delta"]),
            method=Method(d["method"]),
            slack=float(d["slack"]),
            per_generator=[ExpectationEstimate.from_dict(e) for e in d.get("per_generator", [])],
            certifiable=bool(d.get("certifiable", True)),
            sufficient=bool(d.get("sufficient", True)),
            epsilon_source=str(d.get("epsilon_source", "given")),
            required_samples=d.get("required_samples"),
            ebstop_constants=d.get("ebstop_constants"),
        )


def _generator_radii(estimates, delta, method, config) -> np.ndarray:
    if method is Method.HOEFFDING:
        return np.array([hoeffding_radius(e.m, delta) for e in estimates])
    return np.array(
        [eb_radius(e.empirical_variance, e.m, delta, config.value_range) for e in estimates]
    )


def certify(
    estimates: Sequence[ExpectationEstimate],
    delta: float,
    method: Method | str = Method.HOEFFDING,
    epsilon: float | None = None,
    n: int | None = None,
    config: EBStopConfig = DEFAULT_EBSTOP,
) -> CertificationReport:
    """Assemble the worst-case fidelity and its ``1 - delta`` interval.

    With ``epsilon`` given, the interval is ``f_min -+ epsilon/2`` and
    ``sufficient`` says whether the sample counts support that precision.
    Without it, ``epsilon`` is derived from the data as the sum of the
    per-generator radii (Hoeffding, or the fixed-sample empirical-Bernstein
    radius with the measured variance).
    """
    method = Method(method)
    estimates = sorted(estimates, key=lambda e: e.generator_index)
    n = len(estimates) if n is None else n
    indices = [e.generator_index for e in estimates]
    if indices != list(range(n)):
        missing = sorted(set(range(n)) - set(indices))
        if missing:
            raise CertificationError(f"missing estimate for generator(s) {missing}")
        raise CertificationError(f"estimate indices {indices} inconsistent with n={n}")
    if not 0 < delta < 1:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")

    mu = []
    for e in estimates:
        v = e.mu_tilde
        if v > 1.0 or v < -1.0:
            warnings.warn(f"generator {e.generator_index}: mu {v:.6g} clamped to [-1, 1]", stacklevel=2)
            v = min(1.0, max(-1.0, v))
        mu.append(v)
    s = slack(mu)
    fmin = f_min(mu)

    radii = _generator_radii(estimates, delta, method, config)
    if epsilon is None:
        eps = float(radii.sum())
        source, sufficient = "data", True
    else:
        if not epsilon >= 0:
            raise ValueError("epsilon must be non-negative")
        eps, source = float(epsilon), "given"
        sufficient = bool(np.all(radii <= eps / n + 1e-15))
        if not sufficient:
            warnings.warn(
                f"sample counts do not support epsilon={eps:g} at delta={delta:g} ({method.value})",
                stacklevel=2,
            )
    interval = hoeffding_interval(fmin, n, eps, delta)
    required = hoeffding_samples(n, epsilon, delta) if (method is Method.HOEFFDING and epsilon) else None
    return CertificationReport(
        f_min=fmin,
        lower_bound=max(0.0, interval.lower),
        upper_bound=min(1.0, interval.upper),
        epsilon=eps,
        delta=float(delta),
        method=method,
        slack=s,
        per_generator=list(estimates),
        certifiable=s <= 1.0,
        sufficient=sufficient,
        epsilon_source=source,
        required_samples=required,
        ebstop_constants=config.to_dict() if method is Method.EBSTOP else None,
    )


def ebstop_estimates(streams: Iterable, g: GeneratorSet, epsilon: float, delta: float,
                     config: EBStopConfig = DEFAULT_EBSTOP) -> list[ExpectationEstimate]:
    """Run the stopping rule on one outcome stream per generator at precision ``epsilon / n``.

    Streams carry raw parity outcomes; the generator's sign is applied here.
    """
    out = []
    for l, stream in enumerate(streams):
        p = g.generators[l]
        res = ebstop(stream, epsilon / g.n, delta, config)
        if not res.stopped:
            warnings.warn(f"generator {l}: stream ended before the stopping rule fired", stacklevel=2)
        out.append(ExpectationEstimate(l, p.sign * res.mu_tilde, max(res.m, 1), res.variance, str(p)))
    return out


def reports_to_json(reports: list[CertificationReport], meta: dict | None = None) -> str:
    doc = {
        "format_version": FORMAT_VERSION,
        "kind": "certification_report",
        "reports": [r.to_dict() for r in reports],
        "meta": meta or {},
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def reports_from_json(text: str) -> tuple[list[CertificationReport], dict]:
    doc = json.loads(text)
    if "reports" in doc:
        return [CertificationReport.from_dict(r) for r in doc["reports"]], doc.get("meta", {})
    return [CertificationReport.from_dict(doc)], {}
