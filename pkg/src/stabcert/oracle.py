"""Independent check of the closed-form worst-case fidelity.

Any state consistent with the data can be taken diagonal in the simultaneous
eigenbasis of the generators, so the minimum fidelity is a linear program over
the ``2**n`` eigenvalues ``lambda_k``: minimise ``lambda_0`` subject to

    sum_{k : bit l of k is 1} lambda_k = (1 - mu_l) / 2    for every generator l
    sum_k lambda_k = 1,  lambda >= 0.

The LP is solved with a self-contained two-phase dense simplex (Bland's rule),
so nothing here shares code with :func:`stabcert.certification.f_min`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .pauli import to_dense
from .stabilizer import GeneratorSet, eigenbasis_projector, stabilizer_state_dense

LP_LIMIT = 12
PIVOT_TOL = 1e-10
FEAS_TOL = 1e-9


class InfeasibleLPError(ValueError):
    pass


class UnboundedLPError(ValueError):
    pass


class OracleMismatchError(AssertionError):
    pass


@dataclass(frozen=True)
class LinearProgram:
    """``min c.x  s.t.  A x = b,  x >= 0``."""

    c: np.ndarray
    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float)
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        b = np.asarray(self.b, dtype=float).ravel()
        if A.shape != (b.size, c.size):
            raise ValueError(f"A has shape {A.shape}, expected {(b.size, c.size)}")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)


def build_fidelity_lp(mu, n: int | None = None) -> LinearProgram:
    mu = np.asarray(mu, dtype=float).ravel()
    n = mu.size if n is None else n
    if mu.size != n:
        raise ValueError(f"{mu.size} expectation values for n={n}")
    if n > LP_LIMIT:
        raise ValueError(f"fidelity LP supports n <= {LP_LIMIT}, got {n}")
    k = np.arange(1 << n)
    A = np.vstack([((k >> l) & 1).astype(float) for l in range(n)] + [np.ones(1 << n)])
    b = np.concatenate([(1.0 - mu) / 2.0, [1.0]])
    c = np.zeros(1 << n)
    c[0] = 1.0
    return LinearProgram(c, A, b)


def _bland(T: np.ndarray, basis: list[int], ncols: int, max_iter: int) -> None:
    """Primal simplex on tableau ``T`` (last row = reduced costs) with Bland's rule."""
    m = T.shape[0] - 1
    for _ in range(max_iter):
        costs = T[-1, :ncols]
        entering = np.flatnonzero(costs < -PIVOT_TOL)
        if entering.size == 0:
            return
        j = int(entering[0])
        col = T[:m, j]
        rows = np.flatnonzero(col > PIVOT_TOL)
        if rows.size == 0:
            raise UnboundedLPError("objective is unbounded below")
        ratios = T[rows, -1] / col[rows]
        best = ratios.min()
        ties = rows[ratios <= best + PIVOT_TOL * max(1.0, abs(best))]
        r = int(min(ties, key=lambda i: basis[i]))
        kernels.pivot(T, r, j)
        basis[r] = j
    raise RuntimeError("simplex iteration limit reached")


def solve_lp(lp: LinearProgram, max_iter: int = 100_000) -> tuple[float, np.ndarray]:
    """Optimal value and vertex of ``lp``; raises on infeasible or unbounded problems."""
    A, b, c = lp.A.copy(), lp.b.copy(), lp.c
    m, N = A.shape
    neg = b < 0
    A[neg] *= -1
    b[neg] *= -1

    # phase I: artificial variables N .. N+m-1, minimise their sum
    T = np.zeros((m + 1, N + m + 1))
    T[:m, :N] = A
    T[:m, N : N + m] = np.eye(m)
    T[:m, -1] = b
    T[-1, :N] = -A.sum(axis=0)
    T[-1, -1] = -b.sum()
    basis = list(range(N, N + m))
    _bland(T, basis, N + m, max_iter)
    if -T[-1, -1] > FEAS_TOL:
        raise InfeasibleLPError(f"no feasible point (phase I residual {-T[-1, -1]:.3g})")

    # drive remaining artificials out of the basis, dropping redundant rows
    keep = []
    for r in range(m):
        if basis[r] >= N:
            cand = np.flatnonzero(np.abs(T[r, :N]) > PIVOT_TOL)
            if cand.size == 0:
                continue
            kernels.pivot(T, r, int(cand[0]))
            basis[r] = int(cand[0])
        keep.append(r)
    T2 = np.zeros((len(keep) + 1, N + 1))
    T2[:-1, :N] = T[keep, :N]
    T2[:-1, -1] = T[keep, -1]
    basis = [basis[r] for r in keep]

    # phase II: reduced costs c - c_B B^{-1} A
    T2[-1, :N] = c
    for r, j in enumerate(basis):
        if c[j] != 0.0:
            T2[-1] -= c[j] * T2[r]
    _bland(T2, basis, N, max_iter)

    x = np.zeros(N)
    for r, j in enumerate(basis):
        x[j] = T2[r, -1]
    x[np.abs(x) < 1e-14] = 0.0
    return float(c @ x), x


def lp_min_fidelity(mu) -> float:
    """Minimum of ``lambda_0`` over the fidelity LP.

    When the total deviation exceeds 1, also confirms that the eigenvalues off
    the stabilizer state can absorb all of the weight (a second LP maximising
    their sum reaches 1).
    """
    mu = np.asarray(mu, dtype=float)
    lp = build_fidelity_lp(mu)
    value, _ = solve_lp(lp)
    if np.sum((1.0 - mu) / 2.0) > 1.0:
        c = -np.ones(lp.c.size)
        c[0] = 0.0
        neg_max, _ = solve_lp(LinearProgram(c, lp.A, lp.b))
        if abs(-neg_max - 1.0) > FEAS_TOL:
            raise OracleMismatchError(f"off-target weight maximum is {-neg_max}, expected 1")
    return value


def plug_in_solution(mu) -> np.ndarray:
    """``lambda_{2^l} = (1 - mu_l)/2``, ``lambda_0`` = remainder, others zero."""
    mu = np.asarray(mu, dtype=float)
    lam = np.zeros(1 << mu.size)
    for l, v in enumerate(mu):
        lam[1 << l] = (1.0 - v) / 2.0
    lam[0] = 1.0 - lam.sum()
    return lam


def reconstruct_state(lam, g: GeneratorSet) -> np.ndarray:
    lam = np.asarray(lam, dtype=float)
    rho = np.zeros((1 << g.n, 1 << g.n), dtype=complex)
    for k, w in enumerate(lam):
        if w != 0.0:
            rho += w * eigenbasis_projector(g, k)
    return rho


def check_uniqueness_noiseless(g: GeneratorSet, tol: float = 1e-12) -> bool:
    """With all expectations equal to 1 the LP pins ``lambda = e_0`` and that state is rho_0."""
    value, lam = solve_lp(build_fidelity_lp(np.ones(g.n)))
    target = np.zeros_like(lam)
    target[0] = 1.0
    if abs(value - 1.0) > tol or np.max(np.abs(lam - target)) > tol:
        return False
    rho = reconstruct_state(lam, g)
    return bool(np.max(np.abs(rho - stabilizer_state_dense(g))) <= tol)


def dense_min_fidelity_check(mu, g: GeneratorSet, tol: float = 1e-9) -> float:
    """Rebuild the LP optimum as a dense state, verify it, and return its fidelity."""
    mu = np.asarray(mu, dtype=float)
    if g.n > 4:
        raise ValueError("dense minimum-fidelity check supports n <= 4")
    if mu.size != g.n:
        raise ValueError(f"{mu.size} expectation values for {g.n} generators")
    value, lam = solve_lp(build_fidelity_lp(mu))
    rho = reconstruct_state(lam, g)
    problems = []
    if np.linalg.eigvalsh(rho).min() < -tol:
        problems.append("not positive semidefinite")
    if abs(np.trace(rho).real - 1.0) > tol:
        problems.append("trace differs from 1")
    for l, p in enumerate(g.generators):
        got = np.trace(rho @ to_dense(p)).real
        if abs(got - mu[l]) > tol:
            problems.append(f"<P_{l}> = {got} instead of {mu[l]}")
    fid = float(np.trace(rho @ stabilizer_state_dense(g)).real)
    if abs(fid - value) > tol:
        problems.append(f"fidelity {fid} differs from LP optimum {value}")
    if problems:
        raise OracleMismatchError("; ".join(problems))
    return fid


# ---------------------------------------------------------------------------
# equivalence sweep


@dataclass(frozen=True)
class SweepRecord:
    n: int
    mu: tuple[float, ...]
    formula: float
    oracle: float

    @property
    def error(self) -> float:
        return abs(self.formula - self.oracle)


def boundary_vectors(n: int, rng: np.random.Generator, targets=(0.999, 1.0, 1.001)) -> list[np.ndarray]:
    """Vectors whose total deviation equals each target (skipped when unreachable)."""
    out = []
    for s in targets:
        if s > n:
            continue
        for _ in range(1000):
            d = rng.dirichlet(np.ones(n)) * s
            if np.all(d <= 1.0):
                out.append(1.0 - 2.0 * d)
                break
    return out


def near_target_vector(n: int, rng: np.random.Generator) -> np.ndarray:
    """Random vector with total deviation uniform in [0, 1]."""
    return 1.0 - 2.0 * rng.dirichlet(np.ones(n)) * rng.uniform(0.0, 1.0)


def oracle_sweep(formula, max_n: int = 4, trials: int = 200, seed: int = 0, fault: float = 0.0,
                 near_target: int = 50):
    """Compare ``formula(mu)`` with the LP optimum.

    Per ``n``: ``trials`` vectors uniform in [-1, 1]^n, ``near_target`` vectors
    with deviation at most 1, and the boundary vectors. ``fault`` is added to
    the formula value to self-test the harness.
    """
    rng = np.random.default_rng(seed)
    records = []
    for n in range(1, max_n + 1):
        vectors = [rng.uniform(-1.0, 1.0, n) for _ in range(trials)]
        vectors += [near_target_vector(n, rng) for _ in range(near_target)]
        vectors += boundary_vectors(n, rng)
        for mu in vectors:
            records.append(SweepRecord(n, tuple(float(v) for v in mu), formula(mu) + fault, lp_min_fidelity(mu)))
    return records
