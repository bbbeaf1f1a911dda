"""Time every kernel in its numba-compiled and numpy form.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Compilation happens in a warm-up call that is not timed. Without numba only
the numpy column is filled.
"""

import argparse
import timeit

import numpy as np

from stabcert import kernels
from stabcert.certification import EBStopConfig


def cases(rng):
    n = 12
    psi = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    psi /= np.linalg.norm(psi)
    U1 = np.ascontiguousarray(np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2))
    U2 = np.ascontiguousarray(np.eye(4, dtype=complex)[[0, 1, 3, 2]])
    shots, nq = 200_000, 5
    outcomes = rng.integers(0, 1 << nq, shots).astype(np.int64)
    uniforms = rng.random((shots, nq))
    p = np.full(nq, 0.01)
    words = rng.integers(0, 2**63, (64, 2), dtype=np.int64).astype(np.uint64)
    T = rng.normal(size=(80, 300))
    cfg = EBStopConfig()
    x = np.where(rng.random(400_000) < 0.5, 1.0, -1.0)
    eb = (x, 0.002, 0.1, cfg.t0, cfg.growth_num, cfg.growth_den, cfg.power, cfg.budget_constant, cfg.value_range)
    return {
        "apply_1q": (lambda: (psi, U1, 5, n), "n=12 state, one Hadamard"),
        "apply_2q": (lambda: (psi, U2, 2, 9, n), "n=12 state, one CNOT"),
        "flip_bits": (lambda: (outcomes, uniforms, p, p, nq), "200k shots, 5 qubits"),
        "gf2_rank": (lambda: (words, 128), "64 x 128 bit matrix"),
        "pivot": (lambda: (T.copy(), 3, 7), "80 x 300 tableau"),
        "ebstop_scan": (lambda: eb, "400k-sample fair stream"),
    }


def bench(fn, make_args, repeat):
    fn(*make_args())  # warm-up / compile
    number = 3
    best = min(timeit.repeat(lambda: fn(*make_args()), number=number, repeat=repeat)) / number
    return best * 1e3


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    print(f"{'kernel':<12} {'workload':<26} {'numba ms':>10} {'numpy ms':>10} {'speedup':>8}")
    for name, (make_args, label) in cases(rng).items():
        compiled, fallback = kernels.KERNELS[name]
        t_np = bench(fallback, make_args, args.repeat)
        if compiled is None:
            print(f"{name:<12} {label:<26} {'-':>10} {t_np:>10.3f} {'-':>8}")
            continue
        t_nb = bench(compiled, make_args, args.repeat)
        print(f"{name:<12} {label:<26} {t_nb:>10.3f} {t_np:>10.3f} {t_np / t_nb:>7.1f}x")


if __name__ == "__main__":
    main()
