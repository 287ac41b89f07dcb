"""Times the compiled responsibility kernel against the NumPy fallback.

Both implementations are imported directly so the comparison does not
depend on the EMBMIX_NO_EXT switch.  Each cell reports the best of
--repeat timed runs after one warm-up call, and the outputs are checked
for agreement before anything is timed.

Usage: python benchmarks/bench_kernels.py [--repeat 5] [--quick]
"""

import argparse
import time

import numpy as np

from embmix.mixture import _kernels_np

try:
    from embmix.mixture import _kernels
except ImportError:
    _kernels = None

SHAPES = [
    # (rows, dims, components)
    (2000, 32, 4),
    (2000, 128, 10),
    (10000, 128, 10),
    (10000, 768, 14),
    (2000, 1024, 14),
]

QUICK_SHAPES = SHAPES[:3]


def build_problem(seed, n, d, k):
    rng = np.random.default_rng(seed)
    X = np.ascontiguousarray(rng.normal(size=(n, d)))
    means = np.ascontiguousarray(rng.normal(size=(k, d)))
    chols = np.empty((k, d, d))
    for i in range(k):
        a = rng.normal(size=(d, d)) / np.sqrt(d)
        chols[i] = np.linalg.cholesky(a @ a.T + np.eye(d))
    logw = rng.normal(size=k)
    qcoef = np.abs(rng.normal(size=k)) + 0.5
    return X, means, np.ascontiguousarray(chols), logw, qcoef


def run_once(impl, problem):
    X, means, chols, logw, qcoef = problem
    resp = np.empty((X.shape[0], means.shape[0]))
    started = time.perf_counter()
    total = impl.cluster_logresp(X, means, chols, logw, qcoef, resp)
    return time.perf_counter() - started, resp, total


def best_time(impl, problem, repeat):
    run_once(impl, problem)  # warm-up
    return min(run_once(impl, problem)[0] for _ in range(repeat))


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5, help="timed runs per cell")
    parser.add_argument("--quick", action="store_true", help="small shapes only")
    args = parser.parse_args()

    if _kernels is None:
        print("compiled kernel not built; timing the NumPy fallback only")
    shapes = QUICK_SHAPES if args.quick else SHAPES

    header = f"{'rows':>6} {'dims':>5} {'comp':>5} {'numpy':>10} {'compiled':>10} {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for n, d, k in shapes:
        problem = build_problem(0, n, d, k)
        _, resp_np, total_np = run_once(_kernels_np, problem)
        if _kernels is not None:
            _, resp_c, total_c = run_once(_kernels, problem)
            if not np.allclose(resp_c, resp_np, atol=1e-12) or not np.isclose(
                total_c, total_np, rtol=1e-10
            ):
                raise SystemExit(f"backend disagreement at shape {(n, d, k)}")
        t_np = best_time(_kernels_np, problem, args.repeat)
        if _kernels is None:
            print(f"{n:>6} {d:>5} {k:>5} {t_np * 1e3:>8.2f}ms {'-':>10} {'-':>8}")
            continue
        t_c = best_time(_kernels, problem, args.repeat)
        print(
            f"{n:>6} {d:>5} {k:>5} {t_np * 1e3:>8.2f}ms {t_c * 1e3:>8.2f}ms "
            f"{t_np / t_c:>7.2f}x"
        )


if __name__ == "__main__":
    main()
