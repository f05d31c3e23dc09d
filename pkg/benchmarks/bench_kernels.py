"""Compare the compiled and pure-Python kernels on the hot paths.

    python benchmarks/bench_kernels.py [--grid 33] [--repeat 3]

Times expression evaluation, surface generation (one adaptive quadrature per
grid point) and the stencil-based residual suite under each backend, and
checks that both produce the same numbers.
"""
import argparse
import time

import numpy as np

from minweier import _backend
from minweier.expr import parse_expr
from minweier.geometry import Sampler, residual_suite
from minweier.weierstrass import WeierstrassJob, generate_grid


def best_of(fn, repeat):
    best, result = np.inf, None
    for _ in range(repeat):
        t = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - t)
    return best, result


def workloads(n):
    prog = parse_expr("exp(z)*sin(z)/(z^2+3) + z^5").program
    zs = np.linspace(-1, 1, 20000) + 0.3j
    jobs = {e: WeierstrassJob(e, 0.1 + 0.1j, (0.1, 1.1, 0.1, 1.1), grid=(n, n))
            for e in ("z", "sin(z)", "z+z^3/3")}
    sampler = Sampler("z+z^3/3")
    x = np.linspace(0.2, 1.0, max(n // 3, 4))
    pts = (x[:, None] + 1j * x[None, :]).ravel()
    out = {"eval 20k points": lambda: _backend.eval_points(prog, zs, 1e-300)[0]}
    for e, job in jobs.items():
        out[f"generate {n}x{n} w={e}"] = lambda job=job: generate_grid(job).position
    out[f"residual suite, {pts.size} points"] = (
        lambda: residual_suite(sampler, pts, 1e-3)["canonical_form"].values)
    return out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--grid", type=int, default=33)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    try:
        from minweier import _ckernels  # noqa: F401
    except ImportError:
        raise SystemExit("compiled extension not built; nothing to compare against")

    tasks = workloads(args.grid)
    rows = []
    for name, fn in tasks.items():
        _backend.use_backend("cython")
        tc, rc = best_of(fn, args.repeat)
        _backend.use_backend("python")
        tp, rp = best_of(fn, max(1, args.repeat // 2))
        diff = float(np.nanmax(np.abs(np.asarray(rc) - np.asarray(rp))))
        rows.append((name, tc, tp, tp / tc, diff))
    _backend.use_backend("cython")

    print(f"threads: {_backend.thread_count()}")
    print(f"{'workload':40s} {'cython s':>10s} {'python s':>10s} {'speedup':>8s} {'max diff':>10s}")
    for name, tc, tp, sp, diff in rows:
        print(f"{name:40s} {tc:10.4f} {tp:10.4f} {sp:8.1f} {diff:10.1e}")


if __name__ == "__main__":
    main()
