"""Compare the compiled and numpy kernel backends.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--paths 10000] [--steps 200]

Prints best-of-``repeat`` wall times and the largest disagreement between
backends for each kernel.
"""
import argparse
import time

import numpy as np

from lambertmc import hedging, kernels
from lambertmc.market import AgentParams, preset
from lambertmc.mc import normals


def best_time(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--paths", type=int, default=10_000)
    ap.add_argument("--steps", type=int, default=200)
    ap.add_argument("--points", type=int, default=1_000_000)
    ap.add_argument("--threads", type=int, default=4, help="workers for the threaded simulate row")
    args = ap.parse_args(argv)

    try:
        fast = kernels.get_backend("cython")
    except ImportError:
        print("compiled backend not built; only the numpy backend is available")
        return 1
    slow = kernels.get_backend("numpy")

    x = np.geomspace(1e-8, 1e8, args.points)
    sc, lam = preset("table2")
    ag = AgentParams(0.1, lam)
    n = args.paths * args.steps
    zb = normals(1, 1, 0, n).reshape(args.paths, args.steps)
    zw = normals(1, 2, 0, n).reshape(args.paths, args.steps)
    hp_args = (zb, zw, sc.T, sc.r, sc.nu, sc.eta, sc.mu, sc.sigma, 0.2, ag.gamma, ag.lam, sc.s0, 0.0,
               kernels.STRATEGY_DETERMINISTIC)

    print(f"{'kernel':<16}{'numpy [s]':>12}{'cython [s]':>12}{'speedup':>10}{'max diff':>12}")
    for name, call in (
        (f"lambert_w x{args.points}", lambda m: m.lambert_w_array(x)),
        (f"hedge {args.paths}x{args.steps}", lambda m: m.hedge_paths(*hp_args)[0]),
    ):
        ts, rs = best_time(lambda: call(slow), args.repeat)
        tf, rf = best_time(lambda: call(fast), args.repeat)
        diff = float(np.max(np.abs(np.asarray(rs) - np.asarray(rf))))
        print(f"{name:<16}{ts:>12.4f}{tf:>12.4f}{ts / tf:>10.1f}{diff:>12.2e}")

    # whole backtest through the public API; the compiled kernel releases the GIL
    grid = hedging.SimGrid(n_steps=args.steps, n_paths=args.paths, seed=1, workers=args.threads)
    strat = hedging.StrategyConfig("deterministic")
    times = {}
    for name, mod in (("numpy", slow), ("cython", fast)):
        hedging.kernels.hedge_paths = mod.hedge_paths
        times[name] = best_time(lambda: hedging.simulate(sc, ag, 0.2, strat, grid), args.repeat)
    hedging.kernels.hedge_paths = kernels.get_backend().hedge_paths
    (ts, os_), (tf, of) = times["numpy"], times["cython"]
    diff = abs(os_.expected_utility.mean - of.expected_utility.mean)
    label = f"simulate {args.threads}thr"
    print(f"{label:<16}{ts:>12.4f}{tf:>12.4f}{ts / tf:>10.1f}{diff:>12.2e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
