"""Compare the compiled and numpy kernels on the Polyak hot loop.

    python benchmarks/bench_kernels.py [--repeats 5] [--iters 2000]

Each row times ``polyak_loop`` for a fixed iteration count (``f_stop = 0`` so
no run stops early) and a single value-and-subgradient evaluation.
"""

import argparse
import timeit

from bdlandscape import _backend
from bdlandscape.experiments import init_gaussian
from bdlandscape.linalg import SignalPair, child_rng
from bdlandscape.sample import generate_measurements

SIZES = [(10, 10, 160), (50, 25, 300), (100, 50, 1200), (200, 100, 2400)]


def bench(name, d1, d2, m, iters, repeats):
    k = _backend.get_kernels(name)
    truth = SignalPair.canonical(d1, d2)
    ens = generate_measurements(child_rng(0, 0), truth, m)
    init = init_gaussian(child_rng(0, 1), 16.0, d1, d2)
    args = (ens.A, ens.B, ens.y)

    def loop():
        w, x = init.w.copy(), init.x.copy()
        k.polyak_loop(*args, w, x, truth.w, truth.x, iters, 0.0, 0.0, 0)

    def single():
        k.sample_value_and_subgradient(*args, init.w, init.x)

    t_loop = min(timeit.repeat(loop, number=1, repeat=repeats)) / iters
    n = 200
    t_one = min(timeit.repeat(single, number=n, repeat=repeats)) / n
    return t_loop, t_one


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--iters", type=int, default=2000)
    args = ap.parse_args()
    names = sorted(_backend.BACKENDS)
    if "cython" not in names:
        print("compiled extension not built; timing the numpy kernels only")
    print(f"{'d1':>4} {'d2':>4} {'m':>5}  " + "  ".join(f"{n + ' us/iter':>16} {n + ' us/eval':>16}" for n in names) + "  speedup")
    for d1, d2, m in SIZES:
        res = {n: bench(n, d1, d2, m, args.iters, args.repeats) for n in names}
        cols = "  ".join(f"{res[n][0] * 1e6:16.2f} {res[n][1] * 1e6:16.2f}" for n in names)
        speed = res["python"][0] / res["cython"][0] if "cython" in res else float("nan")
        print(f"{d1:>4} {d2:>4} {m:>5}  {cols}  {speed:6.1f}x")


if __name__ == "__main__":
    main()
