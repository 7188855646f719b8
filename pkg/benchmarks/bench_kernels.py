"""Time the numba and numpy kernels side by side.

    python benchmarks/bench_kernels.py [--n 200000] [--degree 20] [--repeat 5]

Each kernel is called once first so numba compilation is not timed.  The
script also checks the two backends agree before printing the table.
"""
import argparse
import time

import numpy as np

from supportfn import _kernels
from supportfn.quadrature import disc_samples


def best_of(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=200_000, help="sample points")
    ap.add_argument("--degree", type=int, default=20, help="Gram basis degree")
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    z, _ = disc_samples(args.n, seed=1)
    w = np.random.default_rng(2).random(z.size)
    poles = np.array([0.0, 0.5 + 0.1j, -0.3j])
    alphas = np.array([1.0, 0.5, 0.25])

    cases = {
        "log_pole_sum": lambda b: _kernels.log_pole_sum(z, poles, alphas, True, backend=b),
        "weighted_gram": lambda b: _kernels.weighted_gram(z, 0.0, w, args.degree, backend=b),
    }
    backends = [b for b in ("numpy", "numba") if b in _kernels.IMPLEMENTATIONS]
    print(f"n={args.n} degree={args.degree} repeat={args.repeat}")
    print(f"{'kernel':<16}" + "".join(f"{b:>12}" for b in backends) + f"{'speedup':>10}")
    for name, fn in cases.items():
        ref = fn("numpy")
        for b in backends[1:]:
            got = fn(b)
            scale = np.abs(ref).max()
            assert np.allclose(got, ref, rtol=1e-10, atol=1e-12 * scale), f"{name}: {b} disagrees"
        secs = [best_of(lambda b=b: fn(b), args.repeat) for b in backends]
        speed = f"{secs[0] / secs[-1]:9.2f}x" if len(secs) > 1 else ""
        print(f"{name:<16}" + "".join(f"{1e3 * s:10.2f}ms" for s in secs) + f"{speed:>10}")


if __name__ == "__main__":
    main()
