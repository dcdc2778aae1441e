"""Time one Hamiltonian matvec with the compiled and the numpy kernels.

    python benchmarks/bench_kernels.py --sizes 12 16 20 --repeat 5
"""

import argparse
import time

import numpy as np

from factorlat import kernels
from factorlat.lattice import LatticeSpec
from factorlat.model import Hamiltonian, ModelParams


def best_time(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases(n, threads):
    lat = LatticeSpec.chain(n)
    real = Hamiltonian(ModelParams.for_lattice(lat, delta_y=0.25, field=(0, 0, 3.0)),
                       lat, n_threads=threads)
    cplx = Hamiltonian(ModelParams.for_lattice(lat, delta_y=0.25, field=(0.2, 0.3, 3.0)),
                       lat, n_threads=threads)
    rng = np.random.default_rng(0)
    sec = real.sector(1)
    x = rng.normal(size=sec.dim)
    v = rng.normal(size=real.dim)
    w = v + 1j * rng.normal(size=real.dim)
    return [("real", lambda b: real.apply(v, backend=b)),
            ("complex", lambda b: cplx.apply(w, backend=b)),
            ("sector", lambda b: sec.apply(x, backend=b))]


def main():
    ap = argparse.ArgumentParser(description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--sizes", type=int, nargs="+", default=[12, 16, 20])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()
    if kernels.BACKEND != "cython":
        raise SystemExit("compiled kernels unavailable; build the extension first")

    print(f"{'N':>3} {'kernel':>8} {'cython [s]':>12} {'python [s]':>12} {'speedup':>8}")
    for n in args.sizes:
        for name, fn in cases(n, args.threads):
            tc = best_time(lambda: fn("cython"), args.repeat)
            tp = best_time(lambda: fn("python"), args.repeat)
            print(f"{n:>3} {name:>8} {tc:12.4g} {tp:12.4g} {tp / tc:8.2f}")


if __name__ == "__main__":
    main()
