"""Time one right-hand-side evaluation per backend and cutoff.

    python benchmarks/bench_kernel.py [--cutoffs 16 32 64 128] [--threads 1 4]
"""

import argparse
import timeit

import numpy as np

from dwke import kernel
from dwke.spectrum import random_spectrum


def bench(F, backend, threads, repeat):
    call = lambda: kernel.rhs(F, backend=backend, threads=threads)  # noqa: E731
    number = max(1, int(0.2 / max(timeit.timeit(call, number=1), 1e-6)))
    return min(timeit.repeat(call, number=number, repeat=repeat)) / number


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--cutoffs", type=int, nargs="+", default=[16, 32, 64, 128])
    ap.add_argument("--threads", type=int, nargs="+", default=[1])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    backends = sorted(kernel.BACKENDS)
    print(f"{'K':>5} {'threads':>7} " + " ".join(f"{b + ' [ms]':>15}" for b in backends) + f" {'speedup':>8}")
    for K in args.cutoffs:
        F = random_spectrum(rng, K, density=1.0).values
        ref = kernel.rhs(F, backend="python")
        for b in backends:
            assert np.allclose(kernel.rhs(F, backend=b), ref, rtol=1e-12, atol=1e-15)
        for th in args.threads:
            t = {b: bench(F, b, th, args.repeat) for b in backends}
            speed = t["python"] / t["compiled"] if "compiled" in t else float("nan")
            print(f"{K:>5} {th:>7} " + " ".join(f"{1e3 * t[b]:>15.3f}" for b in backends) + f" {speed:>8.1f}")


if __name__ == "__main__":
    main()
